"""Figure specifications and CSV schema validation.

A figure spec is a small JSON file naming the figure kind, the input CSVs, the
energy axis range (in E/(j*omega0)) and the output stem; rendering emits both
PNG and SVG next to that stem.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

KINDS = ("peres", "overlay", "scaling")

REQUIRED_COLUMNS = {
    "peres_csv": ["state_index", "parity", "energy_norm", "observable_name", "value", "npc", "converged"],
    "bands_csv": ["state_index", "energy_norm", "band", "band_confidence", "npc"],
    "semiclassical_csv": ["m_prime", "energy_norm", "observable_name", "value"],
    "scaling_csv": ["model", "j", "mean_delta_e", "n_levels"],
    "fit_csv": ["model", "alpha", "residual", "intercept"],
}

KIND_INPUTS = {
    "peres": ["peres_csv"],
    "overlay": ["peres_csv", "semiclassical_csv"],
    "scaling": ["scaling_csv", "fit_csv"],
}


class SchemaError(ValueError):
    """An input CSV does not carry the columns its role requires."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: dict[str, str]
    output: str
    axis: dict[str, float] = field(default_factory=dict)
    observable: str = "adag_a"
    title: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        missing = [role for role in KIND_INPUTS[self.kind] if role not in self.inputs]
        if missing:
            raise ValueError(f"{self.kind} figure needs inputs: {missing}")


def load_spec(path: str | Path) -> FigureSpec:
    data = json.loads(Path(path).read_text())
    return FigureSpec(
        kind=data["kind"],
        inputs=data["inputs"],
        output=data["output"],
        axis=data.get("axis", {}),
        observable=data.get("observable", "adag_a"),
        title=data.get("title", ""),
    )


def read_table(path: str | Path, role: str) -> dict[str, list]:
    """Read one CSV into columns, validating the schema for its role."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{role}: file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{role}: {path} is empty") from None
        for col in REQUIRED_COLUMNS[role]:
            if col not in header:
                raise SchemaError(f"{role}: {path} is missing required column {col!r}")
        rows = list(reader)
    table: dict[str, list] = {}
    for i, col in enumerate(header):
        table[col] = [row[i] for row in rows]
    return table


def floats(table: dict[str, list], col: str) -> list[float]:
    return [float(x) if x != "" else float("nan") for x in table[col]]
