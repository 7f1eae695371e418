"""Plain-text key-value run configuration.

Files look like::

    # resonant strong-coupling case
    omega = 1.0
    omega0 = 1.0
    coupling_ratio_f = 5.0
    j = 15
    n_max = auto
    maslov_index = 2
    tail_tolerance = 1e-8

Either ``coupling_ratio_f`` or ``gamma`` fixes the coupling.  Any key can be
overridden by a CLI flag of the same name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .params import ModelParams

# the paper's two canonical parameter sets
CASE_PRESETS = {
    "a": dict(omega=1.0, omega0=5.0, coupling_ratio_f=3.0, j=15.0),
    "b": dict(omega=1.0, omega0=1.0, coupling_ratio_f=5.0, j=15.0),
}

_BOOL_WORDS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs beyond the physical parameters themselves."""

    omega: float = 1.0
    omega0: float = 1.0
    coupling_ratio_f: float | None = None
    gamma: float | None = None
    j: float = 15.0
    n_max: int | None = None  # None -> suggest_n_max heuristic
    maslov_index: int = 2
    tail_tolerance: float = 1e-8
    guard_fraction: float = 0.1
    npc_threshold: float = 1.1
    band_confidence_min: float = 0.5
    validity_threshold: float = 5.0
    energy_ceiling_norm: float = 0.0  # analysis ceiling in units of j*omega0
    window_low: float = -8.0
    window_high: float = -6.0
    quadrature_rtol: float = 1e-10
    j_list: tuple[float, ...] = field(default_factory=lambda: tuple(float(v) for v in range(5, 16)))
    workers: int = 1
    outdir: str = "out"

    def params(self) -> ModelParams:
        if (self.coupling_ratio_f is None) == (self.gamma is None):
            raise ValueError("exactly one of coupling_ratio_f / gamma must be set")
        if self.gamma is not None:
            return ModelParams(self.omega, self.omega0, self.gamma, self.j)
        return ModelParams.from_f(self.omega, self.omega0, self.coupling_ratio_f, self.j)


def _coerce(name: str, text: str):
    """Parse one raw value string according to the field it targets."""
    text = text.strip()
    if name == "j_list":
        return tuple(float(tok) for tok in text.replace(",", " ").split())
    if name in ("n_max",):
        return None if text.lower() in ("auto", "none") else int(text)
    if name in ("maslov_index", "workers"):
        return int(text)
    if name in ("outdir",):
        return text
    if name in ("coupling_ratio_f", "gamma") and text.lower() in ("auto", "none"):
        return None
    low = text.lower()
    if low in _BOOL_WORDS:
        return _BOOL_WORDS[low]
    return float(text)


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment; blank lines ignored."""
    known = {f.name for f in fields(RunConfig)} | {"case"}
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in known:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        out[key] = value.strip() if key == "case" else _coerce(key, value)
    return out


def load_config(path: str | Path) -> dict:
    return parse_config_text(Path(path).read_text())


def build_config(
    file: str | Path | None = None,
    case: str | None = None,
    overrides: dict | None = None,
) -> RunConfig:
    """Layer configuration sources: case preset < config file < CLI overrides."""
    data: dict = {}
    file_data = load_config(file) if file is not None else {}
    case = file_data.pop("case", case) if "case" in file_data else case
    if case is not None:
        if case not in CASE_PRESETS:
            raise ValueError(f"unknown case {case!r}; expected one of {sorted(CASE_PRESETS)}")
        data.update(CASE_PRESETS[case])
    data.update(file_data)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    if data.get("gamma") is not None and "coupling_ratio_f" not in (overrides or {}):
        # an explicit gamma wins over a preset-supplied ratio
        data["coupling_ratio_f"] = None
    if data.get("coupling_ratio_f") is None and data.get("gamma") is None:
        raise ValueError("one of coupling_ratio_f / gamma is required")
    cfg = RunConfig(**data)
    if not math.isfinite(cfg.energy_ceiling_norm):
        raise ValueError("energy_ceiling_norm must be finite")
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(RunConfig)}


def with_updates(cfg: RunConfig, **kwargs) -> RunConfig:
    return replace(cfg, **kwargs)
