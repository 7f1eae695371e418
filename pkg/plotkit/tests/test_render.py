import json
from pathlib import Path

import pytest

from plotkit import FigureSpec, SchemaError, load_spec, render


def _write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError, match="unknown figure kind"):
        FigureSpec(kind="pie", inputs={}, output=str(tmp_path / "x"))
    with pytest.raises(ValueError, match="needs inputs"):
        FigureSpec(kind="scaling", inputs={"scaling_csv": "x"}, output=str(tmp_path / "x"))


def test_schema_error_names_missing_column(tmp_path):
    bad = _write(tmp_path / "scaling.csv", "model,j,n_levels\nboa,5,10\n")
    fit = _write(tmp_path / "fit.csv", "model,alpha,residual,intercept\nboa,1.0,0.0,0.0\n")
    spec = FigureSpec(
        kind="scaling",
        inputs={"scaling_csv": str(bad), "fit_csv": str(fit)},
        output=str(tmp_path / "fig"),
    )
    with pytest.raises(SchemaError, match="mean_delta_e"):
        render(spec)


def test_schema_error_on_missing_file(tmp_path):
    spec = FigureSpec(
        kind="scaling",
        inputs={"scaling_csv": str(tmp_path / "nope.csv"), "fit_csv": str(tmp_path / "nope2.csv")},
        output=str(tmp_path / "fig"),
    )
    with pytest.raises(SchemaError, match="not found"):
        render(spec)


def test_scaling_synthetic_power_law(tmp_path):
    # exact j^-1 data: fitted slope -1, annotated "1.00"
    rows = "\n".join(f"boa,{j},{1.0 / j},10" for j in range(5, 16))
    scaling = _write(tmp_path / "scaling.csv", "model,j,mean_delta_e,n_levels\n" + rows + "\n")
    fit = _write(tmp_path / "fit.csv", "model,alpha,residual,intercept\nboa,1.0,0.0,0.0\n")
    spec = FigureSpec(
        kind="scaling",
        inputs={"scaling_csv": str(scaling), "fit_csv": str(fit)},
        output=str(tmp_path / "figs" / "scaling"),
    )
    result = render(spec)
    assert result.annotations["alpha"] == 1.0
    assert result.annotations["alpha_label"] == "1.00"
    for p in result.paths:
        assert Path(p).stat().st_size > 0


def test_peres_and_overlay_from_real_csvs(tmp_path, csv_dir):
    peres = csv_dir / "case_a" / "peres.csv"
    spec = FigureSpec(kind="peres", inputs={"peres_csv": str(peres)}, output=str(tmp_path / "f1"))
    res = render(spec)
    assert res.annotations["n_points"] > 0
    spec2 = FigureSpec(
        kind="overlay",
        inputs={"peres_csv": str(peres), "semiclassical_csv": str(csv_dir / "case_a" / "semiclassical.csv")},
        output=str(tmp_path / "f2"),
        axis={"e_min": -13.0, "e_max": 0.0},
    )
    res2 = render(spec2)
    assert res2.annotations["n_curves"] >= 1
    for p in res.paths + res2.paths:
        assert Path(p).exists()


def test_render_is_idempotent_and_does_not_mutate_inputs(tmp_path, csv_dir):
    peres = csv_dir / "case_a" / "peres.csv"
    before = peres.read_bytes()
    spec = FigureSpec(kind="peres", inputs={"peres_csv": str(peres)}, output=str(tmp_path / "f"))
    r1 = render(spec)
    svg1 = Path(r1.paths[1]).read_bytes()
    r2 = render(spec)
    svg2 = Path(r2.paths[1]).read_bytes()
    assert peres.read_bytes() == before
    assert svg1 == svg2


def test_load_spec_roundtrip(tmp_path, csv_dir):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(
        json.dumps(
            {
                "kind": "peres",
                "inputs": {"peres_csv": str(csv_dir / "case_b" / "peres.csv")},
                "output": str(tmp_path / "fig"),
                "axis": {"e_min": -13.0},
                "title": "invariant lattice",
            }
        )
    )
    spec = load_spec(spec_path)
    assert spec.kind == "peres" and spec.title == "invariant lattice"
    render(spec)


def test_cli(tmp_path, csv_dir):
    from plotkit.cli import main

    spec_path = tmp_path / "spec.json"
    spec_path.write_text(
        json.dumps(
            {
                "kind": "overlay",
                "inputs": {
                    "peres_csv": str(csv_dir / "case_b" / "peres.csv"),
                    "semiclassical_csv": str(csv_dir / "case_b" / "semiclassical.csv"),
                },
                "output": str(tmp_path / "cli_fig"),
            }
        )
    )
    assert main(["render", str(spec_path)]) == 0
    assert (tmp_path / "cli_fig.png").exists()
    assert (tmp_path / "cli_fig.svg").exists()
