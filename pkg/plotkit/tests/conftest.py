from pathlib import Path

import pytest

# artifacts left behind by the primary package's acceptance suite, if it ran here
PRIMARY_ARTIFACTS = Path(__file__).resolve().parents[2] / "artifacts" / "acceptance"


@pytest.fixture(scope="session")
def csv_dir(tmp_path_factory):
    """Real experiment CSVs: the primary acceptance artifacts when present,
    otherwise regenerated at small scale through the primary package."""
    if (PRIMARY_ARTIFACTS / "case_a" / "peres.csv").exists():
        return PRIMARY_ARTIFACTS
    root = tmp_path_factory.mktemp("csvs")
    from dicke_bands.config import build_config
    from dicke_bands.experiments import run_peres_experiment, run_scaling_study

    cfg = build_config(
        overrides=dict(
            omega=1.0, omega0=1.0, coupling_ratio_f=5.0, j=2.0,
            energy_ceiling_norm=-0.5, j_list=(2.0, 3.0, 4.0),
        )
    )
    run_peres_experiment(cfg, root / "case_a")
    run_peres_experiment(cfg, root / "case_b")
    run_scaling_study(cfg, root / "scaling")
    return root
