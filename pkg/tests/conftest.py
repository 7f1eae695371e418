import hypothesis
import numpy as np
import pytest

from dicke_bands.config import build_config
from dicke_bands.experiments import get_bundle

hypothesis.settings.register_profile(
    "numeric", max_examples=30, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("numeric")


@pytest.fixture(scope="session")
def small_resonant_bundle():
    """j=3, f=5 resonant: big enough to show bands/doublets, solves in seconds."""
    cfg = build_config(
        overrides=dict(omega=1.0, omega0=1.0, coupling_ratio_f=5.0, j=3.0, energy_ceiling_norm=-1.0)
    )
    return cfg, get_bundle(cfg)


@pytest.fixture(scope="session")
def decoupled_bundle():
    """gamma=0 with irrational omega0/omega so the product spectrum is nondegenerate."""
    cfg = build_config(
        overrides=dict(omega=1.0, omega0=float(np.sqrt(2.0)), gamma=0.0, j=2.0,
                       n_max=40, energy_ceiling_norm=20.0)
    )
    return cfg, get_bundle(cfg)
