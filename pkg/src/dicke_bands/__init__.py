"""Adiabatic band analysis of the Dicke model: exact spectra, the rotated-spin
invariant and its band weights, semiclassical requantization, and harmonic
baselines, plus the experiment drivers that compare them."""

from .params import ModelParams, DerivedScales, RegimeReport, derive_scales, regime_report
from .operators import (
    BasisSpec,
    SparseOperator,
    build_boson_ops,
    build_spin_ops,
    build_hamiltonian,
    parity_blocks,
    suggest_n_max,
)
from .spectrum import (
    SpectrumResult,
    PeresPoint,
    diagonalize,
    certify_convergence,
    expectation,
    peres_lattice,
)
from .invariant import (
    BandProjectorSet,
    BandWeights,
    build_band_projectors,
    band_weights,
    jzprime_peres,
    verify_projector_algebra,
    commutation_quality,
)
from .bands import (
    BandPotential,
    QuantizedLevel,
    TurningRegion,
    NearSeparatrixError,
    turning_points,
    action_integral,
    classical_period,
    requantize_band,
    semiclassical_average,
    barrier_diagnostics,
)
from .quadratic import NormalModes, band_harmonic_levels, normal_mode_frequencies, harmonic_spectrum

__all__ = [name for name in dir() if not name.startswith("_")]
