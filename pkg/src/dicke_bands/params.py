"""Physical parameters of the spin-boson model and their derived frequency scales.

Conventions (hbar = 1): a single bosonic mode of frequency ``omega`` couples to a
collective pseudospin of length ``j`` with level splitting ``omega0`` and coupling
``gamma``.  The critical coupling of the superradiant transition is
``gamma_c = sqrt(omega*omega0)/2`` and ``f = gamma/gamma_c`` measures the distance
from it.  Everything downstream works with ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ModelParams:
    """The four physical inputs: boson frequency, level splitting, coupling, spin."""

    omega: float
    omega0: float
    gamma: float
    j: float

    def __post_init__(self):
        if not (self.omega > 0.0):
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not (self.omega0 > 0.0):
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        two_j = 2.0 * self.j
        if two_j <= 0 or abs(two_j - round(two_j)) > 1e-12:
            raise ValueError(f"2j must be a positive integer, got j={self.j}")

    @classmethod
    def from_f(cls, omega: float, omega0: float, f: float, j: float) -> "ModelParams":
        """Build params from the coupling ratio f = gamma/gamma_c."""
        gamma_c = math.sqrt(omega * omega0) / 2.0
        return cls(omega=omega, omega0=omega0, gamma=f * gamma_c, j=j)

    @property
    def gamma_c(self) -> float:
        return math.sqrt(self.omega * self.omega0) / 2.0

    @property
    def f(self) -> float:
        return self.gamma / self.gamma_c

    @property
    def spin_dim(self) -> int:
        return int(round(2.0 * self.j)) + 1

    @property
    def energy_scale(self) -> float:
        """j*omega0, the normalization used for all energy axes."""
        return self.j * self.omega0


@dataclass(frozen=True)
class DerivedScales:
    """Frequency scales of the superradiant ground well.

    ``omega_B`` is the small-oscillation frequency of the boson in the lowest
    adiabatic band, ``omega_A`` the pseudospin precession frequency at the well
    minimum, and ``validity_ratio = omega_A/omega_B`` controls how well the
    slow/fast separation holds.  For f <= 1 (normal phase) omega_B and the ratio
    are undefined and stored as NaN (omega_B = 0.0 exactly at f = 1).
    """

    gamma_c: float
    f: float
    omega_A: float
    omega_B: float
    validity_ratio: float
    e_gs_classical: float

    @property
    def superradiant(self) -> bool:
        return self.f > 1.0


def derive_scales(params: ModelParams) -> DerivedScales:
    """Compute the derived scales for one parameter set."""
    f = params.f
    if f > 1.0:
        omega_A = params.omega0 * f**2
        omega_B = params.omega * math.sqrt(1.0 - f**-4)
        validity_ratio = omega_A / omega_B
        e_gs = -(f**2 + f**-2) / 2.0
    else:
        omega_A = params.omega0  # precession at the q=0 minimum
        omega_B = 0.0 if f == 1.0 else math.nan
        validity_ratio = math.nan
        e_gs = -1.0
    return DerivedScales(
        gamma_c=params.gamma_c,
        f=f,
        omega_A=omega_A,
        omega_B=omega_B,
        validity_ratio=validity_ratio,
        e_gs_classical=e_gs,
    )


@dataclass(frozen=True)
class RegimeReport:
    phase: str  # "normal" or "superradiant"
    validity_ratio: float
    boa_valid: bool
    threshold: float


def regime_report(params: ModelParams, threshold: float = 5.0) -> RegimeReport:
    """Label the phase and decide whether the adiabatic separation is expected to hold.

    The underlying condition is only an order-of-magnitude inequality; the
    numeric cutoff (default 5) is a documented analysis choice.
    """
    scales = derive_scales(params)
    phase = "superradiant" if scales.superradiant else "normal"
    valid = bool(scales.validity_ratio >= threshold) if math.isfinite(scales.validity_ratio) else False
    return RegimeReport(
        phase=phase,
        validity_ratio=scales.validity_ratio,
        boa_valid=valid,
        threshold=threshold,
    )
