"""Effective one-dimensional bands: potentials, actions, requantization, averages.

Each band mp carries the classical Hamiltonian

    E_mp(p, q) = (omega/2)(p^2 + q^2) + omega_P(q) * mp,
    omega_P(q) = omega0 * sqrt(1 + (omega/(j*omega0)) f^2 q^2),

with q, p the dimensionless boson quadratures (a = (q+ip)/sqrt(2)).  Bands with
mp < -j/f^2 develop a symmetric double well with barrier energy omega0*mp at
q = 0; the barrier orbit is the band's separatrix and carries its own
excited-state singularity.

Action integrals use the substitution q = mid + half*sin(phi), which absorbs
the inverse-square-root turning-point behavior, then Gauss-Legendre with order
doubling (adaptive quadrature as a fallback near the separatrix).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.integrate
from scipy.optimize import brentq

from .params import ModelParams

_GL_ORDERS = (64, 128, 256, 512, 1024, 2048, 4096)


class NearSeparatrixError(RuntimeError):
    """Requested quadrature too close to the separatrix energy."""


@lru_cache(maxsize=None)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


@dataclass(frozen=True)
class BandPotential:
    """One adiabatic band's effective potential and precession frequency."""

    params: ModelParams
    m_prime: float

    def __post_init__(self):
        mp = self.m_prime
        j = self.params.j
        if abs(mp) > j + 1e-9 or abs((mp + j) - round(mp + j)) > 1e-9:
            raise ValueError(f"m_prime must be in -j..j in integer steps, got {mp}")

    @property
    def _beta(self) -> float:
        p = self.params
        return p.omega * p.f**2 / (p.j * p.omega0)

    def omega_p(self, q):
        """Precession frequency of the pseudospin at frozen q."""
        return self.params.omega0 * np.sqrt(1.0 + self._beta * np.square(q))

    def value(self, q):
        return 0.5 * self.params.omega * np.square(q) + self.m_prime * self.omega_p(q)

    def momentum_sq(self, q, energy: float):
        return 2.0 * (energy - self.value(q)) / self.params.omega

    @property
    def curvature_origin(self) -> float:
        """V''(0) = omega (1 + mp f^2 / j); negative means a double well."""
        p = self.params
        return p.omega * (1.0 + self.m_prime * p.f**2 / p.j)

    @property
    def is_double_well(self) -> bool:
        # tolerance absorbs float noise exactly at mp = -j/f^2, where the well
        # depth is already far below any other scale in the problem
        return self.curvature_origin < -1e-12 * self.params.omega

    @property
    def barrier_energy(self) -> float:
        if not self.is_double_well:
            raise ValueError("single-well band has no barrier")
        return self.params.omega0 * self.m_prime

    @property
    def q_min(self) -> float:
        """Location (>0) of the well minimum; 0 for single-well bands."""
        if not self.is_double_well:
            return 0.0
        p = self.params
        ratio = self.m_prime * p.f**2 / p.j  # < -1 for a double well
        return math.sqrt((p.j * p.omega0 / p.omega) * (ratio**2 - 1.0) / p.f**2)

    @property
    def v_min(self) -> float:
        return float(self.value(self.q_min))


@dataclass(frozen=True)
class TurningRegion:
    q_lo: float
    q_hi: float
    kind: str  # left-well | right-well | above-barrier | single-well
    near_separatrix: bool = False


@dataclass(frozen=True)
class BarrierInfo:
    has_barrier: bool
    e_barrier_norm: float  # omega0*mp/(j*omega0) = mp/j; NaN when absent


def barrier_diagnostics(band: BandPotential) -> BarrierInfo:
    if band.is_double_well:
        return BarrierInfo(True, band.m_prime / band.params.j)
    return BarrierInfo(False, math.nan)


def default_eps_sep(params: ModelParams) -> float:
    return 1e-9 * params.energy_scale


def _outer_bracket(band: BandPotential, energy: float, q_start: float) -> float:
    q = max(q_start, 1.0)
    for _ in range(200):
        if band.value(q) > energy:
            return q
        q *= 2.0
    raise RuntimeError("no outer turning point found (energy too high?)")


def _root(band: BandPotential, energy: float, lo: float, hi: float) -> float:
    scale = max(1.0, abs(lo), abs(hi))
    return brentq(lambda q: band.value(q) - energy, lo, hi, xtol=1e-12 * scale, rtol=4 * np.finfo(float).eps)


def turning_points(band: BandPotential, energy: float, eps_sep: float | None = None) -> list[TurningRegion]:
    """Classically allowed q-regions at this energy (empty below the band minimum)."""
    if eps_sep is None:
        eps_sep = default_eps_sep(band.params)
    if energy <= band.v_min:
        return []
    if not band.is_double_well:
        q_hi = _root(band, energy, 0.0, _outer_bracket(band, energy, 1.0))
        return [TurningRegion(-q_hi, q_hi, "single-well")]
    e_barrier = band.barrier_energy
    near = abs(energy - e_barrier) <= eps_sep
    q_min = band.q_min
    q_out = _root(band, energy, q_min, _outer_bracket(band, energy, 2.0 * q_min))
    if energy < e_barrier:
        q_in = _root(band, energy, 0.0, q_min)
        return [
            TurningRegion(-q_out, -q_in, "left-well", near),
            TurningRegion(q_in, q_out, "right-well", near),
        ]
    return [TurningRegion(-q_out, q_out, "above-barrier", near)]


# ---------------------------------------------------------------------------
# orbit quadrature

def _orbit_quadrature(fn, q_lo: float, q_hi: float, rtol: float) -> float:
    """Integrate fn(q) over (q_lo, q_hi) with the turning-point sin substitution.

    fn must be vectorized and integrable with at worst inverse-square-root
    endpoint behavior.
    """
    mid = 0.5 * (q_hi + q_lo)
    half = 0.5 * (q_hi - q_lo)

    def g(phi):
        return fn(mid + half * np.sin(phi)) * half * np.cos(phi)

    prev = None
    prev_delta = None
    for order in _GL_ORDERS:
        x, w = _leggauss(order)
        val = float(np.dot(w, g(0.5 * math.pi * x)) * 0.5 * math.pi)
        if prev is not None:
            delta = abs(val - prev)
            scale_val = max(abs(val), 1e-300)
            if delta <= rtol * scale_val:
                return val
            # refinement stalled inside the E - V cancellation noise floor
            if prev_delta is not None and delta >= 0.25 * prev_delta and delta <= 1e-6 * scale_val:
                return val
            prev_delta = delta
        prev = val
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
        val, _err = scipy.integrate.quad(g, -0.5 * math.pi, 0.5 * math.pi, epsrel=rtol, limit=800)
    return float(val)


def _momentum_sq_floor(band: BandPotential, energy: float):
    floor = 1e-18 * max(abs(energy), 1.0)

    def p_sq(q):
        return np.maximum(band.momentum_sq(q, energy), floor)

    return p_sq


def action_integral(
    band: BandPotential,
    energy: float,
    region: TurningRegion,
    rtol: float = 1e-10,
    allow_near_separatrix: bool = False,
) -> float:
    """S(E) = 2 int p dq over one classically allowed region (one closed orbit)."""
    if region.near_separatrix and not allow_near_separatrix:
        raise NearSeparatrixError(f"energy {energy} within the separatrix window of band {band.m_prime}")
    p_sq = _momentum_sq_floor(band, energy)
    return 2.0 * _orbit_quadrature(lambda q: np.sqrt(p_sq(q)), region.q_lo, region.q_hi, rtol)


def classical_period(
    band: BandPotential,
    energy: float,
    region: TurningRegion,
    rtol: float = 1e-10,
    allow_near_separatrix: bool = False,
) -> float:
    """T(E) = 2 int dq/(omega p) over one region; equals dS/dE on that branch."""
    if region.near_separatrix and not allow_near_separatrix:
        raise NearSeparatrixError(f"energy {energy} within the separatrix window of band {band.m_prime}")
    omega = band.params.omega
    p_sq = _momentum_sq_floor(band, energy)
    return 2.0 * _orbit_quadrature(lambda q: 1.0 / (omega * np.sqrt(p_sq(q))), region.q_lo, region.q_hi, rtol)


# ---------------------------------------------------------------------------
# requantization

@dataclass
class QuantizedLevel:
    m_prime: float
    n: int
    energy: float
    region: str
    doublet: bool
    maslov_index: int
    near_separatrix: bool = False
    matched_exact: list[int] | None = None
    delta_e: float | None = None


def _action_on_branch(band: BandPotential, energy: float, branch: str, rtol: float) -> float:
    regions = turning_points(band, energy, eps_sep=0.0)
    if branch == "well":
        region = next(r for r in regions if r.kind in ("right-well", "single-well"))
    else:
        region = next(r for r in regions if r.kind == "above-barrier")
    return action_integral(band, energy, region, rtol=rtol, allow_near_separatrix=True)


def _solve_levels_on_branch(
    band: BandPotential,
    branch: str,
    e_lo: float,
    e_hi: float,
    maslov_index: int,
    rtol: float,
) -> list[tuple[int, float]]:
    """All (n, E) with S(E) = 2 pi (n + maslov/4) and E in (e_lo, e_hi]."""
    if e_hi <= e_lo:
        return []
    s_lo = _action_on_branch(band, e_lo, branch, rtol) if e_lo > band.v_min else 0.0
    s_hi = _action_on_branch(band, e_hi, branch, rtol)
    quarter = maslov_index / 4.0
    n_lo = max(0, int(math.ceil(s_lo / (2.0 * math.pi) - quarter - 1e-12)))
    n_hi = int(math.floor(s_hi / (2.0 * math.pi) - quarter + 1e-12))
    out = []
    scale = max(1.0, abs(e_lo), abs(e_hi))
    for n in range(n_lo, n_hi + 1):
        target = 2.0 * math.pi * (n + quarter)
        if target <= s_lo:  # boundary ties; keep strictly inside the branch
            if target == 0.0 and branch in ("well",) and e_lo <= band.v_min:
                out.append((n, band.v_min))
            continue
        if target == 0.0:
            out.append((n, band.v_min))
            continue
        root = brentq(
            lambda e: _action_on_branch(band, e, branch, rtol) - target,
            max(e_lo, band.v_min + 1e-13 * scale),
            e_hi,
            xtol=1e-13 * scale,
            rtol=4 * np.finfo(float).eps,
        )
        out.append((n, float(root)))
    return out


def requantize_band(
    band: BandPotential,
    maslov_index: int = 2,
    e_ceiling: float | None = None,
    rtol: float = 1e-10,
    eps_sep: float | None = None,
) -> list[QuantizedLevel]:
    """Levels of one band from S(E) = 2 pi (n + maslov_index/4).

    maslov_index=2 places levels at S = 2 pi (n + 1/2); maslov_index=0
    reproduces the bare integer-action rule.  Below-barrier solutions of a
    double well are emitted twice (one per parity partner, doublet=True);
    above-barrier and single-well solutions once.  Levels inside the
    separatrix window are flagged rather than suppressed.
    """
    if e_ceiling is None:
        raise ValueError("e_ceiling is required")
    if e_ceiling <= band.v_min:
        return []
    if eps_sep is None:
        eps_sep = default_eps_sep(band.params)
    levels: list[QuantizedLevel] = []
    if band.is_double_well:
        e_b = band.barrier_energy
        well_hi = min(e_ceiling, e_b - 1e-13 * max(1.0, abs(e_b)))
        for n, e in _solve_levels_on_branch(band, "well", band.v_min, well_hi, maslov_index, rtol):
            near = abs(e - e_b) <= eps_sep
            for kind in ("left-well", "right-well"):
                levels.append(
                    QuantizedLevel(band.m_prime, n, e, kind, doublet=True, maslov_index=maslov_index, near_separatrix=near)
                )
        if e_ceiling > e_b:
            merged_lo = e_b + 1e-13 * max(1.0, abs(e_b))
            for n, e in _solve_levels_on_branch(band, "merged", merged_lo, e_ceiling, maslov_index, rtol):
                near = abs(e - e_b) <= eps_sep
                levels.append(
                    QuantizedLevel(band.m_prime, n, e, "above-barrier", doublet=False, maslov_index=maslov_index, near_separatrix=near)
                )
    else:
        for n, e in _solve_levels_on_branch(band, "well", band.v_min, e_ceiling, maslov_index, rtol):
            levels.append(
                QuantizedLevel(band.m_prime, n, e, "single-well", doublet=False, maslov_index=maslov_index)
            )
    levels.sort(key=lambda lv: (lv.energy, lv.region))
    return levels


# ---------------------------------------------------------------------------
# microcanonical averages on one band

def _observable_symbol(band: BandPotential, name_or_fn):
    """Phase-space symbol O(p, q), already averaged over the +-p branches."""
    if callable(name_or_fn):
        fn = name_or_fn
        return lambda p, q: 0.5 * (fn(p, q) + fn(-p, q))
    mp = band.m_prime
    omega0 = band.params.omega0
    omega = band.params.omega
    if name_or_fn == "adag_a":
        return lambda p, q: 0.5 * (np.square(p) + np.square(q) - 1.0)
    if name_or_fn == "Jz":
        return lambda p, q: mp * omega0 / band.omega_p(q)
    if name_or_fn == "Jzprime":
        return lambda p, q: mp * np.ones_like(q)
    if name_or_fn == "energy":
        return lambda p, q: 0.5 * omega * (np.square(p) + np.square(q)) + mp * band.omega_p(q)
    raise ValueError(f"unknown observable {name_or_fn!r}")


def semiclassical_average(
    band: BandPotential,
    energy: float,
    observable,
    rtol: float = 1e-10,
    eps_sep: float | None = None,
) -> float:
    """Microcanonical average of an observable on the band's energy shell.

    observable is 'adag_a', 'Jz', 'Jzprime', 'energy' or a callable O(p, q);
    the time weight dq/(omega*p) is applied per allowed region.
    """
    regions = turning_points(band, energy, eps_sep=eps_sep)
    if not regions:
        raise ValueError(f"energy {energy} below band minimum {band.v_min}")
    if any(r.near_separatrix for r in regions):
        raise NearSeparatrixError(f"energy {energy} within the separatrix window of band {band.m_prime}")
    symbol = _observable_symbol(band, observable)
    omega = band.params.omega
    p_sq = _momentum_sq_floor(band, energy)
    num = 0.0
    den = 0.0
    for region in regions:
        def weighted(q):
            p = np.sqrt(p_sq(q))
            return symbol(p, q) / (omega * p)

        def weight(q):
            return 1.0 / (omega * np.sqrt(p_sq(q)))

        num += _orbit_quadrature(weighted, region.q_lo, region.q_hi, rtol)
        den += _orbit_quadrature(weight, region.q_lo, region.q_hi, rtol)
    return num / den


def band_expectation_curve(
    band: BandPotential,
    energies: np.ndarray,
    observable,
    rtol: float = 1e-8,
    eps_sep: float | None = None,
) -> np.ndarray:
    """semiclassical_average over an energy grid; NaN inside the separatrix window."""
    out = np.full(len(energies), np.nan)
    for i, e in enumerate(energies):
        if e <= band.v_min:
            continue
        try:
            out[i] = semiclassical_average(band, float(e), observable, rtol=rtol, eps_sep=eps_sep)
        except NearSeparatrixError:
            pass
    return out
