"""Harmonic baselines: in-band quadratic expansion and full two-mode normal modes.

The in-band expansion quantizes the lowest band's well curvature directly:
E_n = V_min + omega_B (n + 1/2) with omega_B = omega sqrt(1 - f^-4).

The two-mode baseline treats the full classical energy surface (boson (q, p)
plus the fixed-j canonical spin pair (Q, P) with Jz = (Q^2+P^2)/2 - j), finds
its minimum numerically, and reads the normal-mode frequencies off the
symplectic spectrum of the Hessian.  The frequencies are computed from the
surface rather than transcribed from the literature; the gamma=0 and in-band
limits validate them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bands import BandPotential
from .params import ModelParams, derive_scales


def band_harmonic_levels(params: ModelParams, n_count: int, m_prime: float | None = None) -> np.ndarray:
    """E_n = V_min + omega_B (n + 1/2) for the (by default lowest) band's well."""
    if params.f <= 1.0:
        raise ValueError("band harmonic levels require the superradiant phase (f > 1)")
    if m_prime is None:
        m_prime = -params.j
    band = BandPotential(params, m_prime)
    scales = derive_scales(params)
    if m_prime == -params.j:
        omega_b = scales.omega_B
    else:
        # curvature of this band's own well
        q0 = band.q_min
        h = 1e-6 * max(1.0, q0)
        omega_b = math.sqrt((band.value(q0 + h) - 2.0 * band.value(q0) + band.value(q0 - h)) / h**2 * params.omega)
    return band.v_min + omega_b * (np.arange(n_count) + 0.5)


# ---------------------------------------------------------------------------
# full two-degree-of-freedom surface

def classical_energy(params: ModelParams, z: np.ndarray) -> float:
    """H(q, p, Q, P) with the canonical spin parametrization on the j sphere."""
    q, p, qq, pp = z
    j = params.j
    r_sq = 0.5 * (qq**2 + pp**2)
    jz = r_sq - j
    root = max(j - 0.5 * r_sq, 0.0)
    jx = qq * math.sqrt(root)
    return (
        0.5 * params.omega * (p**2 + q**2)
        + params.omega0 * jz
        + (2.0 * params.gamma / math.sqrt(j)) * q * jx
    )


def _superradiant_seed(params: ModelParams) -> np.ndarray:
    """Analytic minimum of the lowest band, mapped to (q, p, Q, P)."""
    f = params.f
    if f <= 1.0:
        return np.zeros(4)
    band = BandPotential(params, -params.j)
    q0 = band.q_min
    theta = math.atan2(2.0 * params.gamma * q0 / math.sqrt(params.j), params.omega0)
    qq = -math.sqrt(2.0 * params.j * (1.0 - math.cos(theta)))  # Jx < 0 for q > 0
    return np.array([q0, 0.0, qq, 0.0])


def _gradient(params: ModelParams, z: np.ndarray, step: float) -> np.ndarray:
    g = np.zeros(4)
    for i in range(4):
        h = step * max(1.0, abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (classical_energy(params, zp) - classical_energy(params, zm)) / (2.0 * h)
    return g


def _hessian(params: ModelParams, z: np.ndarray, step: float = 3e-4) -> np.ndarray:
    # step balances h^2 truncation against eps*|E|/h^2 roundoff at |E| ~ 10..10^2
    hess = np.zeros((4, 4))
    hs = [step * max(1.0, abs(z[i])) for i in range(4)]
    for i in range(4):
        for k in range(i, 4):
            zpp, zpm, zmp, zmm = (z.copy() for _ in range(4))
            zpp[i] += hs[i]; zpp[k] += hs[k]
            zpm[i] += hs[i]; zpm[k] -= hs[k]
            zmp[i] -= hs[i]; zmp[k] += hs[k]
            zmm[i] -= hs[i]; zmm[k] -= hs[k]
            val = (
                classical_energy(params, zpp)
                - classical_energy(params, zpm)
                - classical_energy(params, zmp)
                + classical_energy(params, zmm)
            ) / (4.0 * hs[i] * hs[k])
            hess[i, k] = hess[k, i] = val
    return hess


@dataclass(frozen=True)
class NormalModes:
    epsilon_minus: float
    epsilon_plus: float
    e0: float
    minimum: np.ndarray  # (q, p, Q, P)


def normal_mode_frequencies(params: ModelParams, grad_tol: float = 1e-9) -> NormalModes:
    """Locate the surface minimum and extract the symplectic normal-mode pair.

    Newton iterations (finite-difference gradient and Hessian) polish the
    analytic seed to machine precision.  Raises if the stationary point is not
    a proper minimum (non-positive Hessian), e.g. exactly at the critical
    coupling.
    """
    z0 = _superradiant_seed(params)
    scale = max(1.0, abs(classical_energy(params, z0)))
    grad = _gradient(params, z0, 1e-6)
    for _ in range(12):
        if np.max(np.abs(grad)) <= 0.25 * grad_tol * scale:
            break
        step = np.linalg.solve(_hessian(params, z0), grad)
        z0 = z0 - step
        grad = _gradient(params, z0, 1e-6)
    if np.max(np.abs(grad)) > grad_tol * scale:
        raise RuntimeError(f"minimum not located: |grad| = {np.max(np.abs(grad)):.3e}")
    e0 = classical_energy(params, z0)
    hess = _hessian(params, z0)
    hess_eigs = np.linalg.eigvalsh(hess)
    if hess_eigs[0] < 1e-7 * hess_eigs[-1]:
        raise RuntimeError(
            "stationary point is not a clean minimum (saddle or critical coupling): "
            f"Hessian eigenvalues {hess_eigs}"
        )
    # symplectic form for coordinate order (q, p, Q, P)
    j_sym = np.zeros((4, 4))
    j_sym[0, 1] = j_sym[2, 3] = 1.0
    j_sym[1, 0] = j_sym[3, 2] = -1.0
    eig = np.linalg.eigvals(j_sym @ hess)
    freqs = np.sort(np.abs(eig.imag))[::2]  # each frequency appears as +-i eps
    eps_minus, eps_plus = float(freqs[-2]), float(freqs[-1])
    eps_minus, eps_plus = min(eps_minus, eps_plus), max(eps_minus, eps_plus)
    if eps_minus <= 0.0:
        raise RuntimeError("vanishing normal-mode frequency (critical coupling?)")
    return NormalModes(epsilon_minus=eps_minus, epsilon_plus=eps_plus, e0=float(e0), minimum=z0)


def harmonic_spectrum(modes: NormalModes, e_ceiling: float) -> list[tuple[int, int, float]]:
    """All (n_minus, n_plus, energy) lattice points at or below the ceiling, sorted."""
    base = modes.e0 + 0.5 * (modes.epsilon_minus + modes.epsilon_plus)
    out = []
    n_plus = 0
    while base + n_plus * modes.epsilon_plus <= e_ceiling:
        e_row = base + n_plus * modes.epsilon_plus
        n_minus_max = int(math.floor((e_ceiling - e_row) / modes.epsilon_minus + 1e-12))
        for n_minus in range(n_minus_max + 1):
            out.append((n_minus, n_plus, e_row + n_minus * modes.epsilon_minus))
        n_plus += 1
    out.sort(key=lambda t: (t[2], t[1]))
    return out
