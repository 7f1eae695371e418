import math

import numpy as np
import pytest

from dicke_bands.operators import BasisSpec, build_hamiltonian, build_spin_ops, build_boson_ops, parity_blocks
from dicke_bands.params import ModelParams
from dicke_bands.spectrum import (
    certify_convergence,
    diagonalize,
    expectation,
    expectations_diagonal,
    peres_lattice,
    solve_block,
)


def test_decoupled_spectrum_exact():
    params = ModelParams(1.0, math.sqrt(2.0), 0.0, 2.0)
    basis = BasisSpec(2.0, 12)
    res = diagonalize(params, basis)
    expected = np.sort(
        (np.arange(13)[:, None] * 1.0 + (np.arange(5) - 2.0) * math.sqrt(2.0)).ravel()
    )
    assert np.abs(res.energies - expected).max() < 1e-12
    assert np.all(np.diff(res.energies) >= -1e-12)


def test_engines_agree():
    params = ModelParams.from_f(1.0, 1.0, 5.0, 2.0)
    basis = BasisSpec(2.0, 120)
    blocks = parity_blocks(build_hamiltonian(params, basis), basis)
    for parity in (+1, -1):
        w_d, v_d, _ = solve_block(blocks[parity], engine="dense")
        w_b, v_b, _ = solve_block(blocks[parity], engine="banded")
        anorm = np.abs(blocks[parity].op.to_dense()).sum(axis=1).max()
        assert np.abs(w_d - w_b).max() < 1e-11 * anorm
        # banded eigenvectors: orthonormal and satisfying the eigenproblem
        gram = v_b.T @ v_b - np.eye(v_b.shape[1])
        assert np.abs(gram).max() < 1e-10
        h = blocks[parity].op.to_csr()
        resid = h @ v_b - v_b * w_b
        assert np.abs(resid).max() < 1e-9 * anorm


def test_engines_agree_with_ceiling():
    params = ModelParams.from_f(1.0, 1.0, 4.0, 1.5)
    basis = BasisSpec(1.5, 100)
    ce = -0.5 * params.energy_scale
    r_dense = diagonalize(params, basis, e_ceiling=ce, engine="dense")
    r_band = diagonalize(params, basis, e_ceiling=ce, engine="banded")
    assert r_dense.n_states == r_band.n_states
    assert np.abs(r_dense.energies - r_band.energies).max() < 1e-10 * r_dense.h_inf_norm


def test_toy_case_matches_unsplit_dense_solve():
    # independent path: full dense eigensolve without the parity decomposition
    params = ModelParams(1.0, 1.0, 0.4, 0.5)
    basis = BasisSpec(0.5, 25)
    res = diagonalize(params, basis)
    w_ref = np.linalg.eigvalsh(build_hamiltonian(params, basis).to_dense())
    assert np.abs(res.energies - w_ref).max() < 1e-11


def test_certification_flags_truncation_starved_states():
    params = ModelParams.from_f(1.0, 1.0, 5.0, 1.0)
    basis = BasisSpec(1.0, 60)  # far below the suggested truncation
    res = certify_convergence(diagonalize(params, basis))
    assert not res.converged.all()
    assert res.converged[0]
    assert np.array_equal(res.converged, res.tail_weights < res.tail_tolerance)


def test_certified_levels_stable_under_larger_basis():
    params = ModelParams.from_f(1.0, 1.0, 3.0, 1.0)
    r1 = certify_convergence(diagonalize(params, BasisSpec(1.0, 120)))
    r2 = diagonalize(params, BasisSpec(1.0, 240))
    for i in np.nonzero(r1.converged)[0]:
        k = np.searchsorted(r2.energies, r1.energies[i])
        best = min(
            abs(r2.energies[p] - r1.energies[i])
            for p in (k - 1, k, k + 1)
            if 0 <= p < len(r2.energies)
        )
        assert best <= 1e-8 * max(abs(r1.energies[i]), 1.0)


def test_expectations():
    params = ModelParams(1.0, math.sqrt(2.0), 0.0, 1.5)
    basis = BasisSpec(1.5, 15)
    res = certify_convergence(diagonalize(params, basis))
    j2 = build_spin_ops(basis)["J2"]
    for i in (0, 3, 11):
        assert expectation(res, j2, i) == pytest.approx(1.5 * 2.5, abs=1e-10)
    n_op = build_boson_ops(basis)["n_hat"]
    assert expectation(res, n_op, 0) == pytest.approx(0.0, abs=1e-12)
    m_diag = np.tile(basis.m_values.astype(float), basis.boson_dim)
    jz_vals = expectations_diagonal(res, m_diag)
    assert jz_vals[0] == pytest.approx(-1.5, abs=1e-12)
    h = build_hamiltonian(params, basis)
    for i in (0, 7):
        assert expectation(res, h, i) == pytest.approx(res.energies[i], abs=1e-9)


def test_block_trace_sum_rule():
    # sum of <state|O|state> over one full parity block equals trace of O there
    params = ModelParams.from_f(1.0, 1.0, 2.0, 1.0)
    basis = BasisSpec(1.0, 10)
    res = diagonalize(params, basis)
    n_diag = np.repeat(np.arange(basis.boson_dim, dtype=float), basis.spin_dim)
    vals = expectations_diagonal(res, n_diag)
    for parity in (+1, -1):
        sel = res.parities == parity
        assert vals[sel].sum() == pytest.approx(
            n_diag[res.blocks[parity].index_map].sum(), rel=1e-10
        )


def test_ground_energy_variational_in_n_max():
    params = ModelParams.from_f(1.0, 1.0, 5.0, 1.0)
    gs = [diagonalize(params, BasisSpec(1.0, n)).energies[0] for n in (40, 80, 160)]
    assert gs[1] <= gs[0] + 1e-13
    assert gs[2] <= gs[1] + 1e-13


def test_peres_lattice_j2_horizontal_line():
    params = ModelParams.from_f(1.0, 1.0, 3.0, 1.0)
    basis = BasisSpec(1.0, 80)
    res = certify_convergence(diagonalize(params, basis))
    vals = np.full(res.n_states, 1.0 * 2.0)  # <J^2> is constant in the fixed-j sector
    pts = peres_lattice(res, vals)
    assert len(pts) == int(res.converged.sum())
    assert {p.value for p in pts} == {2.0}
    assert all(p.parity in (-1, 1) for p in pts)


def test_residual_spot_check_recorded():
    params = ModelParams.from_f(1.0, 1.0, 4.0, 1.0)
    res = diagonalize(params, BasisSpec(1.0, 150))
    assert res.residual_spot_max <= 1e-8 * res.h_inf_norm


def test_orthonormality_within_blocks():
    params = ModelParams.from_f(1.0, 1.0, 5.0, 1.5)
    res = diagonalize(params, BasisSpec(1.5, 140), engine="banded")
    for blk in res.blocks.values():
        gram = blk.vectors.T @ blk.vectors - np.eye(blk.vectors.shape[1])
        assert np.abs(gram).max() < 1e-10


def test_expectation_warns_on_unconverged():
    params = ModelParams.from_f(1.0, 1.0, 5.0, 1.0)
    res = certify_convergence(diagonalize(params, BasisSpec(1.0, 60)))
    bad = int(np.nonzero(~res.converged)[0][0])
    j2 = build_spin_ops(res.basis)["J2"]
    with pytest.warns(UserWarning, match="not converged"):
        expectation(res, j2, bad)
