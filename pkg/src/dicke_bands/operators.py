"""Truncated Fock x pseudospin basis, sparse operator assembly, parity blocks.

Basis layout: product states |n> x |j,m> with full-space index
``n * (2j+1) + (m + j)``, n = 0..n_max, m = -j..j ascending.  Everything is
assembled real symmetric: Jy never appears directly, only its real rotation
generator K = -i*Jy (so exp(theta*K) is the real orthogonal rotation
exp(-i*theta*Jy)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .params import ModelParams

PARITY_CROSS_TOL = 1e-12


class AssemblyError(RuntimeError):
    """An operator failed a structural consistency check during assembly."""


@dataclass(frozen=True)
class BasisSpec:
    """Truncated product basis: pseudospin j with Fock states 0..n_max."""

    j: float
    n_max: int
    parity_sector: int | None = None  # +1, -1 or None for both

    def __post_init__(self):
        two_j = 2.0 * self.j
        if two_j <= 0 or abs(two_j - round(two_j)) > 1e-12:
            raise ValueError(f"2j must be a positive integer, got j={self.j}")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.parity_sector not in (None, +1, -1):
            raise ValueError("parity_sector must be +1, -1 or None")

    @property
    def spin_dim(self) -> int:
        return int(round(2.0 * self.j)) + 1

    @property
    def boson_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.spin_dim * self.boson_dim

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(self.spin_dim) - self.j

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(self.boson_dim)

    def index(self, n: int, m: float) -> int:
        return n * self.spin_dim + int(round(m + self.j))


@dataclass(frozen=True)
class SparseOperator:
    """Real sparse operator in canonical COO triplet form (rows sorted, no dups)."""

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    symmetric: bool = False

    @classmethod
    def from_coo(cls, mat, symmetric: bool = False) -> "SparseOperator":
        m = sp.coo_matrix(mat)
        m.sum_duplicates()
        if m.shape[0] != m.shape[1]:
            raise ValueError("operators must be square")
        order = np.lexsort((m.col, m.row))
        keep = m.data[order] != 0.0
        return cls(
            dim=m.shape[0],
            rows=np.ascontiguousarray(m.row[order][keep].astype(np.int64)),
            cols=np.ascontiguousarray(m.col[order][keep].astype(np.int64)),
            vals=np.ascontiguousarray(m.data[order][keep].astype(np.float64)),
            symmetric=symmetric,
        )

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(self.dim, self.dim))

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def frobenius_norm(self) -> float:
        return float(np.sqrt(np.sum(self.vals**2)))

    def dump_triplets_csv(self, path: str | Path) -> None:
        """Debug dump: one 'row,col,value' line per stored entry."""
        with open(path, "w") as fh:
            fh.write("row,col,value\n")
            for r, c, v in zip(self.rows, self.cols, self.vals):
                fh.write(f"{r},{c},{v:.17g}\n")


# ---------------------------------------------------------------------------
# small dense building blocks (single subsystem, not tensored)

def spin_matrices(j: float) -> dict[str, np.ndarray]:
    """Dense spin-j matrices in |j,m>, m ascending: Jx, Jz, J2 and K = -i*Jy."""
    dim = int(round(2 * j)) + 1
    m = np.arange(dim) - j
    c_plus = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))  # <m+1|J+|m>
    jx = np.zeros((dim, dim))
    jx[np.arange(1, dim), np.arange(dim - 1)] = c_plus / 2.0
    jx += jx.T
    jz = np.diag(m)
    j2 = j * (j + 1) * np.eye(dim)
    k = np.zeros((dim, dim))  # (J- - J+)/2, real antisymmetric
    k[np.arange(1, dim), np.arange(dim - 1)] = -c_plus / 2.0
    k -= k.T
    return {"Jx": jx, "Jz": jz, "J2": j2, "K": k}


def boson_matrices(n_max: int) -> dict[str, np.ndarray]:
    """Dense truncated boson matrices: a, a_dag, q = (a+a_dag)/sqrt(2), n."""
    dim = n_max + 1
    a = np.zeros((dim, dim))
    a[np.arange(dim - 1), np.arange(1, dim)] = np.sqrt(np.arange(1, dim))
    return {"a": a, "a_dag": a.T.copy(), "q": (a + a.T) / math.sqrt(2.0), "n": np.diag(np.arange(dim, dtype=float))}


# ---------------------------------------------------------------------------
# tensored operators on the full basis

def _tensor_boson(basis: BasisSpec, mat: np.ndarray, symmetric: bool) -> SparseOperator:
    return SparseOperator.from_coo(sp.kron(sp.coo_matrix(mat), sp.identity(basis.spin_dim)), symmetric)


def _tensor_spin(basis: BasisSpec, mat: np.ndarray, symmetric: bool) -> SparseOperator:
    return SparseOperator.from_coo(sp.kron(sp.identity(basis.boson_dim), sp.coo_matrix(mat)), symmetric)


def build_boson_ops(basis: BasisSpec) -> dict[str, SparseOperator]:
    """Boson operators tensored with the spin identity; a|n> = sqrt(n)|n-1>."""
    mats = boson_matrices(basis.n_max)
    return {
        "a": _tensor_boson(basis, mats["a"], symmetric=False),
        "a_dag": _tensor_boson(basis, mats["a_dag"], symmetric=False),
        "q_hat": _tensor_boson(basis, mats["q"], symmetric=True),
        "n_hat": _tensor_boson(basis, mats["n"], symmetric=True),
    }


def build_spin_ops(basis: BasisSpec) -> dict[str, SparseOperator]:
    """Spin operators tensored with the boson identity.

    Jy itself is not returned; ``Jy_factor`` is the real antisymmetric
    generator K with exp(theta*K) = exp(-i*theta*Jy).
    """
    mats = spin_matrices(basis.j)
    return {
        "Jx": _tensor_spin(basis, mats["Jx"], symmetric=True),
        "Jz": _tensor_spin(basis, mats["Jz"], symmetric=True),
        "J2": _tensor_spin(basis, mats["J2"], symmetric=True),
        "Jy_factor": _tensor_spin(basis, mats["K"], symmetric=False),
    }


def coupling_prefactor(params: ModelParams) -> float:
    """The Jx(a+a_dag) coefficient, 2*gamma/sqrt(2j)."""
    return 2.0 * params.gamma / math.sqrt(2.0 * params.j)


def build_hamiltonian(params: ModelParams, basis: BasisSpec) -> SparseOperator:
    """Assemble the full real-symmetric Hamiltonian on the truncated basis."""
    if abs(params.j - basis.j) > 1e-12:
        raise AssemblyError(f"params.j={params.j} does not match basis.j={basis.j}")
    bos = boson_matrices(basis.n_max)
    spn = spin_matrices(basis.j)
    h = sp.kron(sp.coo_matrix(bos["n"]), sp.identity(basis.spin_dim)) * params.omega
    h += sp.kron(sp.identity(basis.boson_dim), sp.coo_matrix(spn["Jz"])) * params.omega0
    h += sp.kron(sp.coo_matrix(bos["a"] + bos["a_dag"]), sp.coo_matrix(spn["Jx"])) * coupling_prefactor(params)
    return SparseOperator.from_coo(h, symmetric=True)


# ---------------------------------------------------------------------------
# parity decomposition

def parity_labels(basis: BasisSpec) -> np.ndarray:
    """Parity (+1/-1) of each basis state from the parity of n + m + j."""
    n = np.repeat(basis.n_values, basis.spin_dim)
    m_plus_j = np.tile(np.arange(basis.spin_dim), basis.boson_dim)
    return np.where((n + m_plus_j) % 2 == 0, 1, -1).astype(np.int8)


@dataclass(frozen=True)
class ParityBlock:
    parity: int
    index_map: np.ndarray  # block position -> full-basis index
    op: SparseOperator


def parity_blocks(h: SparseOperator, basis: BasisSpec) -> dict[int, ParityBlock]:
    """Split H into its two parity blocks; fail loudly on any cross-block element."""
    labels = parity_labels(basis)
    cross = labels[h.rows] != labels[h.cols]
    if np.any(cross):
        worst = float(np.abs(h.vals[cross]).max())
        if worst > PARITY_CROSS_TOL:
            raise AssemblyError(f"parity-violating matrix element of size {worst:.3e}")
    blocks: dict[int, ParityBlock] = {}
    for parity in (+1, -1):
        full_idx = np.nonzero(labels == parity)[0]
        pos = -np.ones(h.dim, dtype=np.int64)
        pos[full_idx] = np.arange(len(full_idx))
        keep = (labels[h.rows] == parity) & (labels[h.cols] == parity)
        block = sp.coo_matrix(
            (h.vals[keep], (pos[h.rows[keep]], pos[h.cols[keep]])),
            shape=(len(full_idx), len(full_idx)),
        )
        blocks[parity] = ParityBlock(
            parity=parity,
            index_map=full_idx,
            op=SparseOperator.from_coo(block, symmetric=h.symmetric),
        )
    return blocks


def banded_form(op: SparseOperator) -> np.ndarray:
    """Lower banded storage of a symmetric operator: ab[d, i] = A[i+d, i]."""
    if not op.symmetric:
        raise ValueError("banded_form expects a symmetric operator")
    lower = op.rows >= op.cols
    diags = op.rows[lower] - op.cols[lower]
    bw = int(diags.max()) if len(diags) else 0
    ab = np.zeros((bw + 1, op.dim))
    ab[diags, op.cols[lower]] = op.vals[lower]
    return ab


# ---------------------------------------------------------------------------
# truncation heuristic

def suggest_n_max(params: ModelParams) -> int:
    """Starting truncation: ceil(2*q_min^2) + 150, from the lowest band's minimum.

    The displaced-well occupation scales as q_min^2/2; the convergence
    certification downstream validates (or rejects) the choice.
    """
    f = params.f
    if f > 1.0:
        q_min_sq = (params.j * params.omega0 / params.omega) * (f**4 - 1.0) / f**2
    else:
        q_min_sq = 0.0
    return int(math.ceil(2.0 * q_min_sq)) + 150
