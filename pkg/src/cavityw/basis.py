"""Composite Hilbert space construction and sparse operator algebra.

Modes are qutrits (2 or 3 levels) and truncated cavity modes. A basis
enumerates occupation tuples lexicographically, optionally restricted to
the excitation sector of total weight <= e_max, where the weight of a
state is the sum of photon numbers and qutrit level indices. All
Hamiltonian and Lindblad operators are carried as sparse matrices over
such a basis.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import BasisMismatchError, ConfigurationError

__all__ = [
    "ModeKind",
    "ModeSpec",
    "CompositeBasis",
    "SparseOperator",
    "StateVector",
    "DensityMatrix",
    "build_basis",
    "embed",
    "embed_product",
    "commutator",
    "expectation",
    "annihilator",
    "number_op",
    "level_transition",
    "level_projector",
    "total_excitation",
]


class ModeKind(Enum):
    QUTRIT = "qutrit"
    CAVITY = "cavity"


@dataclass(frozen=True)
class ModeSpec:
    """One mode of the composite system.

    For a qutrit `levels` is 2 or 3; for a cavity it is the photon
    truncation dimension (max photon number + 1).
    """

    kind: ModeKind
    levels: int
    label: str

    def __post_init__(self):
        if self.levels < 2:
            raise ConfigurationError(f"mode {self.label!r}: levels must be >= 2")
        if self.kind is ModeKind.QUTRIT and self.levels not in (2, 3):
            raise ConfigurationError(
                f"qutrit {self.label!r}: levels must be 2 or 3, got {self.levels}"
            )
        if not self.label:
            raise ConfigurationError("mode label must be nonempty")


class CompositeBasis:
    """Enumerated tensor-product basis, optionally sector-restricted.

    States are occupation tuples ordered lexicographically with modes in
    declaration order. Immutable after construction.
    """

    def __init__(self, modes: Sequence[ModeSpec], e_max: int | None = None):
        if not modes:
            raise ConfigurationError("basis needs at least one mode")
        labels = [m.label for m in modes]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"duplicate mode labels in {labels}")
        if e_max is not None and e_max < 0:
            raise ConfigurationError("e_max must be >= 0")
        self.modes: tuple[ModeSpec, ...] = tuple(modes)
        self.e_max = e_max
        self._mode_index = {m.label: i for i, m in enumerate(self.modes)}
        ranges = [range(m.levels) for m in self.modes]
        if e_max is None:
            states = list(itertools.product(*ranges))
        else:
            states = [s for s in itertools.product(*ranges) if sum(s) <= e_max]
        if not states:
            raise ConfigurationError("basis restriction leaves no states")
        self.states: tuple[tuple[int, ...], ...] = tuple(states)
        self.index: dict[tuple[int, ...], int] = {s: i for i, s in enumerate(states)}
        self.dimension = len(states)

    def mode_index(self, label: str) -> int:
        try:
            return self._mode_index[label]
        except KeyError:
            raise ConfigurationError(f"unknown mode label {label!r}") from None

    def mode(self, label: str) -> ModeSpec:
        return self.modes[self.mode_index(label)]

    @staticmethod
    def weight(state: tuple[int, ...]) -> int:
        """Total excitation: photons plus qutrit level indices."""
        return sum(state)

    def state_index(self, **occupations: int) -> int:
        """Flat index of the state with the given occupations, zero elsewhere."""
        occ = [0] * len(self.modes)
        for label, v in occupations.items():
            occ[self.mode_index(label)] = v
        key = tuple(occ)
        if key not in self.index:
            raise ConfigurationError(f"state {key} not in basis (e_max={self.e_max})")
        return self.index[key]

    def __eq__(self, other):
        if not isinstance(other, CompositeBasis):
            return NotImplemented
        return self.modes == other.modes and self.e_max == other.e_max

    def __hash__(self):
        return hash((self.modes, self.e_max))

    def __repr__(self):
        return (
            f"CompositeBasis({len(self.modes)} modes, dim={self.dimension}, "
            f"e_max={self.e_max})"
        )


def build_basis(modes: Sequence[ModeSpec], e_max: int | None = None) -> CompositeBasis:
    return CompositeBasis(modes, e_max)


def _check_same_basis(a, b):
    if a.basis != b.basis:
        raise BasisMismatchError("operands live on different bases")


class SparseOperator:
    """Complex sparse matrix tied to a basis, in canonical CSR layout."""

    def __init__(self, basis: CompositeBasis, matrix):
        d = basis.dimension
        m = sp.csr_matrix(matrix, shape=(d, d), dtype=complex)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        self.basis = basis
        self.matrix = m

    @classmethod
    def from_coo(cls, basis, rows, cols, vals):
        d = basis.dimension
        return cls(basis, sp.coo_matrix((vals, (rows, cols)), shape=(d, d)))

    @classmethod
    def zero(cls, basis):
        d = basis.dimension
        return cls(basis, sp.csr_matrix((d, d), dtype=complex))

    @classmethod
    def identity(cls, basis):
        return cls(basis, sp.identity(basis.dimension, dtype=complex, format="csr"))

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def is_zero(self, tol: float = 0.0) -> bool:
        if self.matrix.nnz == 0:
            return True
        return np.max(np.abs(self.matrix.data)) <= tol

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix.conj().T)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        diff = self.matrix - self.matrix.conj().T
        return diff.nnz == 0 or np.max(np.abs(diff.data)) <= tol

    def norm(self) -> float:
        """Frobenius norm."""
        if self.matrix.nnz == 0:
            return 0.0
        return float(np.linalg.norm(self.matrix.data))

    def __add__(self, other):
        _check_same_basis(self, other)
        return SparseOperator(self.basis, self.matrix + other.matrix)

    def __sub__(self, other):
        _check_same_basis(self, other)
        return SparseOperator(self.basis, self.matrix - other.matrix)

    def __mul__(self, c):
        return SparseOperator(self.basis, self.matrix * complex(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1)

    def __matmul__(self, other):
        _check_same_basis(self, other)
        return SparseOperator(self.basis, self.matrix @ other.matrix)

    def __eq__(self, other):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        if self.basis != other.basis:
            return False
        return (self.matrix - other.matrix).nnz == 0

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def __repr__(self):
        return f"SparseOperator(dim={self.basis.dimension}, nnz={self.nnz})"


def commutator(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return a @ b - b @ a


def expectation(op: SparseOperator, state) -> complex:
    """<A> on a StateVector or DensityMatrix sharing the operator's basis."""
    _check_same_basis(op, state)
    if isinstance(state, StateVector):
        return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    return complex(np.trace(op.matrix @ state.matrix))


@dataclass
class StateVector:
    """Normalized pure state over a basis."""

    basis: CompositeBasis
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dimension,):
            raise ConfigurationError(
                f"state has shape {self.amplitudes.shape}, basis dim {self.basis.dimension}"
            )
        nrm = np.linalg.norm(self.amplitudes)
        if abs(nrm - 1.0) > 1e-12:
            raise ConfigurationError(f"state norm {nrm} differs from 1 beyond 1e-12")

    @classmethod
    def basis_state(cls, basis: CompositeBasis, **occupations: int) -> "StateVector":
        amps = np.zeros(basis.dimension, dtype=complex)
        amps[basis.state_index(**occupations)] = 1.0
        return cls(basis, amps)

    def overlap(self, other: "StateVector") -> complex:
        _check_same_basis(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.basis, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace, (numerically) positive density operator."""

    basis: CompositeBasis
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.basis.dimension
        if self.matrix.shape != (d, d):
            raise ConfigurationError(
                f"density matrix shape {self.matrix.shape}, basis dim {d}"
            )
        herm = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if herm > 1e-12:
            raise ConfigurationError(f"density matrix not Hermitian (drift {herm:g})")
        tr = np.trace(self.matrix).real
        if abs(tr - 1.0) > 1e-12:
            raise ConfigurationError(f"density matrix trace {tr} differs from 1")
        lo = np.linalg.eigvalsh(self.matrix).min()
        if lo < -1e-10:
            raise ConfigurationError(f"density matrix min eigenvalue {lo:g} < -1e-10")


# Local single-mode matrices -------------------------------------------------


def annihilator(levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, levels)), 1).astype(complex)


def number_op(levels: int) -> np.ndarray:
    return np.diag(np.arange(levels)).astype(complex)


def level_transition(levels: int, upper: int, lower: int) -> np.ndarray:
    """|upper><lower| on a `levels`-dimensional mode."""
    m = np.zeros((levels, levels), dtype=complex)
    m[upper, lower] = 1.0
    return m


def level_projector(levels: int, level: int) -> np.ndarray:
    return level_transition(levels, level, level)


def embed_product(
    basis: CompositeBasis, factors: Mapping[str, np.ndarray]
) -> SparseOperator:
    """Operator acting as the given local matrices on the named modes
    (jointly, i.e. the tensor product of the factors) and identity
    elsewhere, projected onto the basis sector.

    Joint embedding matters on restricted bases: matrix elements are taken
    between retained states only, which is the exact sector projection of
    the full tensor-product operator.
    """
    entries = []
    for label, m in factors.items():
        m = np.asarray(m, dtype=complex)
        idx = basis.mode_index(label)
        lv = basis.modes[idx].levels
        if m.shape != (lv, lv):
            raise ConfigurationError(
                f"local matrix for {label!r} has shape {m.shape}, mode has {lv} levels"
            )
        # per column: list of (row, value) nonzeros
        cols = [[(r, m[r, c]) for r in range(lv) if m[r, c] != 0] for c in range(lv)]
        entries.append((idx, cols))

    rows, colidx, vals = [], [], []
    for ci, state in enumerate(basis.states):
        options = [cols[state[idx]] for idx, cols in entries]
        if any(not o for o in options):
            continue
        for combo in itertools.product(*options):
            new = list(state)
            v = 1.0 + 0j
            for (idx, _), (r, x) in zip(entries, combo):
                new[idx] = r
                v *= x
            ri = basis.index.get(tuple(new))
            if ri is not None:
                rows.append(ri)
                colidx.append(ci)
                vals.append(v)
    return SparseOperator.from_coo(basis, rows, colidx, vals)


def embed(local_matrix: np.ndarray, mode_label: str, basis: CompositeBasis) -> SparseOperator:
    """Single-mode operator embedded in the composite basis."""
    return embed_product(basis, {mode_label: local_matrix})


def total_excitation(basis: CompositeBasis) -> SparseOperator:
    """Sum of photon numbers and qutrit level indices as an operator."""
    op = SparseOperator.zero(basis)
    for m in basis.modes:
        op = op + embed(number_op(m.levels), m.label, basis)
    return op
