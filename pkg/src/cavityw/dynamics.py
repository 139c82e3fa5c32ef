"""Deterministic propagation of the master equation and of closed
Schrodinger dynamics, with an embedded Dormand-Prince 5(4) stepper.

Density matrices are dense (sector dimensions are small); the dissipator
is precomputed as a sparse superoperator acting on the row-major
vectorized state. After every accepted step the density matrix is
re-symmetrized; trace drift, Hermiticity drift, and the most negative
eigenvalue seen at sample points are recorded, never silently repaired.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import (
    CompositeBasis,
    DensityMatrix,
    ModeKind,
    SparseOperator,
    StateVector,
    annihilator,
    embed,
    level_projector,
    level_transition,
    number_op,
)
from .device import DecoherenceParams
from .errors import BasisMismatchError, ConfigurationError, IntegrationError
from .hamiltonians import TermSet

__all__ = [
    "LindbladChannel",
    "LindbladSpec",
    "IntegratorStats",
    "SimResult",
    "build_lindblad_spec",
    "evolve_lindblad",
    "evolve_closed",
    "fidelity",
    "pure_fidelity",
    "photon_number_ops",
    "photon_time_averages",
]

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B5 - _DP_B4

_MAX_STEPS = 20_000_000
_FIRST_STEP = 1e-12  # resolves the fastest interaction-picture phases


@dataclass
class IntegratorStats:
    steps: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    max_trace_drift: float = 0.0
    max_herm_drift: float = 0.0
    min_eigenvalue: float = 0.0


def _integrate(rhs, y0, sample_times, tol, on_sample, post_accept=None):
    """Adaptive DP54 march hitting every sample time exactly.

    `post_accept(y) -> y` may adjust the accepted state (symmetrization);
    `on_sample(i, t, y)` is called at each entry of sample_times.
    """
    if not 1e-14 < tol < 1e-3:
        raise ConfigurationError(f"tolerance {tol:g} outside (1e-14, 1e-3)")
    stats = IntegratorStats()
    y = y0.astype(complex).copy()
    t = float(sample_times[0])
    on_sample(0, t, y)
    atol = tol * 1e-3
    h = _FIRST_STEP
    k = np.empty((7, y.size), dtype=complex)
    for i, t_target in enumerate(sample_times[1:], start=1):
        while t < t_target:
            rem = t_target - t
            if rem <= 4e-16 * t_target:
                t = t_target  # gap at rounding level: snap to the sample time
                break
            h = min(h, rem)
            if h < 1e-22:
                raise IntegrationError(
                    f"step underflow at t={t:.3e}s (steps={stats.steps}, "
                    f"rejected={stats.rejected}); system too stiff for the tolerance"
                )
            if stats.steps + stats.rejected > _MAX_STEPS:
                raise IntegrationError("step budget exhausted; tolerance not met")
            k[0] = rhs(t, y)
            for s in range(1, 7):
                ys = y + h * (np.asarray(_DP_A[s]) @ k[:s])
                k[s] = rhs(t + _DP_C[s] * h, ys)
            stats.rhs_evals += 7
            y5 = y + h * (_DP_B5 @ k)
            err = h * (_DP_E @ k)
            scale = atol + tol * np.maximum(np.abs(y), np.abs(y5))
            err_norm = np.sqrt(np.mean(np.abs(err / scale) ** 2))
            if err_norm <= 1.0:
                t += h
                y = y5
                stats.steps += 1
                if post_accept is not None:
                    y = post_accept(y, stats)
            else:
                stats.rejected += 1
            factor = 0.9 * (max(err_norm, 1e-10)) ** (-0.2)
            h *= min(5.0, max(0.2, factor))
        on_sample(i, t, y)
    return y, stats


@dataclass(frozen=True)
class LindbladChannel:
    rate: float
    operator: SparseOperator
    kind: str  # "decay" or "dephasing"


@dataclass(frozen=True)
class LindbladSpec:
    basis: CompositeBasis
    channels: tuple[LindbladChannel, ...]

    def __post_init__(self):
        for ch in self.channels:
            if ch.rate < 0:
                raise ConfigurationError("channel rates must be >= 0")
            if ch.operator.basis != self.basis:
                raise BasisMismatchError("channel operator on wrong basis")

    def superoperator(self) -> sp.spmatrix | None:
        """Sparse dissipator acting on the row-major vectorized state."""
        if not self.channels:
            return None
        d = self.basis.dimension
        ident = sp.identity(d, dtype=complex, format="csr")
        acc = sp.csr_matrix((d * d, d * d), dtype=complex)
        for ch in self.channels:
            L = ch.operator.matrix
            LdL = (L.conj().T @ L).tocsr()
            acc = acc + ch.rate * (
                sp.kron(L, L.conj(), format="csr")
                - 0.5 * sp.kron(LdL, ident, format="csr")
                - 0.5 * sp.kron(ident, LdL.T, format="csr")
            )
        return acc.tocsr()


def build_lindblad_spec(decoherence: DecoherenceParams, basis: CompositeBasis) -> LindbladSpec:
    """Channel inventory of the lossy model: photon decay per cavity;
    per qutrit the |1> relaxation, the two |2> decay paths, and the |1>
    and |2> dephasing projectors. Zero-rate channels are omitted."""
    channels: list[LindbladChannel] = []
    for mode in basis.modes:
        if mode.kind is ModeKind.CAVITY:
            rate = decoherence.kappa.get(mode.label, 0.0)
            if rate > 0:
                channels.append(
                    LindbladChannel(rate, embed(annihilator(mode.levels), mode.label, basis), "decay")
                )
            continue
        lv, q = mode.levels, mode.label
        if decoherence.gamma.get(q, 0.0) > 0:
            channels.append(
                LindbladChannel(decoherence.gamma[q], embed(level_transition(lv, 0, 1), q, basis), "decay")
            )
        if decoherence.gamma_phi1.get(q, 0.0) > 0:
            channels.append(
                LindbladChannel(decoherence.gamma_phi1[q], embed(level_projector(lv, 1), q, basis), "dephasing")
            )
        for rates, which in (
            (decoherence.gamma_21, "21"),
            (decoherence.gamma_20, "20"),
            (decoherence.gamma_phi2, "phi2"),
        ):
            rate = rates.get(q, 0.0)
            if rate <= 0:
                continue
            if lv < 3:
                warnings.warn(
                    f"qutrit {q!r} has 2 levels; level-2 channel {which} skipped",
                    stacklevel=2,
                )
                continue
            if which == "21":
                op = embed(level_transition(3, 1, 2), q, basis)
                channels.append(LindbladChannel(rate, op, "decay"))
            elif which == "20":
                op = embed(level_transition(3, 0, 2), q, basis)
                channels.append(LindbladChannel(rate, op, "decay"))
            else:
                op = embed(level_projector(3, 2), q, basis)
                channels.append(LindbladChannel(rate, op, "dephasing"))
    return LindbladSpec(basis, tuple(channels))


@dataclass
class SimResult:
    """Sampled traces of one propagation run."""

    times: np.ndarray
    fidelity: np.ndarray | None
    photons: dict[str, np.ndarray]
    norm_trace: np.ndarray  # tr(rho) or ||psi||, per sample
    stats: IntegratorStats
    snapshots: list[np.ndarray] | None = None
    metadata: dict = field(default_factory=dict)


def fidelity(rho, psi_id: StateVector) -> float:
    """Square-root overlap of a density matrix with a pure target."""
    if isinstance(rho, DensityMatrix):
        if rho.basis != psi_id.basis:
            raise BasisMismatchError("state and target on different bases")
        mat = rho.matrix
    else:
        mat = np.asarray(rho)
    v = psi_id.amplitudes
    val = np.real(np.vdot(v, mat @ v))
    return float(np.sqrt(max(val, 0.0)))


def pure_fidelity(psi: np.ndarray, psi_id: StateVector) -> float:
    return float(abs(np.vdot(psi_id.amplitudes, np.asarray(psi))))


def photon_number_ops(basis: CompositeBasis) -> dict[str, SparseOperator]:
    return {
        m.label: embed(number_op(m.levels), m.label, basis)
        for m in basis.modes
        if m.kind is ModeKind.CAVITY
    }


def _sample_grid(t_final: float, n_samples: int) -> np.ndarray:
    if t_final <= 0:
        raise ConfigurationError("t_final must be > 0")
    if n_samples < 2:
        raise ConfigurationError("need at least 2 sample points")
    return np.linspace(0.0, t_final, n_samples)


def evolve_lindblad(
    h: TermSet,
    lindblad: LindbladSpec,
    rho0: DensityMatrix,
    t_final: float,
    tol: float = 1e-8,
    n_samples: int = 1000,
    target: StateVector | None = None,
    photon_ops: dict[str, SparseOperator] | None = None,
    store_snapshots: bool = False,
    metadata: dict | None = None,
) -> SimResult:
    """Integrate drho/dt = -i[h(t), rho] + dissipators up to t_final."""
    basis = h.basis
    if rho0.basis != basis or lindblad.basis != basis:
        raise BasisMismatchError("Hamiltonian, dissipator, and state must share a basis")
    d = basis.dimension
    coeffs, freqs, stack = h.dense_stack()
    dissipator = lindblad.superoperator()
    if photon_ops is None:
        photon_ops = photon_number_ops(basis)
    photon_dense = {lbl: op.to_dense() for lbl, op in photon_ops.items()}

    times = _sample_grid(t_final, n_samples)
    fid = np.empty(n_samples) if target is not None else None
    photons = {lbl: np.empty(n_samples) for lbl in photon_dense}
    norm_trace = np.empty(n_samples)
    snapshots: list[np.ndarray] | None = [] if store_snapshots else None
    min_eig = [0.0]

    have_terms = stack.shape[0] > 0

    def rhs(t, y):
        rho = y.reshape(d, d)
        if have_terms:
            ht = np.tensordot(coeffs * np.exp(1j * freqs * t), stack, axes=1)
            drho = -1j * (ht @ rho - rho @ ht)
        else:
            drho = np.zeros_like(rho)
        if dissipator is not None:
            drho = drho + (dissipator @ y).reshape(d, d)
        return drho.ravel()

    def post_accept(y, stats):
        rho = y.reshape(d, d)
        herm = np.max(np.abs(rho - rho.conj().T))
        stats.max_herm_drift = max(stats.max_herm_drift, herm)
        drift = abs(np.trace(rho).real - 1.0)
        stats.max_trace_drift = max(stats.max_trace_drift, drift)
        rho = 0.5 * (rho + rho.conj().T)
        return rho.ravel()

    def on_sample(i, t, y):
        rho = y.reshape(d, d)
        norm_trace[i] = np.trace(rho).real
        if fid is not None:
            v = target.amplitudes
            fid[i] = np.sqrt(max(np.real(np.vdot(v, rho @ v)), 0.0))
        for lbl, op in photon_dense.items():
            photons[lbl][i] = np.real(np.trace(op @ rho))
        min_eig[0] = min(min_eig[0], float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()))
        if snapshots is not None:
            snapshots.append(rho.copy())

    y_final, stats = _integrate(rhs, rho0.matrix.ravel(), times, tol, on_sample, post_accept)
    stats.min_eigenvalue = min_eig[0]
    if stats.min_eigenvalue < -100 * tol:
        warnings.warn(
            f"positivity violation {stats.min_eigenvalue:g} beyond -100*tol", stacklevel=2
        )
    return SimResult(
        times=times,
        fidelity=fid,
        photons=photons,
        norm_trace=norm_trace,
        stats=stats,
        snapshots=snapshots,
        metadata=metadata or {},
    )


def evolve_closed(
    h: TermSet,
    psi0: StateVector,
    t_final: float,
    tol: float = 1e-8,
    n_samples: int = 1000,
    target: StateVector | None = None,
    photon_ops: dict[str, SparseOperator] | None = None,
    store_snapshots: bool = False,
    metadata: dict | None = None,
) -> SimResult:
    """Schrodinger propagation with the same stepper (dissipation-free
    oracle path). Norm drift is recorded, not renormalized."""
    basis = h.basis
    if psi0.basis != basis:
        raise BasisMismatchError("Hamiltonian and state must share a basis")
    d = basis.dimension
    coeffs, freqs, stack = h.dense_stack()
    if photon_ops is None:
        photon_ops = photon_number_ops(basis)
    photon_sparse = {lbl: op.matrix for lbl, op in photon_ops.items()}

    times = _sample_grid(t_final, n_samples)
    fid = np.empty(n_samples) if target is not None else None
    photons = {lbl: np.empty(n_samples) for lbl in photon_sparse}
    norm_trace = np.empty(n_samples)
    snapshots: list[np.ndarray] | None = [] if store_snapshots else None

    have_terms = stack.shape[0] > 0

    def rhs(t, y):
        if not have_terms:
            return np.zeros_like(y)
        ht = np.tensordot(coeffs * np.exp(1j * freqs * t), stack, axes=1)
        return -1j * (ht @ y)

    def on_sample(i, t, y):
        norm_trace[i] = np.linalg.norm(y)
        if fid is not None:
            fid[i] = abs(np.vdot(target.amplitudes, y))
        for lbl, op in photon_sparse.items():
            photons[lbl][i] = np.real(np.vdot(y, op @ y))
        if snapshots is not None:
            snapshots.append(y.copy())

    y_final, stats = _integrate(rhs, psi0.amplitudes, times, tol, on_sample)
    return SimResult(
        times=times,
        fidelity=fid,
        photons=photons,
        norm_trace=norm_trace,
        stats=stats,
        snapshots=snapshots,
        metadata=metadata or {},
    )


def photon_time_averages(result: SimResult) -> dict[str, float]:
    """Trapezoidal time-mean photon number per cavity over the run."""
    span = result.times[-1] - result.times[0]
    return {
        lbl: float(np.trapezoid(tr, result.times) / span)
        for lbl, tr in result.photons.items()
    }
