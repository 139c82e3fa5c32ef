"""Numerical experiments: fidelity sweeps over the normalized detuning b
and the breakage ratio r, effective-vs-full comparisons, and the
small-instance oracle harness.

Everything here is deterministic: identical plans produce bit-identical
records, sequentially or across worker processes.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import closed_form_state, ideal_target, initial_state, transfer_time
from .basis import CompositeBasis, ModeKind, ModeSpec, build_basis
from .device import (
    TWO_PI,
    DecoherenceParams,
    DeviceParams,
    apply_breakage,
    check_conditions,
    derive_params,
    effective_params,
)
from .dynamics import (
    build_lindblad_spec,
    evolve_closed,
    evolve_lindblad,
    photon_time_averages,
)
from .errors import ConfigurationError
from .hamiltonians import build_frame_and_exchange, build_full_interaction

__all__ = [
    "simulation_basis",
    "reference_device",
    "SweepPlan",
    "SweepRecord",
    "SweepResult",
    "run_transfer",
    "sweep_b",
    "sweep_r",
    "compare_effective_vs_full",
    "frame_invariance_residual",
    "oracle_equivalence",
    "OracleReport",
]

DEFAULT_OMEGA10 = TWO_PI * 6.5e9
DEFAULT_ANHARMONICITY = -TWO_PI * 400e6


def default_detunings(n: int) -> tuple[float, ...]:
    """Signed detunings -2*pi*0.5*j GHz for j = 1..n."""
    return tuple(-TWO_PI * 0.5e9 * j for j in range(1, n + 1))


def simulation_basis(
    n: int,
    qutrit_levels: int = 3,
    cavity_levels: int = 2,
    e_max: int | None = 1,
) -> CompositeBasis:
    """Default basis: qutrits q1..qn, q1p..qnp, qA then cavities, in the
    canonical declaration order, restricted to the single-excitation
    sector unless e_max is None."""
    modes = (
        [ModeSpec(ModeKind.QUTRIT, qutrit_levels, f"q{j}") for j in range(1, n + 1)]
        + [ModeSpec(ModeKind.QUTRIT, qutrit_levels, f"q{j}p") for j in range(1, n + 1)]
        + [ModeSpec(ModeKind.QUTRIT, qutrit_levels, "qA")]
        + [ModeSpec(ModeKind.CAVITY, cavity_levels, f"c{j}") for j in range(1, n + 1)]
        + [ModeSpec(ModeKind.CAVITY, cavity_levels, f"c{j}p") for j in range(1, n + 1)]
    )
    return build_basis(modes, e_max)


def reference_device(
    b: float = 9.0,
    n: int = 3,
    deltas: tuple[float, ...] | None = None,
    omega10: float = DEFAULT_OMEGA10,
    anharmonicity: float = DEFAULT_ANHARMONICITY,
    crosstalk_multiple: float = 0.0,
) -> DeviceParams:
    """Working-point device: g_1 fixed by the normalized detuning b, all
    other couplings derived, uniform crosstalk as a multiple of the
    largest coupler coupling."""
    if b <= 1:
        raise ConfigurationError("normalized detuning b must be > 1 (dispersive regime)")
    deltas = deltas if deltas is not None else default_detunings(n)
    g_1 = abs(deltas[0]) / b
    params = derive_params(deltas, g_1, n, omega10, anharmonicity)
    if crosstalk_multiple > 0:
        params = params.with_uniform_crosstalk(crosstalk_multiple * params.g_max)
    return params


@dataclass(frozen=True)
class SweepPlan:
    """Recipe for a fidelity sweep. Holds only primitives so points can be
    dispatched to worker processes."""

    variable: str  # "b" or "r"
    grid: tuple[float, ...]
    n: int = 3
    deltas: tuple[float, ...] | None = None
    omega10: float = DEFAULT_OMEGA10
    anharmonicity: float = DEFAULT_ANHARMONICITY
    crosstalk_multiples: tuple[float, ...] = (0.01,)
    base_b: float = 9.0  # working point for r sweeps
    rates: tuple[float, float, float, float, float, float] = field(
        default=tuple(
            1.0 / (t * 1e-6) for t in (5.0, 10.0, 5.0, 25.0, 5.0, 5.0)
        )  # kappa, gamma, gamma_21, gamma_20, gamma_phi1, gamma_phi2
    )
    qutrit_levels: int = 3
    cavity_levels: int = 2
    e_max: int | None = 1
    tol: float = 1e-8
    n_samples: int = 400
    fixed_horizon: float | None = None  # seconds; None = ideal transfer time per point

    def __post_init__(self):
        if self.variable not in ("b", "r"):
            raise ConfigurationError(f"unknown sweep variable {self.variable!r}")
        g = np.asarray(self.grid, dtype=float)
        if g.size == 0:
            raise ConfigurationError("sweep grid is empty")
        if g.size > 1 and not (np.all(np.diff(g) > 0) or np.all(np.diff(g) < 0)):
            raise ConfigurationError("sweep grid must be strictly monotone")
        if any(m < 0 for m in self.crosstalk_multiples):
            raise ConfigurationError("crosstalk multiples must be >= 0")

    def decoherence(self) -> DecoherenceParams:
        k, g, g21, g20, gp1, gp2 = self.rates
        return DecoherenceParams.uniform(self.n, k, g, g21, g20, gp1, gp2)


@dataclass(frozen=True)
class SweepRecord:
    value: float
    fidelity: float
    fidelity_sq: float
    t_transfer: float
    photon_means: dict[str, float]
    conditions_ok: bool
    wall_ms: float


@dataclass(frozen=True)
class SweepResult:
    variable: str
    crosstalk_multiple: float
    records: tuple[SweepRecord, ...]
    metadata: dict


def run_transfer(
    params: DeviceParams,
    decoherence: DecoherenceParams,
    basis: CompositeBasis,
    tol: float = 1e-8,
    n_samples: int = 400,
    horizon: float | None = None,
    t_transfer_override: float | None = None,
    store_snapshots: bool = False,
):
    """One lossy evolution of the transfer protocol.

    Returns (SimResult, transfer time used). The horizon defaults to the
    ideal transfer time; `t_transfer_override` supplies it when the
    matching conditions are deliberately broken.
    """
    if t_transfer_override is not None:
        t_star = t_transfer_override
    else:
        t_star = transfer_time(effective_params(params))
    h = build_full_interaction(params, basis)
    spec = build_lindblad_spec(decoherence, basis)
    rho0 = initial_state(params.n, basis).density_matrix()
    target = ideal_target(params.n, basis)
    result = evolve_lindblad(
        h,
        spec,
        rho0,
        horizon if horizon is not None else t_star,
        tol=tol,
        n_samples=n_samples,
        target=target,
        store_snapshots=store_snapshots,
        metadata={"params": params.fingerprint()},
    )
    return result, t_star


def _point_b(plan: SweepPlan, b: float, multiple: float) -> SweepRecord:
    t0 = time.perf_counter()
    params = reference_device(
        b, plan.n, plan.deltas, plan.omega10, plan.anharmonicity, multiple
    )
    basis = simulation_basis(plan.n, plan.qutrit_levels, plan.cavity_levels, plan.e_max)
    report = check_conditions(params)
    result, t_star = run_transfer(
        params,
        plan.decoherence(),
        basis,
        tol=plan.tol,
        n_samples=plan.n_samples,
        horizon=plan.fixed_horizon,
    )
    f = float(result.fidelity[-1])
    return SweepRecord(
        value=b,
        fidelity=f,
        fidelity_sq=f * f,
        t_transfer=t_star,
        photon_means=photon_time_averages(result),
        conditions_ok=report.all_passed,
        wall_ms=(time.perf_counter() - t0) * 1e3,
    )


def _point_r(plan: SweepPlan, r: float, multiple: float) -> SweepRecord:
    t0 = time.perf_counter()
    base = reference_device(
        plan.base_b, plan.n, plan.deltas, plan.omega10, plan.anharmonicity, multiple
    )
    t_star = transfer_time(effective_params(base))
    params = apply_breakage(base, r)
    basis = simulation_basis(plan.n, plan.qutrit_levels, plan.cavity_levels, plan.e_max)
    report = check_conditions(params)
    result, _ = run_transfer(
        params,
        plan.decoherence(),
        basis,
        tol=plan.tol,
        n_samples=plan.n_samples,
        horizon=plan.fixed_horizon if plan.fixed_horizon is not None else t_star,
        t_transfer_override=t_star,
    )
    f = float(result.fidelity[-1])
    return SweepRecord(
        value=r,
        fidelity=f,
        fidelity_sq=f * f,
        t_transfer=t_star,
        photon_means=photon_time_averages(result),
        conditions_ok=report.all_passed,
        wall_ms=(time.perf_counter() - t0) * 1e3,
    )


def _map_points(fn, plan, values, multiple, workers):
    if workers <= 1:
        return [fn(plan, v, multiple) for v in values]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, [plan] * len(values), values, [multiple] * len(values)))


def sweep_b(plan: SweepPlan, workers: int = 1) -> list[SweepResult]:
    """Fidelity versus normalized detuning, one curve per crosstalk level."""
    if plan.variable != "b":
        raise ConfigurationError("plan variable must be 'b'")
    if any(v <= 1 for v in plan.grid):
        raise ConfigurationError("b grid must stay in the dispersive regime (b > 1)")
    out = []
    for m in plan.crosstalk_multiples:
        records = _map_points(_point_b, plan, list(plan.grid), m, workers)
        out.append(
            SweepResult("b", m, tuple(records), {"n": plan.n, "tol": plan.tol})
        )
    return out


def sweep_r(plan: SweepPlan, workers: int = 1) -> SweepResult:
    """Fidelity versus the breakage ratio r at the plan's working point.

    Couplings stay at their r=1 values and each point is evolved for the
    r=1 transfer time.
    """
    if plan.variable != "r":
        raise ConfigurationError("plan variable must be 'r'")
    if any(v <= 0 for v in plan.grid):
        raise ConfigurationError("r grid must be positive")
    multiple = plan.crosstalk_multiples[0]
    records = _map_points(_point_r, plan, list(plan.grid), multiple, workers)
    return SweepResult(
        "r", multiple, tuple(records), {"n": plan.n, "b": plan.base_b, "tol": plan.tol}
    )


def frame_invariance_residual(
    params: DeviceParams, basis: CompositeBasis, t: float
) -> float:
    """Relative change of the exchange Hamiltonian under conjugation by
    the diagonal frame part; zero when the phase-cancellation conditions
    hold, measurably nonzero under breakage."""
    frame, ex = build_frame_and_exchange(params, basis)
    h0 = frame.to_dense()
    off = h0 - np.diag(np.diag(h0))
    if np.max(np.abs(off)) > 1e-12 * max(np.max(np.abs(h0)), 1.0):
        raise ConfigurationError("frame Hamiltonian expected diagonal in this basis")
    phases = np.exp(1j * np.diag(h0).real * t)
    ex_d = ex.to_dense()
    conj = phases[:, None] * ex_d * phases.conj()[None, :]
    denom = np.linalg.norm(ex_d)
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(conj - ex_d) / denom)


def compare_effective_vs_full(
    params: DeviceParams,
    basis: CompositeBasis,
    tol: float = 1e-8,
    n_samples: int = 400,
    horizon: float | None = None,
) -> dict:
    """Closed full-model evolution against the closed-form branch
    amplitudes; reports the worst fidelity deviation over the horizon and
    the frame-invariance residual at the transfer time."""
    eff = effective_params(params)
    t_star = transfer_time(eff)
    t_end = horizon if horizon is not None else t_star
    h = build_full_interaction(params, basis)
    psi0 = initial_state(params.n, basis)
    target = ideal_target(params.n, basis)
    result = evolve_closed(h, psi0, t_end, tol=tol, n_samples=n_samples, target=target)
    f_analytic = np.array(
        [abs(closed_form_state(eff, params.n, t).c_wp) for t in result.times]
    )
    dev = np.max(np.abs(result.fidelity - f_analytic))
    return {
        "max_fidelity_deviation": float(dev),
        "fidelity_full_final": float(result.fidelity[-1]),
        "fidelity_analytic_final": float(f_analytic[-1]),
        "frame_residual": frame_invariance_residual(params, basis, t_star),
        "t_transfer": t_star,
    }


def _inject(basis_small: CompositeBasis, basis_big: CompositeBasis) -> np.ndarray:
    """Isometry mapping sector-basis amplitudes into the unrestricted basis."""
    m = np.zeros((basis_big.dimension, basis_small.dimension))
    for i, s in enumerate(basis_small.states):
        m[basis_big.index[s], i] = 1.0
    return m


def _expm_oracle(h, psi0: np.ndarray, t_final: float, micro_steps: int, checkpoints):
    """Time-ordered product of dense midpoint matrix exponentials.

    Each micro-step applies the exact exponential of the generator frozen
    at the step midpoint (computed by Hermitian eigendecomposition, which
    is expm for these matrices). Returns the state at each checkpoint
    index. Second-order in the step size, so the step count must resolve
    the fastest interaction-picture phase well.
    """
    dt = t_final / micro_steps
    coeffs, freqs, stack = h.dense_stack()
    psi = psi0.astype(complex).copy()
    out = {0: psi.copy()}
    marks = set(checkpoints)
    for k in range(micro_steps):
        t_mid = (k + 0.5) * dt
        gen = np.tensordot(coeffs * np.exp(1j * freqs * t_mid), stack, axes=1)
        w, v = np.linalg.eigh(gen)
        psi = v @ (np.exp(-1j * w * dt) * (v.conj().T @ psi))
        if (k + 1) in marks:
            out[k + 1] = psi.copy()
    return out


@dataclass(frozen=True)
class OracleReport:
    closed_sector_vs_full: float      # max state distance, adaptive runs
    adaptive_vs_expm: float           # max state distance vs dense oracle
    lindblad_fidelity_distance: float  # sector vs full-basis lossy run
    passed: bool


def oracle_equivalence(
    b: float = 9.0,
    tol: float = 1e-9,
    micro_steps: int = 320_000,
    n_samples: int = 101,
    state_tol: float = 1e-6,
    fidelity_tol: float = 1e-8,
) -> OracleReport:
    """Single-pair (n=1) instance checked three ways: sector vs
    unrestricted closed evolution, adaptive stepper vs a dense
    time-ordered matrix-exponential oracle, and sector vs full-basis
    lossy evolution."""
    n = 1
    params = reference_device(b, n, crosstalk_multiple=0.01)
    basis_s = simulation_basis(n, e_max=1)
    basis_f = simulation_basis(n, e_max=None)
    t_star = transfer_time(effective_params(params))

    h_s = build_full_interaction(params, basis_s)
    h_f = build_full_interaction(params, basis_f)
    psi0_s = initial_state(n, basis_s)
    psi0_f = initial_state(n, basis_f)

    res_s = evolve_closed(h_s, psi0_s, t_star, tol=tol, n_samples=n_samples, store_snapshots=True)
    res_f = evolve_closed(h_f, psi0_f, t_star, tol=tol, n_samples=n_samples, store_snapshots=True)
    inj = _inject(basis_s, basis_f)
    d_sector = max(
        float(np.linalg.norm(big - inj @ small))
        for small, big in zip(res_s.snapshots, res_f.snapshots)
    )

    # dense time-ordered oracle on the sector basis
    per = micro_steps // (n_samples - 1)
    checkpoints = [k * per for k in range(n_samples)]
    oracle_states = _expm_oracle(h_s, psi0_s.amplitudes, t_star, per * (n_samples - 1), checkpoints)
    res_o = evolve_closed(h_s, psi0_s, t_star, tol=tol, n_samples=n_samples, store_snapshots=True)
    d_oracle = max(
        float(np.linalg.norm(res_o.snapshots[i] - oracle_states[checkpoints[i]]))
        for i in range(n_samples)
    )

    dec = DecoherenceParams.from_lifetimes_us(n)
    spec_s = build_lindblad_spec(dec, basis_s)
    spec_f = build_lindblad_spec(dec, basis_f)
    rho_s = psi0_s.density_matrix()
    rho_f = psi0_f.density_matrix()
    tgt_s = ideal_target(n, basis_s)
    tgt_f = ideal_target(n, basis_f)
    lr_s = evolve_lindblad(h_s, spec_s, rho_s, t_star, tol=tol, n_samples=n_samples, target=tgt_s)
    lr_f = evolve_lindblad(h_f, spec_f, rho_f, t_star, tol=tol, n_samples=n_samples, target=tgt_f)
    d_lind = float(np.max(np.abs(lr_s.fidelity - lr_f.fidelity)))

    return OracleReport(
        closed_sector_vs_full=d_sector,
        adaptive_vs_expm=d_oracle,
        lindblad_fidelity_distance=d_lind,
        passed=(d_sector < state_tol and d_oracle < state_tol and d_lind < fidelity_tol),
    )
