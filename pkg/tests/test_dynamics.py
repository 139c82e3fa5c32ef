"""Lindblad propagation against single-channel analytics, plus the
integrator's bookkeeping guarantees."""

import math

import numpy as np
import pytest

from cavityw.basis import (
    ModeKind,
    ModeSpec,
    StateVector,
    build_basis,
    embed,
    level_projector,
)
from cavityw.device import DecoherenceParams
from cavityw.dynamics import (
    LindbladChannel,
    LindbladSpec,
    build_lindblad_spec,
    evolve_closed,
    evolve_lindblad,
    fidelity,
    photon_time_averages,
    pure_fidelity,
)
from cavityw.errors import BasisMismatchError, ConfigurationError
from cavityw.hamiltonians import TermSet, build_full_interaction
from cavityw.analytic import ideal_target, initial_state, w_state


def single_qutrit(levels=2):
    return build_basis([ModeSpec(ModeKind.QUTRIT, levels, "q1")])


def single_cavity():
    return build_basis([ModeSpec(ModeKind.CAVITY, 2, "c1")])


def qutrit_decay_result(gamma, t_final, tol=1e-9, hamiltonian=None):
    basis = single_qutrit()
    dec = DecoherenceParams(
        kappa={}, gamma={"q1": gamma}, gamma_21={}, gamma_20={},
        gamma_phi1={}, gamma_phi2={},
    )
    spec = build_lindblad_spec(dec, basis)
    rho0 = StateVector.basis_state(basis, q1=1).density_matrix()
    h = hamiltonian if hamiltonian is not None else TermSet(basis)
    return evolve_lindblad(
        h, spec, rho0, t_final, tol=tol, n_samples=101,
        target=StateVector.basis_state(basis, q1=1), store_snapshots=True,
    )


def test_amplitude_decay():
    gamma = 1.0 / 10e-6
    res = qutrit_decay_result(gamma, 20e-6)
    pop = np.array([s[1, 1].real for s in res.snapshots])
    assert np.max(np.abs(pop - np.exp(-gamma * res.times))) < 1e-7
    # fidelity against the excited state is sqrt of the population
    assert np.max(np.abs(res.fidelity - np.sqrt(pop))) < 1e-10


def test_decay_invariant_under_diagonal_frame():
    # a static detuning term must not alter the populations
    gamma = 1.0 / 10e-6
    basis = single_qutrit()
    h = TermSet(basis)
    h.add_static(embed(level_projector(2, 1), "q1", basis) * (2 * math.pi * 50e6))
    res0 = qutrit_decay_result(gamma, 2e-6)
    res1 = qutrit_decay_result(gamma, 2e-6, hamiltonian=h)
    p0 = np.array([s[1, 1].real for s in res0.snapshots])
    p1 = np.array([s[1, 1].real for s in res1.snapshots])
    assert np.max(np.abs(p0 - p1)) < 1e-7


def test_pure_dephasing_halves_coherence_rate():
    gphi = 1.0 / 5e-6
    basis = single_qutrit()
    dec = DecoherenceParams(
        kappa={}, gamma={}, gamma_21={}, gamma_20={},
        gamma_phi1={"q1": gphi}, gamma_phi2={},
    )
    spec = build_lindblad_spec(dec, basis)
    plus = StateVector(basis, np.array([1.0, 1.0]) / math.sqrt(2))
    res = evolve_lindblad(
        TermSet(basis), spec, plus.density_matrix(), 10e-6,
        tol=1e-9, n_samples=101, store_snapshots=True,
    )
    coh = np.array([abs(s[0, 1]) for s in res.snapshots])
    assert np.max(np.abs(coh - 0.5 * np.exp(-0.5 * gphi * res.times))) < 1e-7
    # populations untouched by a projector channel
    assert abs(res.snapshots[-1][1, 1].real - 0.5) < 1e-8


def test_photon_decay_time_average():
    kappa = 1.0 / 5e-6
    basis = single_cavity()
    dec = DecoherenceParams(
        kappa={"c1": kappa}, gamma={}, gamma_21={}, gamma_20={},
        gamma_phi1={}, gamma_phi2={},
    )
    spec = build_lindblad_spec(dec, basis)
    rho0 = StateVector.basis_state(basis, c1=1).density_matrix()
    T = 5e-6
    res = evolve_lindblad(TermSet(basis), spec, rho0, T, tol=1e-9, n_samples=401)
    mean = photon_time_averages(res)["c1"]
    assert mean == pytest.approx((1 - math.exp(-kappa * T)) / (kappa * T), abs=1e-6)


def test_channel_inventory(lifetimes_ref, sector_basis):
    spec = build_lindblad_spec(lifetimes_ref, sector_basis)
    # 6 cavity decay channels + 7 qutrits x 5 channels
    assert len(spec.channels) == 41
    kinds = [ch.kind for ch in spec.channels]
    assert kinds.count("dephasing") == 14
    # the level-2 operators project to zero on the single-excitation sector
    zeros = [ch for ch in spec.channels if ch.operator.is_zero()]
    assert len(zeros) == 21  # gamma_21, gamma_20, gamma_phi2 per qutrit
    # zero rates drop channels entirely
    assert len(build_lindblad_spec(DecoherenceParams.zero(3), sector_basis).channels) == 0


def test_two_level_qutrit_warns_on_level2_rates():
    basis = single_qutrit(levels=2)
    dec = DecoherenceParams(
        kappa={}, gamma={}, gamma_21={"q1": 1e5}, gamma_20={},
        gamma_phi1={}, gamma_phi2={},
    )
    with pytest.warns(UserWarning, match="2 levels"):
        spec = build_lindblad_spec(dec, basis)
    assert len(spec.channels) == 0


def test_lossless_run_is_unitary(params_n1, small_sector):
    h = build_full_interaction(params_n1, small_sector)
    psi0 = initial_state(1, small_sector)
    tgt = ideal_target(1, small_sector)
    t_final = 0.2e-6
    lres = evolve_lindblad(
        h, build_lindblad_spec(DecoherenceParams.zero(1), small_sector),
        psi0.density_matrix(), t_final, tol=1e-9, n_samples=51,
        target=tgt, store_snapshots=True,
    )
    cres = evolve_closed(h, psi0, t_final, tol=1e-10, n_samples=51, target=tgt)
    purity = [np.trace(s @ s).real for s in lres.snapshots]
    assert min(purity) > 1 - 1e-7
    assert np.max(np.abs(lres.fidelity - cres.fidelity)) < 1e-7


def test_fidelity_conventions(sector_basis):
    w = w_state(3, sector_basis, "unprimed")
    wp = w_state(3, sector_basis, "primed")
    assert fidelity(w.density_matrix(), w) == pytest.approx(1.0, abs=1e-14)
    assert fidelity(w.density_matrix(), wp) == pytest.approx(0.0, abs=1e-14)
    mix = 0.5 * w.density_matrix().matrix + 0.5 * wp.density_matrix().matrix
    assert fidelity(mix, wp) == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    assert pure_fidelity(w.amplitudes, wp) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(BasisMismatchError):
        from cavityw.experiments import simulation_basis

        fidelity(w.density_matrix(), w_state(3, simulation_basis(3, e_max=None), "primed"))


def test_integrator_bookkeeping():
    res = qutrit_decay_result(1.0 / 10e-6, 5e-6, tol=1e-8)
    tol = 1e-8
    assert res.stats.steps > 0
    assert res.stats.max_trace_drift <= 10 * tol * res.stats.steps
    assert res.stats.min_eigenvalue >= -100 * tol
    assert np.max(np.abs(res.norm_trace - 1.0)) < 1e-8


def test_input_validation(sector_basis, lifetimes_ref):
    h = TermSet(sector_basis)
    rho0 = w_state(3, sector_basis).density_matrix()
    spec = build_lindblad_spec(lifetimes_ref, sector_basis)
    with pytest.raises(ConfigurationError):
        evolve_lindblad(h, spec, rho0, 1e-7, tol=1e-2)
    with pytest.raises(ConfigurationError):
        evolve_lindblad(h, spec, rho0, 1e-7, tol=1e-15)
    with pytest.raises(ConfigurationError):
        evolve_lindblad(h, spec, rho0, -1e-7)
    with pytest.raises(ConfigurationError):
        evolve_lindblad(h, spec, rho0, 1e-7, n_samples=1)
    with pytest.raises(ConfigurationError):
        LindbladSpec(sector_basis, (LindbladChannel(-1.0, spec.channels[0].operator, "decay"),))
