"""Device parameters, matching rules, condition checks, breakage."""

import math

import pytest

from cavityw.device import (
    DecoherenceParams,
    apply_breakage,
    cavity_lifetime,
    check_conditions,
    crosstalk_estimate,
    derive_params,
    effective_params,
    quality_factor,
)
from cavityw.errors import ConditionViolationError, ConfigurationError
from cavityw.experiments import reference_device

from conftest import TWO_PI, make_params

MHZ = TWO_PI * 1e6


def test_working_point_couplings(params_b9):
    # published working point rounded to 0.1 MHz
    expected = {"c1": 55.6, "c2": 78.6, "c3": 96.2}
    expected_a = {"c1": 22.7, "c2": 32.1, "c3": 39.3}
    for c, mhz in expected.items():
        assert params_b9.g[c] / MHZ == pytest.approx(mhz, abs=0.05)
        assert params_b9.g[c + "p"] == params_b9.g[c]
    for c, mhz in expected_a.items():
        assert params_b9.g_A[c] / MHZ == pytest.approx(mhz, abs=0.05)
    # two-photon couplings at sqrt(2) times the one-photon ones
    for c in params_b9.cavities:
        assert params_b9.g_t[c] == pytest.approx(math.sqrt(2) * params_b9.g[c])
        assert params_b9.g_At[c] == pytest.approx(math.sqrt(2) * params_b9.g_A[c])


def test_matching_rules_exact(params_b9):
    # uniform dispersive shift and exchange rate to machine precision
    shifts = [params_b9.g[c] ** 2 / params_b9.delta(c) for c in params_b9.cavities]
    assert max(abs(s - shifts[0]) for s in shifts) <= 1e-12 * abs(shifts[0])
    lams = [
        params_b9.g[c] * params_b9.g_A[c] / params_b9.delta(c)
        for c in params_b9.cavities
    ]
    assert max(abs(v - lams[0]) for v in lams) <= 1e-12 * abs(lams[0])
    # coupler shift sum reproduces the common shift automatically
    total = sum(params_b9.g_A[c] ** 2 / params_b9.delta_A(c) for c in params_b9.cavities)
    assert total == pytest.approx(shifts[0], rel=1e-12)


def test_coupler_division_n1():
    p = make_params(n=1)
    assert p.g_A["c1"] == pytest.approx(p.g["c1"] / math.sqrt(2))


def test_effective_rates(params_b9):
    eff = effective_params(params_b9)
    assert eff.lam < 0 and eff.chi < 0  # negative detunings at the working point
    assert abs(eff.lam) / MHZ == pytest.approx(500.0 / (81.0 * math.sqrt(6)), rel=1e-12)
    assert abs(eff.chi) / MHZ == pytest.approx(500.0 / 81.0, rel=1e-12)
    assert eff.big_lambda == pytest.approx(abs(eff.chi), rel=1e-12)
    assert eff.t_transfer == pytest.approx(0.081e-6, rel=1e-12)
    assert eff.t_transfer * eff.big_lambda == pytest.approx(math.pi, rel=1e-15)


def test_transfer_time_scales_with_coupling():
    base = effective_params(make_params(b=9.0))
    strong = effective_params(make_params(b=4.5))  # g doubled
    assert strong.t_transfer == pytest.approx(base.t_transfer / 4.0, rel=1e-12)


def test_conditions_pass_at_working_point(params_b9):
    report = check_conditions(params_b9)
    assert report.all_passed
    assert report.get("detuning-matching").measured == 0.0
    assert report.get("uniform-shift").measured <= 1e-14
    assert report.get("uniform-exchange").measured <= 1e-14
    assert report.get("coupler-shift-sum").measured <= 1e-14
    # nearest cavity spacing 0.5 GHz against g_max ~ 96 MHz / (2 pi)
    assert report.get("cavity-separation").measured > 10.0
    assert report.get("dispersive").measured == pytest.approx(9.0, rel=1e-12)


def test_effective_params_rejects_nonuniform(params_b9):
    broken = apply_breakage(params_b9, 1.2)
    with pytest.raises(ConditionViolationError):
        effective_params(broken)


def test_breakage_identity_and_scaling(params_b9):
    assert apply_breakage(params_b9, 1.0) is params_b9
    broken = apply_breakage(params_b9, 1.1)
    for j in (1, 2, 3):
        assert broken.delta(f"c{j}p") == pytest.approx(
            1.1 * params_b9.delta(f"c{j}"), rel=1e-12
        )
        assert broken.delta(f"c{j}") == params_b9.delta(f"c{j}")
        assert broken.g[f"c{j}p"] == params_b9.g[f"c{j}p"]  # couplings untouched
    report = check_conditions(broken)
    assert report.get("detuning-matching").measured == pytest.approx(0.1, rel=1e-12)
    assert not report.get("detuning-matching").passed
    with pytest.raises(ConfigurationError):
        apply_breakage(params_b9, 0.0)


def test_derive_params_validation():
    d1 = -TWO_PI * 0.5e9
    with pytest.raises(ConfigurationError):
        derive_params([d1, 2 * d1], abs(d1) / 9, 3, TWO_PI * 6.5e9)  # wrong count
    with pytest.raises(ConditionViolationError):
        derive_params([d1, -d1, 2 * d1], abs(d1) / 9, 3, TWO_PI * 6.5e9)  # mixed signs
    with pytest.raises(ConfigurationError):
        derive_params([d1], 0.0, 1, TWO_PI * 6.5e9)


def test_crosstalk_estimate(params_b9):
    caps = {c: 1e-15 for c in params_b9.cavities}
    cq = 94e-15
    est = crosstalk_estimate(caps, cq, params_b9)
    c_sigma = cq + 6e-15
    for (k, l), val in ((tuple(sorted(key)), v) for key, v in est.items()):
        expect = max(params_b9.g_A[k], params_b9.g_A[l]) * 1e-15 / c_sigma
        assert val == pytest.approx(expect, rel=1e-12)
    # vanishing pad capacitances kill the estimate
    tiny = crosstalk_estimate({c: 1e-22 for c in params_b9.cavities}, cq, params_b9)
    assert max(tiny.values()) < 1e-6 * max(est.values())
    with pytest.raises(ConfigurationError):
        crosstalk_estimate({"c1": 1e-15}, cq, params_b9)


def test_with_uniform_crosstalk(params_b9):
    rate = 0.01 * params_b9.g_max
    p = params_b9.with_uniform_crosstalk(rate)
    assert p.crosstalk("c1", "c3p") == rate
    assert p.crosstalk("c3p", "c1") == rate
    assert params_b9.crosstalk("c1", "c2") == 0.0


def test_cavity_lifetime_and_quality():
    kappa = {c: 1.0 / 5e-6 for c in ("c1", "c2", "c3", "c1p", "c2p", "c3p")}
    assert cavity_lifetime(kappa, 3) == pytest.approx(5e-6 / 6)
    assert cavity_lifetime({"c1": 0.0}, 1) == math.inf
    # 5 us cavities between 7 and 8 GHz: Q in the low 1e5 range
    assert quality_factor(TWO_PI * 7e9, 1.0 / 5e-6) == pytest.approx(2.2e5, rel=0.01)
    assert quality_factor(TWO_PI * 8e9, 1.0 / 5e-6) == pytest.approx(2.51e5, rel=0.01)
    assert quality_factor(TWO_PI * 7e9, 0.0) == math.inf


def test_decoherence_validation():
    with pytest.raises(ConfigurationError):
        DecoherenceParams.uniform(3, -1.0, 0, 0, 0, 0, 0)
    with pytest.raises(ConfigurationError):
        DecoherenceParams.from_lifetimes_us(3, kappa_us=0.0)
    z = DecoherenceParams.zero(3)
    assert all(v == 0 for v in z.kappa.values())
    ref = DecoherenceParams.from_lifetimes_us(3)
    assert ref.kappa["c1"] == pytest.approx(1.0 / 5e-6)
    assert ref.gamma["qA"] == pytest.approx(1.0 / 10e-6)
    assert ref.gamma_20["q2p"] == pytest.approx(1.0 / 25e-6)


def test_reference_device_validation():
    with pytest.raises(ConfigurationError):
        reference_device(b=1.0)
    p = reference_device(b=9.0, n=2)
    assert p.n == 2 and len(p.cavities) == 4


def test_fingerprint_distinguishes(params_b9):
    assert params_b9.fingerprint() == make_params().fingerprint()
    assert params_b9.fingerprint() != apply_breakage(params_b9, 1.1).fingerprint()
    assert (
        params_b9.fingerprint()
        != params_b9.with_uniform_crosstalk(0.01 * params_b9.g_max).fingerprint()
    )
