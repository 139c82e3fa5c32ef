"""Physical device parameters and the coupling/detuning matching rules.

All frequencies and rates are stored internally as angular frequencies
(rad/s); times in seconds. Detunings are kept signed everywhere (they are
negative for the reference working point), and are always derived from
the stored transition and cavity frequencies, never stored independently.

Label conventions: qutrits "q1".."qn", "q1p".."qnp" and coupler "qA";
cavities "c1".."cn", "c1p".."cnp". Cavity "ck" hosts qutrit "qk".
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import ConditionViolationError, ConfigurationError

TWO_PI = 2.0 * math.pi

__all__ = [
    "TWO_PI",
    "qutrit_labels",
    "cavity_labels",
    "qutrit_of",
    "DeviceParams",
    "DecoherenceParams",
    "EffectiveParams",
    "ConditionCheck",
    "ConditionReport",
    "derive_params",
    "effective_params",
    "check_conditions",
    "apply_breakage",
    "crosstalk_estimate",
    "cavity_lifetime",
    "quality_factor",
]


def qutrit_labels(n: int) -> list[str]:
    """Non-coupler qutrits then the coupler: q1..qn, q1p..qnp, qA."""
    return [f"q{j}" for j in range(1, n + 1)] + [f"q{j}p" for j in range(1, n + 1)] + ["qA"]


def cavity_labels(n: int) -> list[str]:
    return [f"c{j}" for j in range(1, n + 1)] + [f"c{j}p" for j in range(1, n + 1)]


def qutrit_of(cavity: str) -> str:
    """The qutrit hosted by a cavity ("c2p" -> "q2p")."""
    return "q" + cavity[1:]


def _frozen(d: Mapping) -> Mapping:
    return MappingProxyType(dict(d))


@dataclass(frozen=True)
class DeviceParams:
    """Transition/cavity frequencies, couplings, and crosstalk (rad/s).

    g maps each cavity to the coupling of its own qutrit; g_A to the
    coupler's coupling; g_t / g_At are the |1>-|2> transition analogues.
    g_ct maps frozenset cavity pairs to the inter-cavity coupling.
    """

    n: int
    omega10: Mapping[str, float]
    omega21: Mapping[str, float]
    omega_c: Mapping[str, float]
    g: Mapping[str, float]
    g_A: Mapping[str, float]
    g_t: Mapping[str, float]
    g_At: Mapping[str, float]
    g_ct: Mapping[frozenset, float]

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        for name in ("omega10", "omega21", "omega_c", "g", "g_A", "g_t", "g_At", "g_ct"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        for lbl, w in {**self.omega10, **self.omega_c}.items():
            if w <= 0:
                raise ConfigurationError(f"frequency for {lbl!r} must be > 0")
        for m in (self.g, self.g_A, self.g_t, self.g_At, self.g_ct):
            for k, v in m.items():
                if v < 0:
                    raise ConfigurationError(f"coupling for {k!r} must be >= 0")

    # Derived detunings -----------------------------------------------------

    def delta(self, cavity: str) -> float:
        return self.omega10[qutrit_of(cavity)] - self.omega_c[cavity]

    def delta_A(self, cavity: str) -> float:
        return self.omega10["qA"] - self.omega_c[cavity]

    def delta_t(self, cavity: str) -> float:
        return self.omega21[qutrit_of(cavity)] - self.omega_c[cavity]

    def delta_At(self, cavity: str) -> float:
        return self.omega21["qA"] - self.omega_c[cavity]

    def cavity_splitting(self, k: str, l: str) -> float:
        """Frequency difference between cavities k and l."""
        return self.omega_c[k] - self.omega_c[l]

    @property
    def cavities(self) -> list[str]:
        return cavity_labels(self.n)

    @property
    def qutrits(self) -> list[str]:
        return qutrit_labels(self.n)

    @property
    def g_max(self) -> float:
        return max(self.g_A.values())

    def crosstalk(self, k: str, l: str) -> float:
        return self.g_ct.get(frozenset((k, l)), 0.0)

    def with_uniform_crosstalk(self, rate: float) -> "DeviceParams":
        """All inter-cavity couplings set to the same value."""
        if rate < 0:
            raise ConfigurationError("crosstalk rate must be >= 0")
        cavs = self.cavities
        ct = {
            frozenset((k, l)): rate
            for i, k in enumerate(cavs)
            for l in cavs[i + 1 :]
        }
        return replace(self, g_ct=ct)

    def fingerprint(self) -> str:
        payload = {
            "n": self.n,
            "omega10": sorted(self.omega10.items()),
            "omega21": sorted(self.omega21.items()),
            "omega_c": sorted(self.omega_c.items()),
            "g": sorted(self.g.items()),
            "g_A": sorted(self.g_A.items()),
            "g_t": sorted(self.g_t.items()),
            "g_At": sorted(self.g_At.items()),
            "g_ct": sorted((tuple(sorted(k)), v) for k, v in self.g_ct.items()),
        }
        return hashlib.sha256(json.dumps(payload).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class DecoherenceParams:
    """Decay and dephasing rates (1/s): kappa per cavity, five qutrit
    rates per qutrit label."""

    kappa: Mapping[str, float]
    gamma: Mapping[str, float]
    gamma_21: Mapping[str, float]
    gamma_20: Mapping[str, float]
    gamma_phi1: Mapping[str, float]
    gamma_phi2: Mapping[str, float]

    def __post_init__(self):
        for name in ("kappa", "gamma", "gamma_21", "gamma_20", "gamma_phi1", "gamma_phi2"):
            m = _frozen(getattr(self, name))
            object.__setattr__(self, name, m)
            for k, v in m.items():
                if v < 0:
                    raise ConfigurationError(f"{name}[{k!r}] must be >= 0")

    @classmethod
    def uniform(
        cls,
        n: int,
        kappa: float,
        gamma: float,
        gamma_21: float,
        gamma_20: float,
        gamma_phi1: float,
        gamma_phi2: float,
    ) -> "DecoherenceParams":
        cavs, quts = cavity_labels(n), qutrit_labels(n)
        return cls(
            kappa={c: kappa for c in cavs},
            gamma={q: gamma for q in quts},
            gamma_21={q: gamma_21 for q in quts},
            gamma_20={q: gamma_20 for q in quts},
            gamma_phi1={q: gamma_phi1 for q in quts},
            gamma_phi2={q: gamma_phi2 for q in quts},
        )

    @classmethod
    def zero(cls, n: int) -> "DecoherenceParams":
        return cls.uniform(n, 0, 0, 0, 0, 0, 0)

    @classmethod
    def from_lifetimes_us(
        cls,
        n: int,
        kappa_us: float = 5.0,
        gamma_us: float = 10.0,
        gamma_21_us: float = 5.0,
        gamma_20_us: float = 25.0,
        gamma_phi1_us: float = 5.0,
        gamma_phi2_us: float = 5.0,
    ) -> "DecoherenceParams":
        """Rates from lifetimes in microseconds (reference working point)."""

        def rate(t_us):
            if t_us <= 0:
                raise ConfigurationError("lifetimes must be > 0 (use .zero for no loss)")
            return 1.0 / (t_us * 1e-6)

        return cls.uniform(
            n,
            kappa=rate(kappa_us),
            gamma=rate(gamma_us),
            gamma_21=rate(gamma_21_us),
            gamma_20=rate(gamma_20_us),
            gamma_phi1=rate(gamma_phi1_us),
            gamma_phi2=rate(gamma_phi2_us),
        )


@dataclass(frozen=True)
class EffectiveParams:
    """Second-order effective-theory rates (rad/s) and the transfer time (s)."""

    lam: float          # common qubit-coupler exchange rate, signed
    mu: Mapping[str, float]  # cavity-pair exchange rate, keyed by unprimed cavity
    chi: float          # common dispersive shift, signed
    big_lambda: float   # collective Rabi rate, sqrt(2n)|lam|
    t_transfer: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu))


def derive_params(
    delta_list,
    g_1: float,
    n: int,
    omega10: float,
    anharmonicity: float = -TWO_PI * 400e6,
) -> DeviceParams:
    """Couplings and frequencies from the matching rules.

    Given the n signed detunings and g_1, sets g_j = g_1*sqrt(delta_j/delta_1)
    (making g_j^2/delta_j uniform), the coupler couplings g_Aj = g_j/sqrt(2n),
    the two-photon couplings at sqrt(2)*g, primed mirrors of everything, and
    cavity frequencies omega_c_j = omega10 - delta_j.
    """
    deltas = list(delta_list)
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    if len(deltas) != n:
        raise ConfigurationError(f"expected {n} detunings, got {len(deltas)}")
    if any(d == 0 for d in deltas):
        raise ConfigurationError("detunings must be nonzero")
    if len({math.copysign(1, d) for d in deltas}) != 1:
        raise ConditionViolationError("mixed-sign detunings are outside the dispersive scheme")
    if g_1 <= 0:
        raise ConfigurationError("g_1 must be > 0")

    root = 1.0 / math.sqrt(2 * n)
    omega10_map = {q: omega10 for q in qutrit_labels(n)}
    omega21_map = {q: omega10 + anharmonicity for q in qutrit_labels(n)}
    omega_c, g, g_A = {}, {}, {}
    for j, d in enumerate(deltas, start=1):
        gj = g_1 * math.sqrt(d / deltas[0])
        for c in (f"c{j}", f"c{j}p"):
            omega_c[c] = omega10 - d
            g[c] = gj
            g_A[c] = gj * root
    return DeviceParams(
        n=n,
        omega10=omega10_map,
        omega21=omega21_map,
        omega_c=omega_c,
        g=g,
        g_A=g_A,
        g_t={c: math.sqrt(2) * v for c, v in g.items()},
        g_At={c: math.sqrt(2) * v for c, v in g_A.items()},
        g_ct={},
    )


def effective_params(params: DeviceParams, tol: float = 1e-9) -> EffectiveParams:
    """Exchange rates, dispersive shift, and transfer time.

    Requires the exchange rate g*g_A/delta to be uniform across all
    cavities within `tol` relative.
    """
    lams = {c: params.g[c] * params.g_A[c] / params.delta(c) for c in params.cavities}
    vals = np.array(list(lams.values()))
    spread = np.max(np.abs(vals - vals[0]))
    if spread > tol * max(np.max(np.abs(vals)), 1e-300):
        raise ConditionViolationError(
            f"exchange rates not uniform (relative spread {spread / np.max(np.abs(vals)):.2e}); "
            "uniform-rate condition violated"
        )
    lam = float(np.mean(vals))
    chi = params.g["c1"] ** 2 / params.delta("c1")
    big_lambda = math.sqrt(2 * params.n) * abs(lam)
    if big_lambda == 0:
        raise ConditionViolationError("zero exchange rate: no transfer")
    mu = {
        f"c{j}": params.g[f"c{j}"] * params.g[f"c{j}p"] / params.delta(f"c{j}")
        for j in range(1, params.n + 1)
    }
    return EffectiveParams(
        lam=lam,
        mu=mu,
        chi=chi,
        big_lambda=big_lambda,
        t_transfer=math.pi / big_lambda,
    )


@dataclass(frozen=True)
class ConditionCheck:
    condition: str
    measured: float
    threshold: float
    mode: str  # "min_ratio" (pass iff measured >= threshold) or "max_mismatch" (<=)
    passed: bool

    def describe(self) -> str:
        op = ">=" if self.mode == "min_ratio" else "<="
        flag = "PASS" if self.passed else "FAIL"
        return f"{self.condition:<22} {self.measured:12.4e} {op} {self.threshold:g}  {flag}"


@dataclass(frozen=True)
class ConditionReport:
    checks: tuple[ConditionCheck, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def get(self, condition: str) -> ConditionCheck:
        for c in self.checks:
            if c.condition == condition:
                return c
        raise KeyError(condition)

    def describe(self) -> str:
        return "\n".join(c.describe() for c in self.checks)

    def to_dict(self) -> list[dict]:
        return [
            {
                "condition": c.condition,
                "measured": c.measured,
                "threshold": c.threshold,
                "mode": c.mode,
                "passed": c.passed,
            }
            for c in self.checks
        ]


def _relative_spread(values) -> float:
    """Worst deviation from the first (reference) value, relative to it."""
    vals = np.asarray(list(values), dtype=float)
    scale = abs(vals[0])
    if scale == 0:
        return float(np.max(np.abs(vals)))
    return float(np.max(np.abs(vals - vals[0])) / scale)


def check_conditions(
    params: DeviceParams,
    ratio_threshold: float = 10.0,
    mismatch_tolerance: float = 1e-9,
    dispersive_threshold: float = 5.0,
) -> ConditionReport:
    """Diagnostics for the matching conditions and the dispersive regime.

    Inequality conditions report the worst ratio and pass iff it is at
    least `ratio_threshold`; equality conditions report the worst relative
    mismatch and pass iff it is at most `mismatch_tolerance`.
    """
    n = params.n
    checks = []

    # Adjacent-cavity separation vs coupler-mediated coupling
    ratios = []
    for group in (
        [f"c{j}" for j in range(1, n + 1)],
        [f"c{j}p" for j in range(1, n + 1)],
    ):
        for a, b in zip(group, group[1:]):
            da, db = params.delta_A(a), params.delta_A(b)
            sep = abs(db - da) / abs(1 / da + 1 / db)
            ratios.append(sep / (params.g_A[a] * params.g_A[b]))
    if ratios:
        worst = min(ratios)
        checks.append(
            ConditionCheck("cavity-separation", worst, ratio_threshold, "min_ratio", worst >= ratio_threshold)
        )

    # Detuning matching: delta_j = delta_Aj = delta_Aj' = delta_j'
    mismatches = []
    for j in range(1, n + 1):
        quad = [
            params.delta(f"c{j}"),
            params.delta_A(f"c{j}"),
            params.delta_A(f"c{j}p"),
            params.delta(f"c{j}p"),
        ]
        mismatches.append(_relative_spread(quad))
    m = max(mismatches)
    checks.append(
        ConditionCheck("detuning-matching", m, mismatch_tolerance, "max_mismatch", m <= mismatch_tolerance)
    )

    # Uniform dispersive shift g^2/delta across all cavities
    shifts = [params.g[c] ** 2 / params.delta(c) for c in params.cavities]
    m = _relative_spread(shifts)
    checks.append(
        ConditionCheck("uniform-shift", m, mismatch_tolerance, "max_mismatch", m <= mismatch_tolerance)
    )

    # Coupler shift sum matching the common shift
    coupler_sum = sum(params.g_A[c] ** 2 / params.delta_A(c) for c in params.cavities)
    scale = max(abs(shifts[0]), abs(coupler_sum), 1e-300)
    m = abs(shifts[0] - coupler_sum) / scale
    checks.append(
        ConditionCheck("coupler-shift-sum", m, mismatch_tolerance, "max_mismatch", m <= mismatch_tolerance)
    )

    # Uniform exchange rate
    lams = [params.g[c] * params.g_A[c] / params.delta(c) for c in params.cavities]
    m = _relative_spread(lams)
    checks.append(
        ConditionCheck("uniform-exchange", m, mismatch_tolerance, "max_mismatch", m <= mismatch_tolerance)
    )

    # Dispersive regime: |delta| >> g for every qutrit-cavity pair
    disp = []
    for c in params.cavities:
        disp.append(abs(params.delta(c)) / params.g[c])
        disp.append(abs(params.delta_A(c)) / params.g_A[c])
    worst = min(disp)
    checks.append(
        ConditionCheck("dispersive", worst, dispersive_threshold, "min_ratio", worst >= dispersive_threshold)
    )

    return ConditionReport(tuple(checks))


def apply_breakage(params: DeviceParams, r: float) -> DeviceParams:
    """Shift the primed cavity frequencies so their detunings become r
    times the unprimed ones; all couplings are kept unchanged."""
    if r <= 0:
        raise ConfigurationError("breakage ratio r must be > 0")
    if r == 1.0:
        return params
    omega_c = dict(params.omega_c)
    for j in range(1, params.n + 1):
        d = params.delta(f"c{j}")
        omega_c[f"c{j}p"] = params.omega10[f"q{j}p"] - r * d
    return replace(params, omega_c=omega_c)


def crosstalk_estimate(
    capacitances: Mapping[str, float],
    qutrit_capacitance: float,
    params: DeviceParams,
) -> dict[frozenset, float]:
    """Capacitive inter-cavity coupling estimate g_kl.

    g_kl ~ g_Ak C_l / C_sigma with C_sigma the total coupler capacitance;
    symmetrized by taking the larger of the two orderings.
    """
    if qutrit_capacitance <= 0 or any(c <= 0 for c in capacitances.values()):
        raise ConfigurationError("capacitances must be > 0")
    cavs = params.cavities
    if set(capacitances) != set(cavs):
        raise ConfigurationError("capacitances must be given for every cavity")
    c_sigma = sum(capacitances.values()) + qutrit_capacitance
    out = {}
    for i, k in enumerate(cavs):
        for l in cavs[i + 1 :]:
            out[frozenset((k, l))] = (
                max(params.g_A[k] * capacitances[l], params.g_A[l] * capacitances[k]) / c_sigma
            )
    return out


def cavity_lifetime(kappa: Mapping[str, float], n: int) -> float:
    """Collective cavity lifetime: worst single-cavity lifetime over 2n.

    Returns math.inf if every decay rate is zero (flagged by the caller).
    """
    if any(k < 0 for k in kappa.values()):
        raise ConfigurationError("decay rates must be >= 0")
    lifetimes = [1.0 / k if k > 0 else math.inf for k in kappa.values()]
    return min(lifetimes) / (2 * n)


def quality_factor(omega_c: float, kappa: float) -> float:
    if kappa <= 0:
        return math.inf
    return omega_c / kappa
