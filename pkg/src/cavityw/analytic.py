"""Closed-form reference solutions for the W-state transfer.

In the effective picture the dynamics of the initial W configuration
stays in a three-dimensional subspace: the W state on the source qutrits,
the W state on the target qutrits, and the single coupler excitation.
The branch amplitudes follow a collective Rabi oscillation at rate
big_lambda = sqrt(2n)|lam|, dressed with the dispersive-shift phases; the
transfer completes at t = pi / big_lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import CompositeBasis, StateVector
from .device import EffectiveParams
from .errors import ConfigurationError

__all__ = [
    "w_state",
    "ClosedFormState",
    "closed_form_state",
    "transfer_time",
    "ideal_target",
    "initial_state",
    "coupler_excited_state",
]


def _w_amplitudes(n: int, basis: CompositeBasis, prefix_labels: list[str]) -> np.ndarray:
    amps = np.zeros(basis.dimension, dtype=complex)
    for q in prefix_labels:
        amps[basis.state_index(**{q: 1})] = 1.0 / math.sqrt(n)
    return amps


def w_state(n: int, basis: CompositeBasis, which: str = "unprimed") -> StateVector:
    """Equal-amplitude single-excitation state on the n source ("unprimed")
    or n target ("primed") qutrits; all other modes ground/vacuum."""
    if n < 2:
        raise ConfigurationError("W state needs n >= 2 qutrits")
    if which == "unprimed":
        labels = [f"q{j}" for j in range(1, n + 1)]
    elif which == "primed":
        labels = [f"q{j}p" for j in range(1, n + 1)]
    else:
        raise ConfigurationError(f"which must be 'unprimed' or 'primed', got {which!r}")
    return StateVector(basis, _w_amplitudes(n, basis, labels))


def initial_state(n: int, basis: CompositeBasis) -> StateVector:
    """Transfer input: the W state (single excitation for n=1) on the
    source qutrits, everything else ground/vacuum."""
    if n == 1:
        return StateVector.basis_state(basis, q1=1)
    return w_state(n, basis, "unprimed")


def ideal_target(n: int, basis: CompositeBasis) -> StateVector:
    """Transfer output: the W state moved onto the target qutrits."""
    if n == 1:
        return StateVector.basis_state(basis, q1p=1)
    return w_state(n, basis, "primed")


def coupler_excited_state(basis: CompositeBasis) -> StateVector:
    return StateVector.basis_state(basis, qA=1)


@dataclass(frozen=True)
class ClosedFormState:
    """Branch amplitudes at time t: source W, target W, coupler excitation."""

    c_w: complex
    c_wp: complex
    c_a: complex
    t: float

    @property
    def probabilities(self) -> tuple[float, float, float]:
        return (abs(self.c_w) ** 2, abs(self.c_wp) ** 2, abs(self.c_a) ** 2)

    def norm(self) -> float:
        return math.sqrt(sum(self.probabilities))

    def to_state_vector(self, n: int, basis: CompositeBasis) -> StateVector:
        amps = (
            self.c_w * initial_state(n, basis).amplitudes
            + self.c_wp * ideal_target(n, basis).amplitudes
            + self.c_a * coupler_excited_state(basis).amplitudes
        )
        return StateVector(basis, amps)


def closed_form_state(effective: EffectiveParams, n: int, t: float) -> ClosedFormState:
    """Branch amplitudes of the ideal transfer at time t.

    The dispersive-shift phase (signed) dresses the W branches once and
    the coupler branch twice. The coupler amplitude carries the sign of
    the exchange rate, so the amplitudes agree exactly with numerical
    evolution under the collective exchange Hamiltonian.
    """
    if t < 0:
        raise ConfigurationError("t must be >= 0")
    chi, lam_big = effective.chi, effective.big_lambda
    sgn = 1.0 if effective.lam >= 0 else -1.0
    cw = 0.5 * np.exp(-1j * chi * t) * (1.0 + math.cos(lam_big * t))
    cwp = 0.5 * np.exp(-1j * chi * t) * (math.cos(lam_big * t) - 1.0)
    ca = -1j * sgn * math.sqrt(0.5) * np.exp(-2j * chi * t) * math.sin(lam_big * t)
    return ClosedFormState(complex(cw), complex(cwp), complex(ca), t)


def transfer_time(effective: EffectiveParams) -> float:
    if effective.big_lambda <= 0:
        raise ConfigurationError("degenerate coupling: no collective Rabi rate")
    return math.pi / effective.big_lambda
