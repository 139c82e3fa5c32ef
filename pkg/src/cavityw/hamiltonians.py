"""Interaction-picture Hamiltonians as sets of oscillating sparse terms.

A TermSet is a list of (coefficient, operator, oscillation frequency)
triples; the Hamiltonian at time t is sum coeff * exp(i*nu*t) * op.
Every physical term is stored together with its Hermitian partner
(adjoint operator, conjugate coefficient, frequency -nu), so evaluate(t)
is Hermitian for all t.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import (
    CompositeBasis,
    SparseOperator,
    annihilator,
    embed_product,
    level_projector,
    level_transition,
    number_op,
)
from .device import DeviceParams, effective_params, qutrit_of
from .errors import ConditionViolationError

__all__ = [
    "Term",
    "TermSet",
    "build_interaction",
    "build_unwanted",
    "build_full_interaction",
    "build_effective",
    "build_frame_and_exchange",
    "collective_exchange",
]


@dataclass(frozen=True)
class Term:
    coefficient: complex
    operator: SparseOperator
    frequency: float  # rad/s; the term enters as coefficient * exp(i*frequency*t) * operator


class TermSet:
    """Time-dependent Hamiltonian with fixed sparsity, phases recomputed
    per evaluation."""

    def __init__(self, basis: CompositeBasis, terms: list[Term] | None = None):
        self.basis = basis
        self.terms: list[Term] = list(terms or [])

    def add_pair(self, coefficient: complex, operator: SparseOperator, frequency: float):
        """Add a term and its Hermitian partner; drops exact-zero terms."""
        if operator.is_zero() or coefficient == 0:
            return
        self.terms.append(Term(coefficient, operator, frequency))
        self.terms.append(Term(np.conj(coefficient), operator.adjoint(), -frequency))

    def add_static(self, operator: SparseOperator):
        """Add a Hermitian non-oscillating term (its own partner)."""
        if operator.is_zero():
            return
        if not operator.is_hermitian():
            raise ValueError("static terms must be Hermitian")
        self.terms.append(Term(1.0, operator, 0.0))

    def __add__(self, other: "TermSet") -> "TermSet":
        if self.basis != other.basis:
            raise ValueError("term sets live on different bases")
        return TermSet(self.basis, self.terms + other.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def evaluate(self, t: float) -> SparseOperator:
        out = SparseOperator.zero(self.basis)
        for term in self.terms:
            out = out + (term.coefficient * np.exp(1j * term.frequency * t)) * term.operator
        return out

    def evaluate_dense(self, t: float) -> np.ndarray:
        coeffs, freqs, stack = self.dense_stack()
        if stack.shape[0] == 0:
            d = self.basis.dimension
            return np.zeros((d, d), dtype=complex)
        return np.tensordot(coeffs * np.exp(1j * freqs * t), stack, axes=1)

    def dense_stack(self):
        """(coefficients, frequencies, dense operator stack) for integrators."""
        if not hasattr(self, "_stack"):
            coeffs = np.array([t.coefficient for t in self.terms], dtype=complex)
            freqs = np.array([t.frequency for t in self.terms], dtype=float)
            d = self.basis.dimension
            stack = np.empty((len(self.terms), d, d), dtype=complex)
            for i, t in enumerate(self.terms):
                stack[i] = t.operator.to_dense()
            self._stack = (coeffs, freqs, stack)
        return self._stack


def build_interaction(params: DeviceParams, basis: CompositeBasis) -> TermSet:
    """The wanted interaction: each cavity exchanging with its own qutrit
    and with the coupler, at the respective detunings."""
    ts = TermSet(basis)
    for c in params.cavities:
        q = qutrit_of(c)
        a = annihilator(basis.mode(c).levels)
        for g, target, delta in (
            (params.g[c], q, params.delta(c)),
            (params.g_A[c], "qA", params.delta_A(c)),
        ):
            raise_op = level_transition(basis.mode(target).levels, 1, 0)
            op = embed_product(basis, {c: a, target: raise_op})
            ts.add_pair(g, op, delta)
    return ts


def build_unwanted(params: DeviceParams, basis: CompositeBasis) -> TermSet:
    """Off-resonant |1>-|2> couplings plus inter-cavity crosstalk.

    On 2-level qutrits the |1>-|2> families are skipped with a warning.
    Note the projected |2><1| raising operators are exactly zero on an
    e_max=1 sector; add_pair then drops them, which is the mechanism that
    makes the third level inert for single-excitation initial states.
    """
    ts = TermSet(basis)
    for c in params.cavities:
        q = qutrit_of(c)
        a = annihilator(basis.mode(c).levels)
        for g, target, delta in (
            (params.g_t[c], q, params.delta_t(c)),
            (params.g_At[c], "qA", params.delta_At(c)),
        ):
            if basis.mode(target).levels < 3:
                warnings.warn(
                    f"qutrit {target!r} has 2 levels; |1>-|2> coupling skipped",
                    stacklevel=2,
                )
                continue
            op = embed_product(basis, {c: a, target: level_transition(3, 2, 1)})
            ts.add_pair(g, op, delta)
    cavs = params.cavities
    for i, k in enumerate(cavs):
        for l in cavs[i + 1 :]:
            g_kl = params.crosstalk(k, l)
            if g_kl == 0:
                continue
            a_k = annihilator(basis.mode(k).levels)
            adag_l = annihilator(basis.mode(l).levels).conj().T
            op = embed_product(basis, {k: a_k, l: adag_l})
            ts.add_pair(g_kl, op, -params.cavity_splitting(k, l))
    return ts


def build_full_interaction(params: DeviceParams, basis: CompositeBasis) -> TermSet:
    """Wanted plus unwanted interaction."""
    return build_interaction(params, basis) + build_unwanted(params, basis)


def _require_detuning_match(params: DeviceParams, tol: float):
    for j in range(1, params.n + 1):
        quad = [
            params.delta(f"c{j}"),
            params.delta_A(f"c{j}"),
            params.delta_A(f"c{j}p"),
            params.delta(f"c{j}p"),
        ]
        scale = max(abs(v) for v in quad)
        if max(quad) - min(quad) > tol * scale:
            raise ConditionViolationError(
                f"detuning-matching condition violated for cavity pair {j}"
            )


def build_effective(
    params: DeviceParams, basis: CompositeBasis, tol: float = 1e-9
) -> SparseOperator:
    """Time-independent second-order effective Hamiltonian.

    Contains the photon-number-conditioned dispersive shifts (with the
    anti-normal a a+ ordering on the excited-level branch, which supplies
    the vacuum phase shifts), the qutrit-coupler exchange at rates
    g*g_A/delta, and the coupler-state-conditioned cavity-cavity exchange.
    """
    _require_detuning_match(params, tol)
    d = basis.dimension
    acc = SparseOperator.zero(basis)
    for c in params.cavities:
        q = qutrit_of(c)
        lv_c = basis.mode(c).levels
        a = annihilator(lv_c)
        n_c = number_op(lv_c)
        aad = a @ a.conj().T
        for g, target, delta in (
            (params.g[c], q, params.delta(c)),
            (params.g_A[c], "qA", params.delta_A(c)),
        ):
            lv_q = basis.mode(target).levels
            p0 = level_projector(lv_q, 0)
            p1 = level_projector(lv_q, 1)
            shift = embed_product(basis, {target: p0, c: n_c}) - embed_product(
                basis, {target: p1, c: aad}
            )
            acc = acc + (-(g**2) / delta) * shift
        # qutrit-coupler exchange mediated by this cavity
        lam = params.g[c] * params.g_A[c] / params.delta(c)
        lv_q = basis.mode(q).levels
        lv_a = basis.mode("qA").levels
        ex = embed_product(
            basis,
            {q: level_transition(lv_q, 1, 0), "qA": level_transition(lv_a, 0, 1)},
        )
        acc = acc + lam * ex + lam * ex.adjoint()
    # coupler-conditioned cavity-cavity exchange within each pair
    lv_a = basis.mode("qA").levels
    pa1 = level_projector(lv_a, 1)
    pa0 = level_projector(lv_a, 0)
    for j in range(1, params.n + 1):
        k, l = f"c{j}", f"c{j}p"
        mu = params.g[k] * params.g[l] / params.delta(k)
        a_k = annihilator(basis.mode(k).levels)
        a_l = annihilator(basis.mode(l).levels)
        for pa, sign in ((pa1, 1.0), (pa0, -1.0)):
            hop = embed_product(basis, {k: a_k.conj().T, l: a_l, "qA": pa})
            acc = acc + (sign * mu) * (hop + hop.adjoint())
    return acc


def build_frame_and_exchange(
    params: DeviceParams, basis: CompositeBasis
) -> tuple[SparseOperator, SparseOperator]:
    """Vacuum-cavity reduction of the effective Hamiltonian.

    Returns (diagonal frame part, exchange part): the frame part carries
    the per-qutrit dispersive shifts; the exchange part swaps excitations
    between each qutrit and the coupler.
    """
    frame = SparseOperator.zero(basis)
    exchange = SparseOperator.zero(basis)
    lv_a = basis.mode("qA").levels
    coupler_shift = 0.0
    for c in params.cavities:
        q = qutrit_of(c)
        lv_q = basis.mode(q).levels
        chi_c = params.g[c] ** 2 / params.delta(c)
        frame = frame + chi_c * embed_product(basis, {q: level_projector(lv_q, 1)})
        coupler_shift += params.g_A[c] ** 2 / params.delta_A(c)
        lam = params.g[c] * params.g_A[c] / params.delta(c)
        ex = embed_product(
            basis,
            {q: level_transition(lv_q, 1, 0), "qA": level_transition(lv_a, 0, 1)},
        )
        exchange = exchange + lam * ex + lam * ex.adjoint()
    frame = frame + coupler_shift * embed_product(basis, {"qA": level_projector(lv_a, 1)})
    return frame, exchange


def collective_exchange(params: DeviceParams, basis: CompositeBasis) -> SparseOperator:
    """Uniform-rate collective form of the exchange Hamiltonian,
    lambda*(J+ sigma_A + J- sigma_A+) for both cavity groups together."""
    eff = effective_params(params)
    lv_a = basis.mode("qA").levels
    sig_a = level_transition(lv_a, 0, 1)
    acc = SparseOperator.zero(basis)
    for q in params.qutrits:
        if q == "qA":
            continue
        lv_q = basis.mode(q).levels
        term = embed_product(basis, {q: level_transition(lv_q, 1, 0), "qA": sig_a})
        acc = acc + eff.lam * term + eff.lam * term.adjoint()
    return acc
