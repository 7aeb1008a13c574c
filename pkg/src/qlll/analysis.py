"""Information-theoretic machinery behind the run-time guarantee.

The solver's termination argument is an entropy-compression count: a log
with t failures can be losslessly compressed to about m + t*log2(d*e)
bits, so histories with many failures carry exponentially small weight.
This module provides the lexicographic rank/unrank codec for fixed-weight
bit strings, the code-length bound, the explicit failure budget N for a
target error epsilon, the termination-probability lower bound, and an
exact verifier for that bound against enumerated history trees.

All logarithms are base 2; binomials are computed exactly over big
integers (floats enter only in the log-domain bounds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

from .errors import InvariantViolation

if TYPE_CHECKING:  # pragma: no cover
    from .solver import HistoryTree


def margin_bits(k: int, d: int, r: int) -> float:
    """Per-failure compression gain: k - log2(d*e*r)."""
    return k - math.log2(d * math.e * r)


@dataclass(frozen=True)
class EnumCode:
    """Lexicographic index of a fixed-weight bit string."""

    index: int
    length_T: int
    weight_M: int

    def __post_init__(self):
        if not 0 <= self.index < math.comb(self.length_T, self.weight_M):
            raise ValueError(
                f"index {self.index} out of range for C({self.length_T},{self.weight_M})"
            )


def _as_bits(bits) -> list[int]:
    out = [int(b) for b in bits]
    if any(b not in (0, 1) for b in out):
        raise ValueError("bit sequence must contain only 0s and 1s")
    return out


def rank_bitstring(bits, M: int) -> EnumCode:
    """Index of ``bits`` among all equal-length strings of weight M, in
    lexicographic order ('0' < '1')."""
    seq = _as_bits(bits)
    T = len(seq)
    if sum(seq) != M:
        raise ValueError(f"string has weight {sum(seq)}, expected {M}")
    index = 0
    remaining = M
    for i, b in enumerate(seq):
        if b:
            # strings matching the prefix but with 0 here place all
            # `remaining` ones into the T-1-i later positions
            index += math.comb(T - 1 - i, remaining)
            remaining -= 1
    return EnumCode(index=index, length_T=T, weight_M=M)


def unrank(index: int, T: int, M: int) -> str:
    """Inverse of :func:`rank_bitstring`; returns the bit string."""
    if not 0 <= index < math.comb(T, M):
        raise ValueError(f"index {index} out of range for C({T},{M})")
    out = []
    remaining = M
    for i in range(T):
        zeros_here = math.comb(T - 1 - i, remaining)
        if index < zeros_here:
            out.append("0")
        else:
            out.append("1")
            index -= zeros_here
            remaining -= 1
    return "".join(out)


class CodeLengthBound(NamedTuple):
    exact_bits: float
    paper_bound: float


def code_length_bound(m: int, d: int, t: int) -> CodeLengthBound:
    """Exact code length log2 C(m+d*t, t) and its closed-form bound
    m + t*log2(d*e); the exact value never exceeds the bound."""
    if t < 0:
        raise ValueError("failure count must be >= 0")
    exact = math.log2(math.comb(m + d * t, t))
    bound = m + t * math.log2(d * math.e)
    if exact > bound + 1e-9:
        raise InvariantViolation(
            f"code length {exact} exceeds closed-form bound {bound} at (m={m}, d={d}, t={t})"
        )
    return CodeLengthBound(exact_bits=exact, paper_bound=bound)


@dataclass(frozen=True)
class BoundReport:
    """Failure budget and the guarantees it buys."""

    N: int
    T: int
    a: float
    b: float
    success_lower_bound: float
    margin: float


def success_bound(m: int, k: int, d: int, r: int, N: int) -> float:
    """Lower bound on the probability that the measurement sequence
    terminates within budget N: max(0, 1 - 2^(m + log2 N - N*margin))."""
    if N < 1:
        raise ValueError("budget N must be >= 1")
    exponent = m + math.log2(N) - N * margin_bits(k, d, r)
    if exponent >= 0:
        return 0.0
    return 1.0 - 2.0**exponent


def choose_N(m: int, k: int, d: int, r: int, epsilon: float) -> BoundReport:
    """Smallest explicit failure budget pushing the error below epsilon.

    With margin mu = k - log2(d*e*r) > 0, set a = 1/mu and
    b = (m + log2(1/eps))/mu; the budget is N = ceil(b + 3a(log2(b) + 1)),
    which satisfies the defining fixed-point inequality
    N >= a*log2(N) + b (verified numerically before returning).
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    mu = margin_bits(k, d, r)
    if mu <= 0.0:
        raise ValueError(
            f"LLL margin violated (margin = {mu:.4f} bits); no budget N exists"
        )
    a = 1.0 / mu
    b = (m + math.log2(1.0 / epsilon)) / mu
    n_real = b + 3.0 * a * (math.log2(b) + 1.0)
    N = max(1, math.ceil(n_real))
    if N < a * math.log2(N) + b - 1e-9:
        raise InvariantViolation(
            f"budget N={N} fails its fixed-point inequality at "
            f"(m={m}, k={k}, d={d}, r={r}, eps={epsilon})"
        )
    return BoundReport(
        N=N,
        T=m + N * d,
        a=a,
        b=b,
        success_lower_bound=success_bound(m, k, d, r, N),
        margin=mu,
    )


def tightened_budget_bound(m: int, k: int, d: int, r: int, epsilon: float) -> float:
    """The sharper (pre-relaxation) explicit budget expression
    b + a(log2(a+1) + log2(b + a*log2(a+1))).

    For b >= 2 this never exceeds the budget used by :func:`choose_N`;
    exposed so the relaxation chain can be checked on parameter grids.
    """
    mu = margin_bits(k, d, r)
    if mu <= 0.0:
        raise ValueError("margin must be positive")
    a = 1.0 / mu
    b = (m + math.log2(1.0 / epsilon)) / mu
    return b + a * (math.log2(a + 1.0) + math.log2(b + a * math.log2(a + 1.0)))


@dataclass(frozen=True)
class TerminationBoundReport:
    exact_probability: float
    pruned_mass: float
    bound: float
    holds: bool
    slack_bits: float


def verify_termination_bound(
    tree: "HistoryTree", m: int, k: int, d: int, r: int, N: int, strict: bool = True
) -> TerminationBoundReport:
    """Check the exact budget-exhaustion mass of an averaged history tree
    against 2^(m + log2 N - N*(k - log2(d*e*r))).

    The tree must have been enumerated in AVERAGED mode (the bound assumes
    the maximally mixed start).  Pruned probability mass is added to the
    measured value so the check stays conservative.
    """
    if tree.initial != "AVERAGED":
        raise ValueError("termination bound applies only to AVERAGED-mode trees")
    exact = sum(leaf.probability for leaf in tree.leaves if not leaf.log.terminated)
    upper = exact + tree.pruned_mass
    bound = 2.0 ** (m + math.log2(N) - N * margin_bits(k, d, r))
    holds = upper <= bound + 1e-12
    slack = math.inf if upper == 0.0 else math.log2(bound / upper)
    if strict and not holds:
        raise InvariantViolation(
            f"budget-exhaustion mass {upper} exceeds bound {bound} (N={N})"
        )
    return TerminationBoundReport(
        exact_probability=exact,
        pruned_mass=tree.pruned_mass,
        bound=bound,
        holds=holds,
        slack_bits=slack,
    )
