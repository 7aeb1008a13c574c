"""End-to-end runs of the resampling algorithm.

Two execution modes over the same scheduler and kernel:

* :func:`run_trajectory` samples one run: uniformly random initial basis
  state, Born-sampled measurement outcomes, swap-and-rotate resampling of
  violated blocks, stop at termination or when the failure budget N is
  exhausted.
* :func:`enumerate_histories` enumerates every outcome branch exactly,
  with per-leaf probabilities (products of branch weights), either for a
  fixed pair of initial basis strings or averaged over all of them.

Randomness blocks are consumed lazily: block t is drawn (trajectory) or
branched (tree) at the t-th failure, which is equivalent to preparing the
whole register up front because untouched blocks never interact.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

from . import analysis
from .errors import InvariantViolation, NodeCapExceeded
from .instance import QsatInstance, lll_margin, validate_instance
from .rng import RandomStream
from .simulator import (
    PRUNE_TOL,
    Diagonalizer,
    StateVector,
    block_outcome_probs,
    coherent_measure,
    diagonalizer,
    energy,
    replace_block,
    resample,
)
from .scheduler import MoserSchedule

TOL = 1e-9

#: Fallback failure budget when the degree condition fails and no
#: theoretically justified N exists; diagnostic runs only.
def _fallback_budget(m: int, epsilon: float) -> int:
    return max(1, 4 * (m + max(1, math.ceil(math.log2(1.0 / epsilon)))))


class RunStatus(enum.Enum):
    SUCCESS = "SUCCESS"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


@dataclass(frozen=True)
class ExecutionLog:
    """Measurement outcome sequence with its failure count."""

    bits: tuple[int, ...]
    t: int
    terminated: bool

    def bitstring(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class RunParams:
    """Budgeted run configuration; T = m + N*d always."""

    epsilon: float
    N: int
    T: int
    seed: int
    assert_monotone: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("budget N must be >= 1")

    @classmethod
    def for_instance(
        cls,
        inst: QsatInstance,
        epsilon: float,
        seed: int,
        N: int | None = None,
        assert_monotone: bool = False,
    ) -> "RunParams":
        if N is None:
            try:
                N = analysis.choose_N(inst.m, inst.k, inst.d, inst.r, epsilon).N
            except ValueError:
                N = _fallback_budget(inst.m, epsilon)
                warnings.warn(
                    "degree condition violated; using fallback budget "
                    f"N={N} with no success guarantee",
                    stacklevel=2,
                )
        return cls(
            epsilon=epsilon,
            N=N,
            T=inst.m + N * inst.d,
            seed=seed,
            assert_monotone=assert_monotone,
        )


@dataclass
class TrajectoryResult:
    status: RunStatus
    log: ExecutionLog
    final_state: StateVector
    energies: list[float]
    extracted: tuple[int, ...]
    verified: bool = True


def _satisfied(energies: list[float]) -> frozenset[int]:
    return frozenset(i for i, e in enumerate(energies) if e <= TOL)


def _check_fix_return(
    idx: int, sat_before: frozenset[int], energies: list[float]
) -> None:
    if energies[idx] > TOL:
        raise InvariantViolation(
            f"projector {idx} still has energy {energies[idx]:.3e} after its fix returned"
        )
    broken = [i for i in sat_before if energies[i] > TOL]
    if broken:
        raise InvariantViolation(
            f"previously satisfied projectors {broken} were violated across a fix "
            f"of projector {idx} (non-commuting input or kernel bug)"
        )


def run_trajectory(
    inst: QsatInstance, params: RunParams, initial_state: StateVector | None = None
) -> TrajectoryResult:
    """Sample one full run of the algorithm.

    The work register starts in a uniformly random basis state drawn from
    the seeded stream (or in ``initial_state``, an extension excluded from
    the probabilistic guarantees).  With ``params.assert_monotone`` every
    fix return is checked: the fixed projector must have zero energy and
    no previously satisfied projector may have become violated.
    """
    stream = RandomStream(params.seed)
    if initial_state is None:
        state = StateVector.from_bits(stream.bits(inst.n))
    else:
        if initial_state.n != inst.n:
            raise ValueError("initial state has wrong qubit count")
        state = initial_state.copy()

    sched = MoserSchedule(inst)
    diag_cache: dict[int, Diagonalizer] = {}
    bits: list[int] = []
    extracted: list[int] = []
    sat_stack: list[tuple[int, frozenset[int]]] = []
    t = 0
    check = params.assert_monotone
    energies_now = energy(state, inst) if check else None

    while not sched.terminated:
        target = sched.current
        proj = inst.projectors[target]
        sat_before = _satisfied(energies_now) if check else frozenset()

        branches = coherent_measure(state, proj)
        u = stream.uniform()
        outcome = 1 if u < branches.p_fail else 0
        # a branch absent at numerical-dust probability cannot fire
        if outcome == 1 and branches.fail_state is None:
            outcome = 0
        elif outcome == 0 and branches.success_state is None:
            outcome = 1
        bits.append(outcome)

        if outcome:
            if target not in diag_cache:
                diag_cache[target] = diagonalizer(proj)
            state, ext = resample(
                branches.fail_state, proj, stream, diag=diag_cache[target]
            )
            extracted.append(ext)
            t += 1
            sched.step(1)
            if check:
                sat_stack.append((target, sat_before))
                energies_now = energy(state, inst)
            if t == params.N:
                break
        else:
            state = branches.success_state
            returned = sched.step(0)
            if check:
                energies_now = energy(state, inst)
                _check_fix_return(target, sat_before, energies_now)
                for idx in returned[1:]:
                    frame_target, frame_sat = sat_stack.pop()
                    assert frame_target == idx
                    _check_fix_return(idx, frame_sat, energies_now)

    terminated = sched.terminated
    log = ExecutionLog(bits=tuple(bits), t=t, terminated=terminated)
    assert t == sum(bits)
    assert len(bits) <= inst.m + t * inst.d

    final_energies = energy(state, inst)
    verified = True
    if terminated:
        assert t < params.N
        if max(final_energies) > TOL:
            if check:
                raise InvariantViolation(
                    f"terminated run left energy {max(final_energies):.3e}"
                )
            verified = False

    return TrajectoryResult(
        status=RunStatus.SUCCESS if terminated else RunStatus.BUDGET_EXHAUSTED,
        log=log,
        final_state=state,
        energies=final_energies,
        extracted=tuple(extracted),
        verified=verified,
    )


@dataclass(frozen=True)
class HistoryLeaf:
    """One fully resolved execution branch."""

    log: ExecutionLog
    probability: float
    final_state: StateVector | None
    extracted: tuple[int, ...]
    x: int
    y_blocks: tuple[int, ...]


@dataclass(frozen=True)
class HistoryTree:
    """Exact branch enumeration of the coherent execution.

    Leaf probabilities sum to 1 minus the pruned mass; leaves appear in
    deterministic depth-first order (initial basis state ascending;
    success branch before failure; extracted index, then block value,
    ascending).
    """

    leaves: tuple[HistoryLeaf, ...]
    initial: object
    node_count: int
    pruned_mass: float
    prune_threshold: float
    partial: bool = False

    def total_probability(self) -> float:
        return sum(leaf.probability for leaf in self.leaves)

    def exhausted_probability(self) -> float:
        return sum(l.probability for l in self.leaves if not l.log.terminated)


def enumerate_histories(
    inst: QsatInstance,
    params: RunParams,
    initial="AVERAGED",
    *,
    node_cap: int = 200_000,
    store_states: bool = True,
    prune_tol: float = PRUNE_TOL,
) -> HistoryTree:
    """Depth-first exact enumeration of all outcome branches.

    ``initial`` is either the string ``"AVERAGED"`` (average over all 2^n
    initial basis states, exact by linearity; fresh blocks branch over all
    2^k values) or a pair ``(x_bits, y_bits)`` of basis strings with
    ``len(x_bits) == n`` and ``len(y_bits) == k*N`` (bit j of a block is
    the value written to support qubit j).  Branches below ``prune_tol``
    probability are dropped and their mass is accounted separately.
    """
    n, k, N = inst.n, inst.k, params.N
    averaged = isinstance(initial, str) and initial == "AVERAGED"
    if averaged:
        if n + k * N > 22:
            warnings.warn(
                f"averaged enumeration with n + k*N = {n + k * N} > 22; "
                "tree size is bounded only by the node cap",
                stacklevel=2,
            )
        xs = [(x, 0.5**n) for x in range(1 << n)]
        fixed_blocks = None
    else:
        x_bits, y_bits = initial
        if len(x_bits) != n:
            raise ValueError(f"x needs {n} bits, got {len(x_bits)}")
        if len(y_bits) != k * N:
            raise ValueError(f"y needs k*N = {k * N} bits, got {len(y_bits)}")
        xs = [(sum(int(b) << q for q, b in enumerate(x_bits)), 1.0)]
        fixed_blocks = [
            sum(int(y_bits[t * k + j]) << j for j in range(k)) for t in range(N)
        ]

    diag_cache: dict[int, Diagonalizer] = {}
    leaves: list[HistoryLeaf] = []
    node_count = 0
    pruned = 0.0

    def cap_exceeded() -> NodeCapExceeded:
        partial = HistoryTree(
            leaves=tuple(leaves),
            initial=initial if averaged else (x_bits, y_bits),
            node_count=node_count,
            pruned_mass=pruned,
            prune_threshold=prune_tol,
            partial=True,
        )
        return NodeCapExceeded(
            f"history enumeration exceeded node cap {node_cap}", partial_tree=partial
        )

    for x, weight in xs:
        # work items: (state, schedule, t, bits, prob, extracted, blocks)
        stack = [(StateVector.basis(n, x), MoserSchedule(inst), 0, (), weight, (), ())]
        while stack:
            state, sched, t, bits, prob, ext_seq, blocks = stack.pop()
            node_count += 1
            if node_count > node_cap:
                raise cap_exceeded()

            if sched.terminated or t == N:
                terminated = sched.terminated
                if terminated:
                    assert len(bits) <= inst.m + t * inst.d
                leaves.append(
                    HistoryLeaf(
                        log=ExecutionLog(bits=bits, t=t, terminated=terminated),
                        probability=prob,
                        final_state=state if store_states else None,
                        extracted=ext_seq,
                        x=x,
                        y_blocks=blocks,
                    )
                )
                continue

            target = sched.current
            proj = inst.projectors[target]
            branches = coherent_measure(state, proj)
            p_fail = branches.p_fail
            p_succ = 1.0 - p_fail

            children = []
            if branches.success_state is not None and prob * p_succ >= prune_tol:
                child_sched = sched.copy()
                child_sched.step(0)
                children.append(
                    (
                        branches.success_state,
                        child_sched,
                        t,
                        bits + (0,),
                        prob * p_succ,
                        ext_seq,
                        blocks,
                    )
                )
            else:
                pruned += prob * p_succ

            if branches.fail_state is not None and prob * p_fail >= prune_tol:
                if target not in diag_cache:
                    diag_cache[target] = diagonalizer(proj)
                diag = diag_cache[target]
                p1 = prob * p_fail
                probs_ext = block_outcome_probs(branches.fail_state, proj, diag)
                for ext in range(1 << k):
                    pe = float(probs_ext[ext])
                    if ext >= diag.rank:
                        if pe > 1e-9:
                            raise InvariantViolation(
                                f"outcome {ext} above rank {diag.rank} carries "
                                f"probability {pe:.3e}"
                            )
                        pruned += p1 * pe
                        continue
                    if pe < prune_tol:
                        pruned += p1 * pe
                        continue
                    y_options = (
                        [(y, 0.5**k) for y in range(1 << k)]
                        if fixed_blocks is None
                        else [(fixed_blocks[t], 1.0)]
                    )
                    for y, wy in y_options:
                        child_prob = p1 * pe * wy
                        if child_prob < prune_tol:
                            pruned += child_prob
                            continue
                        child_state, _ = replace_block(
                            branches.fail_state, proj, diag, ext, y
                        )
                        child_sched = sched.copy()
                        child_sched.step(1)
                        children.append(
                            (
                                child_state,
                                child_sched,
                                t + 1,
                                bits + (1,),
                                child_prob,
                                ext_seq + (ext,),
                                blocks + (y,),
                            )
                        )
            else:
                pruned += prob * p_fail

            stack.extend(reversed(children))

    return HistoryTree(
        leaves=tuple(leaves),
        initial=initial if averaged else (x_bits, y_bits),
        node_count=node_count,
        pruned_mass=pruned,
        prune_threshold=prune_tol,
    )


def solve(
    inst: QsatInstance, epsilon: float, seed: int, assert_monotone: bool = True
) -> TrajectoryResult:
    """Validate, pick the failure budget for the target error, and run one
    trajectory.

    A failed validation or a violated degree condition produces a warning,
    not an error: the algorithm is well defined regardless, but results on
    non-commuting instances carry no zero-energy guarantee and are marked
    unverified (with ``assert_monotone`` the run aborts at the first
    monotonicity violation instead).
    """
    report = validate_instance(inst)
    if not report.passed:
        warnings.warn(
            f"instance failed validation ({report.summary()}); results are UNVERIFIED",
            stacklevel=2,
        )
    margin = lll_margin(inst)
    if not margin.holds:
        warnings.warn(
            f"degree condition violated (margin {margin.margin:.4f} bits); "
            "running without a success guarantee",
            stacklevel=2,
        )
    params = RunParams.for_instance(
        inst, epsilon, seed, assert_monotone=assert_monotone
    )
    result = run_trajectory(inst, params)
    if not report.passed:
        result.verified = False
    return result
