"""Deterministic measurement scheduling.

Any prefix of coherent-measurement outcomes uniquely determines the next
projector to measure.  Two formulations are implemented:

* :class:`MoserSchedule` / :func:`next_measurement` -- the normative
  reference, an incremental walk of the recursive fixing procedure: the
  top level fixes projectors 0..m-1 in order; a failed measurement of
  projector i recurses over its inclusive neighborhood (i first, then
  ascending index).
* :class:`StackMachine` / :func:`stack_step` -- the same control flow as
  an explicit register machine (stack of (projector, neighbor-cursor)
  pairs, log pointer, failure counter, return flags).  Level 0 holds a
  fiduciary projector whose neighborhood is all m projectors, so no level
  is special-cased.

:func:`schedule_equiv` proves the two agree by exhausting every reachable
outcome string up to a given length.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover
    from .instance import QsatInstance


class _Terminated:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TERMINATED"


#: Sentinel returned when the measurement sequence has completed.
TERMINATED = _Terminated()

#: Stack-level-0 marker whose inclusive neighborhood is every projector.
FIDUCIARY = -1


def _targets(inst: "QsatInstance", proj: int) -> tuple[int, ...]:
    if proj == FIDUCIARY:
        return tuple(range(inst.m))
    return inst.neighborhood(proj)


class MoserSchedule:
    """Incremental control state of the recursive fixing procedure.

    ``frames`` holds [projector, cursor] pairs; the frame's pending targets
    are the projector's inclusive neighborhood (all projectors for the
    fiduciary root).  The next measurement is the top frame's current
    target.
    """

    __slots__ = ("inst", "frames", "terminated")

    def __init__(self, inst: "QsatInstance"):
        self.inst = inst
        self.frames: list[list[int]] = [[FIDUCIARY, 0]]
        self.terminated = False

    def copy(self) -> "MoserSchedule":
        dup = MoserSchedule.__new__(MoserSchedule)
        dup.inst = self.inst
        dup.frames = [frame[:] for frame in self.frames]
        dup.terminated = self.terminated
        return dup

    @property
    def current(self):
        if self.terminated:
            return TERMINATED
        proj, cursor = self.frames[-1]
        return _targets(self.inst, proj)[cursor]

    def step(self, outcome: int) -> list[int]:
        """Consume one outcome bit; returns the projectors whose fix call
        returned during this step (the measured target first on success,
        then each completed recursion level, innermost outward)."""
        if self.terminated:
            raise ValueError("outcomes after termination")
        proj, cursor = self.frames[-1]
        target = _targets(self.inst, proj)[cursor]
        if outcome:
            self.frames.append([target, 0])
            return []
        returned = [target]
        self.frames[-1][1] += 1
        while self.frames:
            top_proj, top_cursor = self.frames[-1]
            if top_cursor < len(_targets(self.inst, top_proj)):
                break
            self.frames.pop()
            if top_proj == FIDUCIARY:
                self.terminated = True
            else:
                returned.append(top_proj)
                self.frames[-1][1] += 1
        return returned


def next_measurement(inst: "QsatInstance", prefix):
    """Projector index targeted by the (len(prefix)+1)-th measurement, or
    TERMINATED.  ``prefix`` is a sequence of 0/1 outcomes (string or ints)."""
    sched = MoserSchedule(inst)
    for bit in prefix:
        sched.step(int(bit))
    return sched.current


@dataclass(frozen=True)
class StackMachine:
    """Registers of the unrolled fixing loop.

    ``frames[i] = (projector, neighbor cursor)``; level 0 is the fiduciary
    frame.  ``l`` counts consumed outcome bits, ``t`` counts failures,
    ``flags[l]`` records how many recursion levels returned at step l, and
    ``term`` is set when the top level completes or ``t`` reaches the
    budget.
    """

    frames: tuple[tuple[int, int], ...] = ((FIDUCIARY, 0),)
    l: int = 0
    t: int = 0
    flags: tuple[int, ...] = ()
    term: bool = False
    budget: int | None = None

    @property
    def s(self) -> int:
        return len(self.frames) - 1

    @classmethod
    def initial(cls, budget: int | None = None) -> "StackMachine":
        return cls(budget=budget)


def machine_next(machine: StackMachine, inst: "QsatInstance"):
    """The projector the machine would measure next, or TERMINATED."""
    if machine.term:
        return TERMINATED
    proj, nbr = machine.frames[-1]
    return _targets(inst, proj)[nbr]


def stack_step(machine: StackMachine, inst: "QsatInstance", outcome: int) -> StackMachine:
    """One bookkeeping update of the register machine for an outcome bit.

    On 1: push the measured target's neighborhood frame and count the
    failure.  On 0: advance the neighbor cursor modulo the frame's
    neighborhood size; a wrap to 0 sets the return flag and pops, and the
    parent cursor advances in turn (cascading through completed levels).
    """
    if machine.term:
        raise ValueError("cannot step a terminated machine")
    frames = list(machine.frames)
    proj, nbr = frames[-1]
    target = _targets(inst, proj)[nbr]
    term = False
    pops = 0

    if outcome:
        t = machine.t + 1
        frames.append((target, 0))
        if machine.budget is not None and t >= machine.budget:
            term = True
    else:
        t = machine.t
        while True:
            top_proj, top_nbr = frames[-1]
            size = len(_targets(inst, top_proj))
            top_nbr = (top_nbr + 1) % size
            frames[-1] = (top_proj, top_nbr)
            if top_nbr != 0:
                break
            frames.pop()
            pops += 1
            if not frames:
                term = True
                break

    return replace(
        machine,
        frames=tuple(frames) if frames else ((FIDUCIARY, 0),),
        l=machine.l + 1,
        t=t,
        flags=machine.flags + (pops,),
        term=term,
    )


@dataclass(frozen=True)
class ScheduleEquivReport:
    equivalent: bool
    strings_checked: int
    max_len: int
    divergence: tuple[str, object, object] | None = None


def schedule_equiv(inst: "QsatInstance", max_len: int) -> ScheduleEquivReport:
    """Exhaustively compare the recursion and the register machine.

    Walks every reachable outcome string of length <= max_len and checks
    that both formulations agree on the next measurement (or on
    termination) at every node.  Returns the first divergence, if any.
    """
    if max_len > 24:
        raise ValueError("max_len above 24 is not supported (2^max_len strings)")
    checked = 0
    stack: list[tuple[MoserSchedule, StackMachine, tuple[int, ...]]] = [
        (MoserSchedule(inst), StackMachine.initial(), ())
    ]
    while stack:
        sched, machine, prefix = stack.pop()
        checked += 1
        ref = sched.current
        mach = machine_next(machine, inst)
        if ref != mach:
            return ScheduleEquivReport(
                equivalent=False,
                strings_checked=checked,
                max_len=max_len,
                divergence=("".join(map(str, prefix)), ref, mach),
            )
        if ref is TERMINATED or len(prefix) == max_len:
            continue
        for bit in (1, 0):
            child = sched.copy()
            child.step(bit)
            stack.append((child, stack_step(machine, inst, bit), prefix + (bit,)))
    return ScheduleEquivReport(equivalent=True, strings_checked=checked, max_len=max_len)
