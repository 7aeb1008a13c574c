"""Commuting k-local projector instances.

Construction, validation, DIMACS/JSON ingestion, random generation, and
the degree condition that powers the run-time analysis.

Conventions used throughout the package:

* Qubits are 0-based.  Amplitude index ``i`` of an ``n``-qubit state
  encodes qubit ``q`` in bit ``q`` of ``i`` (little-endian).
* A projector's ``support`` is strictly increasing, and ``support[j]`` is
  bit ``j`` of the local amplitude index.
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .simulator import embed_local

#: Numeric tolerance for hermiticity / idempotency / commutation checks.
TOL = 1e-9


@dataclass(frozen=True)
class LocalProjector:
    """An orthogonal projector acting on a k-qubit subset of the system.

    ``rank`` is computed from the spectrum (eigenvalues within 1e-9 of 1),
    never user-declared.
    """

    support: tuple[int, ...]
    matrix: np.ndarray
    rank: int = field(init=False)

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        if not support:
            raise ValueError("projector support is empty")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ValueError(f"support must be strictly increasing, got {support}")
        mat = np.array(self.matrix, dtype=np.complex128)
        dim = 1 << len(support)
        if mat.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {mat.shape} does not match support of {len(support)} qubits"
            )
        mat.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "matrix", mat)
        # Spectrum of the Hermitian part; for a genuine projector this is
        # exactly the spectrum of the matrix itself.
        eigs = np.linalg.eigvalsh((mat + mat.conj().T) / 2.0)
        object.__setattr__(self, "rank", int(np.sum(np.abs(eigs - 1.0) <= TOL)))

    @property
    def k(self) -> int:
        return len(self.support)

    def overlaps(self, other: "LocalProjector") -> bool:
        return bool(set(self.support) & set(other.support))


class MarginResult(NamedTuple):
    margin: float
    holds: bool


@dataclass(frozen=True)
class QsatInstance:
    """n qubits and m commuting k-local projectors of rank at most r.

    Immutable after construction; neighborhoods and degree numbers are
    precomputed.  ``d`` is the projector degree: the largest inclusive
    neighborhood (the projector itself plus every projector sharing a
    qubit with it).
    """

    n: int
    projectors: tuple[LocalProjector, ...]
    declared_rank_cap: int | None = None
    neighborhoods: tuple[tuple[int, ...], ...] = field(init=False)
    d: int = field(init=False)

    def __post_init__(self):
        projectors = tuple(self.projectors)
        if not projectors:
            raise ValueError("instance has no projectors")
        widths = {p.k for p in projectors}
        if len(widths) != 1:
            raise ValueError(f"mixed projector widths {sorted(widths)}; uniform k required")
        object.__setattr__(self, "projectors", projectors)
        nbrs = []
        for i, p in enumerate(projectors):
            others = [
                j for j, q in enumerate(projectors) if j != i and p.overlaps(q)
            ]
            nbrs.append((i, *others))
        object.__setattr__(self, "neighborhoods", tuple(nbrs))
        object.__setattr__(self, "d", max(len(g) for g in nbrs))

    @property
    def m(self) -> int:
        return len(self.projectors)

    @property
    def k(self) -> int:
        return self.projectors[0].k

    @property
    def r(self) -> int:
        """Maximum computed projector rank."""
        return max(p.rank for p in self.projectors)

    @property
    def qubit_degree(self) -> int:
        """Largest number of projectors any single qubit appears in."""
        counts = [0] * self.n
        for p in self.projectors:
            for q in p.support:
                counts[q] += 1
        return max(counts)

    def neighborhood(self, i: int) -> tuple[int, ...]:
        """Inclusive neighborhood of projector ``i``: itself first, then
        every overlapping projector in ascending index order."""
        if not 0 <= i < self.m:
            raise IndexError(f"projector index {i} out of range for m={self.m}")
        return self.neighborhoods[i]


def neighborhood(inst: QsatInstance, i: int) -> tuple[int, ...]:
    return inst.neighborhood(i)


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    violations: tuple[tuple[str, tuple[int, ...], float], ...]

    def summary(self) -> str:
        if self.passed:
            return "ok"
        return "; ".join(
            f"{kind}{list(idx)}: deviation {dev:.3g}" for kind, idx, dev in self.violations
        )


def validate_instance(inst: QsatInstance) -> ValidationReport:
    """Check every projector and every overlapping pair.

    Reports hermiticity, idempotency, rank, support-range, and pairwise
    commutation violations with the largest offending matrix entry.
    Structural problems (dimension mismatch, unsorted support) are
    rejected already at construction time.
    """
    violations: list[tuple[str, tuple[int, ...], float]] = []
    for i, p in enumerate(inst.projectors):
        mat = p.matrix
        dev = float(np.max(np.abs(mat - mat.conj().T)))
        if dev > TOL:
            violations.append(("hermiticity", (i,), dev))
        dev = float(np.max(np.abs(mat @ mat - mat)))
        if dev > TOL:
            violations.append(("idempotency", (i,), dev))
        if p.rank == 0:
            # A never-violated constraint; downstream resampling has no
            # subspace to rotate into.
            violations.append(("rank", (i,), 0.0))
        if inst.declared_rank_cap is not None and p.rank > inst.declared_rank_cap:
            violations.append(("rank", (i,), float(p.rank)))
        if any(q < 0 or q >= inst.n for q in p.support):
            violations.append(("support", (i,), 0.0))

    for i, j in itertools.combinations(range(inst.m), 2):
        pi, pj = inst.projectors[i], inst.projectors[j]
        if not pi.overlaps(pj):
            continue
        joint = tuple(sorted(set(pi.support) | set(pj.support)))
        pos = {q: idx for idx, q in enumerate(joint)}
        a = embed_local(pi.matrix, [pos[q] for q in pi.support], len(joint))
        b = embed_local(pj.matrix, [pos[q] for q in pj.support], len(joint))
        dev = float(np.max(np.abs(a @ b - b @ a)))
        if dev > TOL:
            violations.append(("commutation", (i, j), dev))

    return ValidationReport(passed=not violations, violations=tuple(violations))


def lll_margin(inst: QsatInstance) -> MarginResult:
    """Degree-condition margin in bits: k - log2(d*e*r).

    Non-negative margin is exactly the symmetric condition d <= 2^k/(r*e),
    and it equals the per-failure compression gain of the run-time
    argument.
    """
    r = inst.r
    if r == 0:
        raise ValueError("instance contains a rank-0 projector; margin undefined")
    margin = inst.k - math.log2(inst.d * math.e * r)
    return MarginResult(margin=margin, holds=margin >= 0.0)


def qubit_degree_condition(inst: QsatInstance) -> MarginResult:
    """Informational qubit-degree form of the condition.

    Checks qubit_degree < 2^k / (e*r*k).  The solver's budgets use the
    projector-degree form (``lll_margin``), not this one.
    """
    r = inst.r
    if r == 0:
        raise ValueError("instance contains a rank-0 projector")
    bound = 2**inst.k / (math.e * r * inst.k)
    deg = inst.qubit_degree
    return MarginResult(margin=math.log2(bound / deg), holds=deg < bound)


# ---------------------------------------------------------------------------
# DIMACS ingestion / export


def from_dimacs(text) -> QsatInstance:
    """Parse a uniform-width DIMACS CNF formula into a diagonal instance.

    Each clause becomes the rank-1 diagonal projector onto its unique
    falsifying assignment; variable i maps to qubit i-1.  Mixed clause
    widths, repeated variables inside a clause, and empty formulas are
    rejected.
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    tokens: list[str] = []
    header: tuple[int, int] | None = None
    for line in text:
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"malformed problem line: {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        tokens.extend(line.split())
    if header is None:
        raise ValueError("missing 'p cnf' problem line")
    n_vars, n_clauses = header
    if n_vars <= 0 or n_clauses <= 0:
        raise ValueError("empty formula")

    clauses: list[list[int]] = []
    current: list[int] = []
    for tok in tokens:
        lit = int(tok)
        if lit == 0:
            if current:
                clauses.append(current)
                current = []
        else:
            current.append(lit)
    if current:
        raise ValueError("clause not terminated by 0")
    if not clauses:
        raise ValueError("empty formula")
    if len(clauses) != n_clauses:
        raise ValueError(
            f"header declares {n_clauses} clauses but {len(clauses)} were found"
        )

    widths = {len(cl) for cl in clauses}
    if len(widths) != 1:
        raise ValueError(f"mixed clause widths {sorted(widths)}; uniform k required")

    projectors = []
    for cl in clauses:
        variables = [abs(lit) for lit in cl]
        if len(set(variables)) != len(variables):
            raise ValueError(f"repeated variable in clause {cl}")
        if any(v < 1 or v > n_vars for v in variables):
            raise ValueError(f"variable out of range in clause {cl}")
        by_qubit = sorted((abs(lit) - 1, 0 if lit > 0 else 1) for lit in cl)
        support = tuple(q for q, _ in by_qubit)
        falsify = sum(bit << j for j, (_, bit) in enumerate(by_qubit))
        mat = np.zeros((1 << len(cl), 1 << len(cl)), dtype=np.complex128)
        mat[falsify, falsify] = 1.0
        projectors.append(LocalProjector(support=support, matrix=mat))

    return QsatInstance(n=n_vars, projectors=tuple(projectors), declared_rank_cap=1)


def to_dimacs(inst: QsatInstance) -> str:
    """Export a diagonal rank-1 instance back to DIMACS CNF."""
    lines = [f"p cnf {inst.n} {inst.m}"]
    for i, p in enumerate(inst.projectors):
        mat = p.matrix
        off_diag = mat - np.diag(np.diag(mat))
        if np.max(np.abs(off_diag)) > 1e-12 or p.rank != 1:
            raise ValueError(f"projector {i} is not a diagonal rank-1 clause")
        diag = np.real(np.diag(mat))
        (ones,) = np.nonzero(np.abs(diag - 1.0) <= 1e-12)
        if len(ones) != 1:
            raise ValueError(f"projector {i} is not a clause projector")
        falsify = int(ones[0])
        lits = []
        for j, q in enumerate(p.support):
            bit = (falsify >> j) & 1
            lits.append(-(q + 1) if bit else (q + 1))
        lines.append(" ".join(str(x) for x in lits) + " 0")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Random generation


def _haar_qubit_unitary(gen: np.random.Generator) -> np.ndarray:
    z = gen.normal(size=(2, 2)) + 1j * gen.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def gen_random_instance(
    n: int, m: int, k: int, seed: int, diagonal: bool = False
) -> QsatInstance:
    """Sample a commuting instance: m distinct k-qubit supports with
    diagonal rank-1 projectors, conjugated by one fixed random product of
    single-qubit unitaries.

    Product conjugation preserves locality and pairwise commutation, so
    the result is always a valid commuting instance; with
    ``diagonal=True`` the conjugation step is skipped and the instance is
    classical.  Bit-identical output for identical arguments.
    """
    if n < k:
        raise ValueError(f"need n >= k, got n={n}, k={k}")
    if m < 1:
        raise ValueError("need m >= 1")
    total = math.comb(n, k)
    if m > total:
        raise ValueError(f"cannot place {m} distinct supports: only {total} exist")

    gen = np.random.Generator(np.random.PCG64(seed & ((1 << 64) - 1)))

    if total <= 1 << 20:
        combos = list(itertools.combinations(range(n), k))
        chosen = [combos[idx] for idx in gen.choice(total, size=m, replace=False)]
    else:
        seen: set[tuple[int, ...]] = set()
        chosen = []
        while len(chosen) < m:
            sup = tuple(sorted(int(q) for q in gen.choice(n, size=k, replace=False)))
            if sup not in seen:
                seen.add(sup)
                chosen.append(sup)
    chosen.sort()

    falsify = [int(gen.integers(0, 1 << k)) for _ in range(m)]
    qubit_unitaries = [
        np.eye(2, dtype=np.complex128) if diagonal else _haar_qubit_unitary(gen)
        for _ in range(n)
    ]

    projectors = []
    for sup, v in zip(chosen, falsify):
        mat = np.zeros((1 << k, 1 << k), dtype=np.complex128)
        mat[v, v] = 1.0
        if not diagonal:
            # support[j] is local bit j, so the leftmost kron factor is the
            # most significant support qubit
            u = qubit_unitaries[sup[-1]]
            for q in reversed(sup[:-1]):
                u = np.kron(u, qubit_unitaries[q])
            mat = u @ mat @ u.conj().T
        projectors.append(LocalProjector(support=sup, matrix=mat))

    return QsatInstance(n=n, projectors=tuple(projectors), declared_rank_cap=1)


# ---------------------------------------------------------------------------
# JSON I/O


def instance_to_obj(inst: QsatInstance) -> dict:
    """Plain-JSON form: {"n": ..., "projectors": [{"support", "matrix"}]}.

    Matrix entries are [re, im] pairs, row-major; support[0] is the least
    significant qubit of the local index.
    """
    return {
        "n": inst.n,
        "projectors": [
            {
                "support": list(p.support),
                "matrix": [
                    [[float(z.real), float(z.imag)] for z in row] for row in p.matrix
                ],
            }
            for p in inst.projectors
        ],
    }


def instance_from_obj(obj: dict) -> QsatInstance:
    try:
        n = int(obj["n"])
        raw = obj["projectors"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance object: {exc}") from exc
    projectors = []
    for entry in raw:
        support = tuple(int(q) for q in entry["support"])
        mat = np.array(
            [[complex(re, im) for re, im in row] for row in entry["matrix"]],
            dtype=np.complex128,
        )
        projectors.append(LocalProjector(support=support, matrix=mat))
    declared = obj.get("r")
    return QsatInstance(
        n=n,
        projectors=tuple(projectors),
        declared_rank_cap=None if declared is None else int(declared),
    )
