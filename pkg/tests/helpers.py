"""Shared test oracles and instance corpora.

The oracles here deliberately avoid the library's kernels: full-space
operators are built by explicit bit manipulation so expected values come
from an independent computation path.
"""

from __future__ import annotations

import numpy as np

from qlll import (
    LocalProjector,
    QsatInstance,
    from_dimacs,
    gen_random_instance,
    lll_margin,
    validate_instance,
)


def apply_full(mat: np.ndarray, support, n: int, vec: np.ndarray) -> np.ndarray:
    """Oracle: apply a local operator to a full statevector by explicit
    index arithmetic (qubit q is bit q; support[j] is local bit j)."""
    support = list(support)
    k = len(support)
    out = np.zeros(1 << n, dtype=complex)
    for fb in range(1 << n):
        amp = vec[fb]
        if amp == 0:
            continue
        local = sum(((fb >> q) & 1) << j for j, q in enumerate(support))
        base = fb
        for q in support:
            base &= ~(1 << q)
        for new_local in range(1 << k):
            target = base
            for j, q in enumerate(support):
                if (new_local >> j) & 1:
                    target |= 1 << q
            out[target] += mat[new_local, local] * amp
    return out


def full_matrix(mat: np.ndarray, support, n: int) -> np.ndarray:
    """Oracle: full 2^n x 2^n matrix of a local operator."""
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        basis = np.zeros(dim, dtype=complex)
        basis[col] = 1.0
        out[:, col] = apply_full(mat, support, n, basis)
    return out


def clause_projector(support, falsify_bits) -> LocalProjector:
    """Diagonal rank-1 projector onto one local basis state."""
    k = len(support)
    idx = sum(int(b) << j for j, b in enumerate(falsify_bits))
    mat = np.zeros((1 << k, 1 << k), dtype=complex)
    mat[idx, idx] = 1.0
    return LocalProjector(support=tuple(support), matrix=mat)


def pair_instance_k3(n: int = 5) -> QsatInstance:
    """Two k=3 clauses sharing one qubit: d = 2, margin ~ 0.557."""
    return QsatInstance(
        n=n,
        projectors=(
            clause_projector((0, 1, 2), (1, 1, 1)),
            clause_projector((2, 3, 4), (1, 1, 1)),
        ),
    )


def chain_instance(m: int, k: int = 2) -> QsatInstance:
    """m clauses in a chain, consecutive supports sharing one qubit."""
    projectors = []
    for i in range(m):
        start = i * (k - 1)
        support = tuple(range(start, start + k))
        projectors.append(clause_projector(support, (1,) * k))
    n = (m - 1) * (k - 1) + k
    return QsatInstance(n=n, projectors=tuple(projectors))


def star_instance() -> QsatInstance:
    """One central k=2 clause overlapping three satellites (m=4)."""
    return QsatInstance(
        n=6,
        projectors=(
            clause_projector((0, 1), (1, 1)),
            clause_projector((0, 2), (1, 0)),
            clause_projector((1, 3), (0, 1)),
            clause_projector((4, 5), (1, 1)),
        ),
    )


def margin_corpus(count: int, min_margin: float = 0.3, max_seed: int = 4000):
    """Deterministic scan of generator seeds for commuting instances with
    n <= 10, k in {2, 3}, and margin at least ``min_margin``.

    Alternates diagonal and conjugated instances across parameter shapes.
    """
    shapes = [
        (10, 3, 2),
        (8, 2, 2),
        (10, 4, 3),
        (9, 3, 3),
        (6, 2, 2),
        (10, 2, 3),
    ]
    out = []
    seed = 0
    while len(out) < count and seed < max_seed:
        n, m, k = shapes[seed % len(shapes)]
        diagonal = seed % 2 == 0
        inst = gen_random_instance(n, m, k, seed=seed, diagonal=diagonal)
        seed += 1
        margin = lll_margin(inst)
        if margin.margin >= min_margin:
            out.append(inst)
    if len(out) < count:
        raise RuntimeError(
            f"seed scan exhausted at {len(out)}/{count} margin-{min_margin} instances"
        )
    return out


def enumerable_corpus():
    """Small instances whose averaged trees fit n + k*N <= 18 budgets,
    paired with budgets that leave measurable exhaustion mass."""
    single_k1 = from_dimacs("p cnf 1 1\n-1 0\n")
    single_k2 = from_dimacs("p cnf 2 1\n1 2 0\n")
    disjoint_k2 = from_dimacs("p cnf 4 2\n1 2 0\n3 -4 0\n")
    overlap_k2 = from_dimacs("p cnf 3 2\n1 2 0\n-2 3 0\n")
    single_k3 = from_dimacs("p cnf 3 1\n1 -2 3 0\n")
    conjugated = gen_random_instance(2, 1, 2, seed=11)
    assert validate_instance(conjugated).passed
    return [
        (single_k1, 2),
        (single_k2, 7),
        (disjoint_k2, 4),
        (overlap_k2, 4),
        (single_k3, 5),
        (conjugated, 6),
    ]
