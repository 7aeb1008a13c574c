"""Deterministic randomness with a pinned consumption discipline.

Every stochastic choice in the package flows through :class:`RandomStream`
so that a 64-bit seed fully determines a run and independent
implementations (e.g. a classical reference solver) can consume the exact
same stream.  The discipline is part of the reproducibility contract:

* ``bit()``            -> one draw of ``integers(0, 2)`` from PCG64
* ``bits(count)``      -> ``count`` successive ``bit()`` draws
* ``uniform()``        -> one draw of ``random()`` from PCG64
* ``pick(probs)``      -> exactly one ``uniform()`` draw, mapped to an index
                          by cumulative scan over ``probs``

A trajectory consumes, in order: ``bits(n)`` for the initial assignment,
one ``uniform()`` per measurement, and per failed measurement one
``uniform()`` for the extracted-index pick followed by ``bits(k)`` for the
fresh block.
"""

from __future__ import annotations

import numpy as np

#: Identifier embedded in run records; bump when the discipline changes.
ALGORITHM_ID = "pcg64-stream-v1"

_MASK64 = (1 << 64) - 1


def split_seed(seed: int, index: int) -> int:
    """Per-trial stream seed: XOR of the base seed with the trial index."""
    return (seed ^ index) & _MASK64


class RandomStream:
    """A seeded PCG64 generator exposing only the pinned draw primitives."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def bit(self) -> int:
        return int(self._gen.integers(0, 2))

    def bits(self, count: int) -> list[int]:
        return [self.bit() for _ in range(count)]

    def uniform(self) -> float:
        return float(self._gen.random())

    def pick(self, probs) -> int:
        """Sample an index with the given weights using one uniform draw.

        Weights are expected to sum to 1 up to float error; if the draw
        falls past the accumulated total (possible only through rounding),
        the last index with positive weight is returned.
        """
        u = self.uniform()
        acc = 0.0
        last_positive = 0
        for i, p in enumerate(probs):
            if p > 0.0:
                last_positive = i
            acc += p
            if u < acc:
                return i
        return last_positive
