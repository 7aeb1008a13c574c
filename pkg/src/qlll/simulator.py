"""Dense statevector kernel.

Local operator application, coherent measurement branching, canonical
projector diagonalization, swap-and-rotate resampling, and energy
evaluation.  Amplitude indexing is little-endian: qubit 0 is the least
significant bit of the amplitude index, and within a local block
``support[j]`` is bit ``j`` of the local index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import InvariantViolation

if TYPE_CHECKING:  # pragma: no cover
    from .instance import LocalProjector, QsatInstance
    from .rng import RandomStream

TOL = 1e-9
#: Probabilities below this are numerical dust, never real branches.
PRUNE_TOL = 1e-12


@dataclass
class StateVector:
    """Normalized complex amplitude vector over n qubits."""

    n: int
    amps: np.ndarray

    @classmethod
    def basis(cls, n: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n=n, amps=amps)

    @classmethod
    def from_bits(cls, bits) -> "StateVector":
        index = sum(int(b) << q for q, b in enumerate(bits))
        return cls.basis(len(bits), index)

    def norm_sq(self) -> float:
        return float(np.real(np.vdot(self.amps, self.amps)))

    def copy(self) -> "StateVector":
        return StateVector(n=self.n, amps=self.amps.copy())


def _check_support(support, n: int) -> tuple[int, ...]:
    support = tuple(int(q) for q in support)
    if len(set(support)) != len(support):
        raise ValueError(f"support has repeated qubits: {support}")
    if any(q < 0 or q >= n for q in support):
        raise ValueError(f"support {support} out of range for n={n}")
    return support


def _apply_local(amps: np.ndarray, mat: np.ndarray, support, n: int) -> np.ndarray:
    """Apply a 2^k x 2^k matrix to the listed qubits (matrix need not be
    unitary); returns a fresh amplitude array."""
    k = len(support)
    # tensor axis of qubit q is n-1-q; the reshaped leading axis must run
    # over the local index with support[k-1] as its most significant bit
    axes = [n - 1 - q for q in reversed(support)]
    psi = np.moveaxis(amps.reshape([2] * n), axes, range(k))
    out = mat @ psi.reshape(1 << k, -1)
    out = np.moveaxis(out.reshape([2] * n), range(k), axes)
    return np.ascontiguousarray(out).reshape(-1)


def apply_local_unitary(state: StateVector, u: np.ndarray, support) -> StateVector:
    """Apply ``u`` (tensored with identity on the complement) to the state."""
    support = _check_support(support, state.n)
    u = np.asarray(u, dtype=np.complex128)
    dim = 1 << len(support)
    if u.shape != (dim, dim):
        raise ValueError(f"unitary shape {u.shape} does not match {len(support)} qubits")
    if np.max(np.abs(u @ u.conj().T - np.eye(dim))) > TOL:
        raise ValueError("matrix is not unitary within tolerance")
    return StateVector(n=state.n, amps=_apply_local(state.amps, u, support, state.n))


def embed_local(mat: np.ndarray, positions, width: int) -> np.ndarray:
    """Extend a local matrix by identity onto a wider local space.

    ``positions`` are the bit positions (within the width-bit index) the
    matrix acts on, ascending; all other bits are untouched.
    """
    positions = list(positions)
    k = len(positions)
    rest = [p for p in range(width) if p not in positions]
    dim = 1 << width
    out = np.zeros((dim, dim), dtype=np.complex128)
    spread = [
        sum(((l >> j) & 1) << p for j, p in enumerate(positions)) for l in range(1 << k)
    ]
    for bits in itertools.product((0, 1), repeat=len(rest)):
        base = sum(b << p for b, p in zip(bits, rest))
        idx = [base + s for s in spread]
        out[np.ix_(idx, idx)] = mat
    return out


@dataclass
class MeasurementBranches:
    """Both outcomes of a coherent projector measurement.

    ``fail_state`` is the normalized projection onto the projector's range
    (outcome 1) and ``success_state`` onto its kernel (outcome 0); a branch
    whose probability falls below PRUNE_TOL is absent.
    """

    p_fail: float
    success_state: StateVector | None
    fail_state: StateVector | None


def coherent_measure(state: StateVector, proj: "LocalProjector") -> MeasurementBranches:
    fail_un = _apply_local(state.amps, proj.matrix, proj.support, state.n)
    succ_un = state.amps - fail_un
    p_fail = float(np.real(np.vdot(fail_un, fail_un)))
    p_fail = min(max(p_fail, 0.0), 1.0)
    p_succ = float(np.real(np.vdot(succ_un, succ_un)))

    fail_state = None
    if p_fail >= PRUNE_TOL:
        fail_state = StateVector(n=state.n, amps=fail_un / np.sqrt(p_fail))
    success_state = None
    if p_succ >= PRUNE_TOL:
        success_state = StateVector(n=state.n, amps=succ_un / np.sqrt(p_succ))
    return MeasurementBranches(
        p_fail=p_fail, success_state=success_state, fail_state=fail_state
    )


@dataclass(frozen=True)
class Diagonalizer:
    """Canonical unitary bringing a projector to diag(1,...,1,0,...,0)."""

    unitary: np.ndarray
    rank: int


def _orthonormalize(columns: np.ndarray, basis: list[np.ndarray]) -> None:
    """Gram-Schmidt the columns (ascending order) into ``basis`` in place,
    dropping near-zero residuals.  Projects twice for numerical stability;
    the construction stays deterministic for a given input matrix."""
    for j in range(columns.shape[1]):
        v = columns[:, j].astype(np.complex128)
        for _ in range(2):
            for b in basis:
                v = v - b * np.vdot(b, v)
        nrm = float(np.linalg.norm(v))
        if nrm > TOL:
            basis.append(v / nrm)


def diagonalizer(proj: "LocalProjector") -> Diagonalizer:
    """Return the canonical U with U P U^dag = diag(1,..,1,0,..,0).

    Range vectors come first, obtained by orthonormalizing the columns of
    the projector in ascending column order; the kernel part is completed
    from the columns of (1 - P).
    """
    if proj.rank == 0:
        raise ValueError("rank-0 projector has no range to rotate into")
    mat = proj.matrix
    dim = mat.shape[0]
    basis: list[np.ndarray] = []
    _orthonormalize(mat, basis)
    if len(basis) != proj.rank:
        raise InvariantViolation(
            f"range extraction found {len(basis)} vectors, expected rank {proj.rank}"
        )
    _orthonormalize(np.eye(dim, dtype=np.complex128) - mat, basis)
    if len(basis) != dim:
        raise InvariantViolation("orthonormal completion did not span the local space")
    u = np.conj(np.array(basis))  # row i is the bra of basis vector i
    return Diagonalizer(unitary=u, rank=proj.rank)


def resample(
    state: StateVector,
    proj: "LocalProjector",
    rng: "RandomStream",
    diag: Diagonalizer | None = None,
) -> tuple[StateVector, int]:
    """Swap-and-rotate a violated block, realized in trajectory form.

    The state must lie in the projector's range.  The support qubits are
    rotated by the canonical diagonalizer, measured in the computational
    basis (the outcome index is guaranteed below the rank and returned),
    and overwritten with a fresh uniformly random basis block.  Measuring
    the swapped-out block immediately is equivalent to keeping it in an
    external register: nothing ever acts on it again.
    """
    if diag is None:
        diag = diagonalizer(proj)
    k = proj.k
    n = state.n

    p_in_range = float(
        np.real(
            np.vdot(state.amps, _apply_local(state.amps, proj.matrix, proj.support, n))
        )
    )
    if abs(p_in_range - 1.0) > 1e-9:
        raise ValueError(
            f"resample requires a state in the projector's range; <P> = {p_in_range}"
        )

    rotated = _apply_local(state.amps, diag.unitary, proj.support, n)
    axes = [n - 1 - q for q in reversed(proj.support)]
    rows = np.moveaxis(rotated.reshape([2] * n), axes, range(k)).reshape(1 << k, -1)
    probs = np.real(np.einsum("ij,ij->i", rows, np.conj(rows)))

    extracted = rng.pick(probs)
    if extracted >= diag.rank:
        raise InvariantViolation(
            f"extracted index {extracted} >= rank {diag.rank} "
            f"(outcome probability {probs[extracted]:.3e})"
        )

    fresh_bits = rng.bits(k)
    fresh = sum(b << j for j, b in enumerate(fresh_bits))
    new_rows = np.zeros_like(rows)
    new_rows[fresh] = rows[extracted] / np.sqrt(probs[extracted])
    amps = np.moveaxis(new_rows.reshape([2] * n), range(k), axes)
    return StateVector(n=n, amps=np.ascontiguousarray(amps).reshape(-1)), extracted


def replace_block(
    state: StateVector,
    proj: "LocalProjector",
    diag: Diagonalizer,
    extracted: int,
    fresh: int,
) -> tuple[StateVector, float]:
    """Deterministic single branch of the resampling step.

    Rotates the support block, projects onto local outcome ``extracted``,
    and overwrites the block with basis value ``fresh``.  Returns the
    normalized branch state and the outcome probability (zero if the
    branch is empty).  Used by exact history enumeration.
    """
    k = proj.k
    n = state.n
    rotated = _apply_local(state.amps, diag.unitary, proj.support, n)
    axes = [n - 1 - q for q in reversed(proj.support)]
    rows = np.moveaxis(rotated.reshape([2] * n), axes, range(k)).reshape(1 << k, -1)
    p = float(np.real(np.vdot(rows[extracted], rows[extracted])))
    if p < PRUNE_TOL:
        return state, 0.0
    new_rows = np.zeros_like(rows)
    new_rows[fresh] = rows[extracted] / np.sqrt(p)
    amps = np.moveaxis(new_rows.reshape([2] * n), range(k), axes)
    return StateVector(n=n, amps=np.ascontiguousarray(amps).reshape(-1)), p


def block_outcome_probs(state: StateVector, proj: "LocalProjector", diag: Diagonalizer) -> np.ndarray:
    """Born weights of the rotated support block's basis outcomes."""
    n = state.n
    k = proj.k
    rotated = _apply_local(state.amps, diag.unitary, proj.support, n)
    axes = [n - 1 - q for q in reversed(proj.support)]
    rows = np.moveaxis(rotated.reshape([2] * n), axes, range(k)).reshape(1 << k, -1)
    return np.real(np.einsum("ij,ij->i", rows, np.conj(rows)))


def energy(state: StateVector, inst: "QsatInstance") -> list[float]:
    """Expectation <psi|P_i|psi> for every projector, each in [0, 1]."""
    out = []
    for p in inst.projectors:
        val = float(
            np.real(
                np.vdot(state.amps, _apply_local(state.amps, p.matrix, p.support, state.n))
            )
        )
        out.append(max(val, 0.0))
    return out
