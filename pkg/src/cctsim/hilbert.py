"""Dense linear-algebra core for small mixed-dimension quantum registers.

States and operators carry an ordered tuple of subsystem dimensions.
Amplitude indexing is mixed-radix and big-endian: the leftmost subsystem is
the most significant digit, so the index of |a, b, c> over dims (2, 2, 3)
is a*6 + b*3 + c and printed basis labels read in register order.  The
protocol layer fixes that order as A (Alice's target qubit), B (Bob's
control qubit), C (ancilla) and never permutes it.

All values are immutable after construction and safe to share between
threads.  Randomness enters only through explicitly passed generators.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

# Normalization / unitarity tolerance.
NORMALIZATION_TOL = 1e-12
# Fidelity tolerance for comparing states built along independent routes;
# looser than NORMALIZATION_TOL to leave headroom for ~10 chained matrix
# applications.
FIDELITY_TOL = 1e-10


def _check_dims(dims: Iterable[int]) -> tuple[int, ...]:
    out = tuple(int(d) for d in dims)
    if not out or any(d < 1 for d in out):
        raise ValueError(f"subsystem dimensions must be positive integers, got {dims!r}")
    return out


@dataclass(frozen=True)
class StateVector:
    """Pure state over an ordered register of qudits."""

    dims: tuple[int, ...]
    amps: np.ndarray

    def __post_init__(self) -> None:
        dims = _check_dims(self.dims)
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        expected = math.prod(dims)
        if amps.size != expected:
            raise ValueError(f"expected {expected} amplitudes for dims {dims}, got {amps.size}")
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def basis(cls, dims: Iterable[int], labels: Sequence[int]) -> StateVector:
        """Computational basis ket |labels> over the given dims."""
        dims = _check_dims(dims)
        amps = np.zeros(math.prod(dims), dtype=np.complex128)
        amps[int(np.ravel_multi_index(tuple(labels), dims))] = 1.0
        return cls(dims, amps)

    @classmethod
    def from_terms(
        cls,
        dims: Iterable[int],
        terms: Mapping[tuple[int, ...], complex],
        normalize: bool = False,
    ) -> StateVector:
        """State assembled from a {basis labels: amplitude} mapping."""
        dims = _check_dims(dims)
        amps = np.zeros(math.prod(dims), dtype=np.complex128)
        for labels, amp in terms.items():
            amps[int(np.ravel_multi_index(tuple(labels), dims))] += amp
        state = cls(dims, amps)
        return state.normalized() if normalize else state

    def index_of(self, labels: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(labels), self.dims))

    def amplitude(self, labels: Sequence[int]) -> complex:
        return complex(self.amps[self.index_of(labels)])

    def squared_norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        return abs(self.squared_norm() - 1.0) <= tol

    def normalized(self) -> StateVector:
        norm = np.linalg.norm(self.amps)
        if norm <= NORMALIZATION_TOL:
            raise ValueError("cannot normalize a (near-)zero state vector")
        return StateVector(self.dims, self.amps / norm)


@dataclass(frozen=True)
class Operator:
    """Dense square operator over an ordered register of qudits.

    Row and column indexing follow the same mixed-radix convention as
    StateVector amplitudes.
    """

    dims: tuple[int, ...]
    entries: np.ndarray

    def __post_init__(self) -> None:
        dims = _check_dims(self.dims)
        entries = np.array(self.entries, dtype=np.complex128)
        size = math.prod(dims)
        if entries.shape != (size, size):
            raise ValueError(f"expected a {size}x{size} matrix for dims {dims}, got {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def identity(cls, dims: Iterable[int]) -> Operator:
        dims = _check_dims(dims)
        return cls(dims, np.eye(math.prod(dims), dtype=np.complex128))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def adjoint(self) -> Operator:
        return Operator(self.dims, self.entries.conj().T)

    def unitarity_defect(self) -> float:
        """Max-norm of adjoint*self minus the identity."""
        gram = self.entries.conj().T @ self.entries
        return float(np.max(np.abs(gram - np.eye(self.size))))

    def is_unitary(self, tol: float = NORMALIZATION_TOL) -> bool:
        return self.unitarity_defect() < tol

    def is_permutation(self, tol: float = NORMALIZATION_TOL) -> bool:
        """True if every entry is 0 or 1 and each row/column has a single 1."""
        entries = self.entries
        near_one = np.abs(entries - 1.0) <= tol
        near_zero = np.abs(entries) <= tol
        if not np.all(near_one | near_zero):
            return False
        ones = near_one.astype(int)
        return bool(np.all(ones.sum(axis=0) == 1) and np.all(ones.sum(axis=1) == 1))

    def __matmul__(self, other: Operator) -> Operator:
        if not isinstance(other, Operator):
            return NotImplemented
        if self.dims != other.dims:
            raise ValueError(f"cannot compose operators over dims {self.dims} and {other.dims}")
        return Operator(self.dims, self.entries @ other.entries)


def tensor(a: StateVector | Operator, b: StateVector | Operator):
    """Kronecker product of two states or two operators; dims concatenate."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(a.dims + b.dims, np.kron(a.amps, b.amps))
    if isinstance(a, Operator) and isinstance(b, Operator):
        return Operator(a.dims + b.dims, np.kron(a.entries, b.entries))
    raise TypeError("tensor requires two StateVectors or two Operators")


def apply(op: Operator, state: StateVector, targets: Sequence[int]) -> StateVector:
    """Apply ``op`` to the listed subsystems of ``state``, identity elsewhere.

    ``targets`` are subsystem indices in the order matching ``op.dims``.
    """
    targets = [int(t) for t in targets]
    n = len(state.dims)
    if len(set(targets)) != len(targets):
        raise ValueError(f"repeated target index in {targets}")
    if any(t < 0 or t >= n for t in targets):
        raise ValueError(f"target index out of range for {n} subsystems: {targets}")
    target_dims = tuple(state.dims[t] for t in targets)
    if op.dims != target_dims:
        raise ValueError(f"operator dims {op.dims} do not match targeted subsystem dims {target_dims}")

    k = len(targets)
    block = math.prod(target_dims)
    # Contiguous blocks in register order reduce to a plain matrix product.
    if targets == list(range(n - k, n)):
        out = (state.amps.reshape(-1, block) @ op.entries.T).reshape(-1)
        return StateVector(state.dims, out)
    if targets == list(range(k)):
        out = (op.entries @ state.amps.reshape(block, -1)).reshape(-1)
        return StateVector(state.dims, out)
    psi = state.amps.reshape(state.dims)
    moved = np.moveaxis(psi, targets, range(k))
    op_tensor = op.entries.reshape(op.dims + op.dims)
    contracted = np.tensordot(op_tensor, moved, axes=(tuple(range(k, 2 * k)), tuple(range(k))))
    result = np.moveaxis(contracted, range(k), targets)
    return StateVector(state.dims, result.reshape(-1))


def born_probabilities(state: StateVector, subsystem: int) -> np.ndarray:
    """Marginal outcome probabilities for measuring one subsystem."""
    n = len(state.dims)
    if subsystem < 0 or subsystem >= n:
        raise ValueError(f"subsystem index {subsystem} out of range for {n} subsystems")
    psi = np.moveaxis(state.amps.reshape(state.dims), subsystem, 0)
    flat = psi.reshape(state.dims[subsystem], -1)
    return np.einsum("ij,ij->i", flat, flat.conj()).real


def collapse(state: StateVector, subsystem: int, outcome: int) -> tuple[StateVector, float]:
    """Project one subsystem onto a basis outcome and renormalize.

    Returns the collapsed full-register state and the Born weight of the
    branch.  Raises if the branch carries (near-)zero weight.
    """
    probs = born_probabilities(state, subsystem)
    if outcome < 0 or outcome >= probs.size:
        raise ValueError(f"outcome {outcome} out of range for dimension {probs.size}")
    weight = float(probs[outcome])
    if weight <= NORMALIZATION_TOL:
        raise ValueError(f"cannot collapse onto outcome {outcome} with Born weight {weight}")
    psi = np.moveaxis(state.amps.reshape(state.dims), subsystem, 0).copy()
    mask = np.zeros(psi.shape[0], dtype=bool)
    mask[outcome] = True
    psi[~mask] = 0.0
    psi = np.moveaxis(psi, 0, subsystem)
    collapsed = StateVector(state.dims, psi.reshape(-1) / np.sqrt(weight))
    return collapsed, weight


def factor_out(state: StateVector, subsystem: int, outcome: int, tol: float = NORMALIZATION_TOL) -> StateVector:
    """Drop a subsystem that is (up to ``tol``) in the basis state ``outcome``."""
    probs = born_probabilities(state, subsystem)
    residual = float(probs.sum() - probs[outcome])
    if residual > tol:
        raise ValueError(f"subsystem {subsystem} is not in basis state {outcome}: residual weight {residual}")
    psi = np.moveaxis(state.amps.reshape(state.dims), subsystem, 0)
    remaining = tuple(d for i, d in enumerate(state.dims) if i != subsystem)
    return StateVector(remaining, psi[outcome].reshape(-1)).normalized()


def measure(
    state: StateVector, subsystem: int, rng: np.random.Generator
) -> tuple[int, StateVector, float]:
    """Projective measurement of one subsystem in the computational basis.

    Samples the outcome from the Born distribution, collapses and
    renormalizes.  Returns (outcome, collapsed state, exact Born weight of
    the sampled outcome).
    """
    probs = born_probabilities(state, subsystem)
    total = float(probs.sum())
    if total <= NORMALIZATION_TOL:
        raise ValueError("all-zero measurement marginal; state is unnormalized upstream")
    u = rng.random() * total
    outcome = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    outcome = min(outcome, probs.size - 1)
    collapsed, weight = collapse(state, subsystem, outcome)
    return outcome, collapsed, weight


def fidelity(a: StateVector, b: StateVector) -> float:
    """Squared overlap |<a|b>|^2; 1 iff equal up to global phase."""
    if a.dims != b.dims:
        raise ValueError(f"cannot compare states over dims {a.dims} and {b.dims}")
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)


def _bipartition_matrix(state: StateVector, left: Iterable[int]) -> np.ndarray:
    left = sorted(set(int(i) for i in left))
    n = len(state.dims)
    if any(i < 0 or i >= n for i in left):
        raise ValueError(f"bipartition indices out of range: {left}")
    if not left or len(left) == n:
        raise ValueError("bipartition must be a proper nonempty subset of subsystems")
    right = [i for i in range(n) if i not in left]
    psi = state.amps.reshape(state.dims).transpose(left + right)
    d_left = math.prod(state.dims[i] for i in left)
    return psi.reshape(d_left, -1)


def schmidt_coefficients(state: StateVector, left: Iterable[int]) -> np.ndarray:
    """Singular values of the bipartition matrix, descending."""
    return np.linalg.svd(_bipartition_matrix(state, left), compute_uv=False)


def schmidt_rank(state: StateVector, left: Iterable[int], tol: float = FIDELITY_TOL) -> int:
    """Number of Schmidt coefficients above ``tol`` across the bipartition."""
    return int(np.sum(schmidt_coefficients(state, left) > tol))
