"""
Pure and mixed N-qubit states and the kernels that act on them.

Qubit 0 is the least-significant bit of a computational-basis index, so basis
state ``|b_{N-1} ... b_1 b_0>`` has index ``sum(b_q << q)``. A k-qubit matrix
applied to ``targets=(t_0, ..., t_{k-1})`` treats ``t_0`` as the most
significant bit of its own row index.

Gates never build the full ``2^N x 2^N`` operator: the state is viewed as a
rank-N tensor of 2-dimensional axes and the gate is contracted along the
target axes only. :func:`dense_operator` builds the full matrix and is meant
as an oracle for small registers.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from qaoa_qng.util import (
    MAX_DENSITY_QUBITS,
    MAX_STATE_QUBITS,
    check_n_qubits,
    check_targets,
    validation_enabled,
)

STATE_ATOL = 1e-10
PSD_ATOL = 1e-9


def _n_qubits_from_dim(dim: int, high: int) -> int:
    if dim < 2 or dim & (dim - 1):
        raise ValueError(f"state dimension {dim} is not a power of two")
    return check_n_qubits(dim.bit_length() - 1, high=high)


class StateVector:
    """Normalized pure state of ``n_qubits`` qubits.

    Parameters
    ----------
    amplitudes : array_like
        Complex amplitudes of length ``2**n_qubits``.
    normalize : bool, optional
        Rescale the amplitudes to unit norm instead of rejecting
        unnormalized input, defaults to False.
    """

    __slots__ = ("amplitudes", "n_qubits")

    def __init__(self, amplitudes, *, normalize: bool = False):
        amplitudes = np.array(amplitudes, dtype=complex).reshape(-1)
        n_qubits = _n_qubits_from_dim(amplitudes.shape[0], MAX_STATE_QUBITS)
        norm = np.linalg.norm(amplitudes)
        if normalize:
            if norm == 0.0:
                raise ValueError("cannot normalize the zero vector")
            amplitudes = amplitudes / norm
        elif validation_enabled() and abs(norm - 1.0) > STATE_ATOL:
            raise ValueError(f"state is not normalized (norm {float(norm)!r})")
        self.amplitudes = amplitudes
        self.n_qubits = n_qubits

    @classmethod
    def _wrap(cls, amplitudes: np.ndarray, n_qubits: int) -> "StateVector":
        state = object.__new__(cls)
        state.amplitudes = amplitudes
        state.n_qubits = n_qubits
        return state

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> "StateVector":
        """Computational basis state ``|index>``."""
        n_qubits = check_n_qubits(n_qubits)
        if not 0 <= index < 2**n_qubits:
            raise ValueError(f"basis index {index} out of range")
        amplitudes = np.zeros(2**n_qubits, dtype=complex)
        amplitudes[index] = 1.0
        return cls._wrap(amplitudes, n_qubits)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def is_pure(self) -> bool:
        return True

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        """Computational-basis outcome probabilities."""
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "StateVector") -> complex:
        """Return ``<self|other>``."""
        _check_same_size(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix.from_state(self)

    def copy(self) -> "StateVector":
        return StateVector._wrap(self.amplitudes.copy(), self.n_qubits)

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


class DensityMatrix:
    """Mixed state of at most 10 qubits.

    Shape, Hermiticity and unit trace are checked on construction while
    validation is enabled (see :func:`qaoa_qng.set_validation`). Positive
    semidefiniteness is only checked by :meth:`validate`, since it needs an
    eigendecomposition.
    """

    __slots__ = ("matrix", "n_qubits")

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"density matrix must be square, got {matrix.shape}")
        n_qubits = _n_qubits_from_dim(matrix.shape[0], MAX_DENSITY_QUBITS)
        if validation_enabled():
            herm = np.max(np.abs(matrix - matrix.conj().T))
            if herm > STATE_ATOL:
                raise ValueError(f"density matrix is not Hermitian ({herm:.3g})")
            trace = np.trace(matrix).real
            if abs(trace - 1.0) > STATE_ATOL:
                raise ValueError(f"density matrix trace is {float(trace)!r}, expected 1")
        self.matrix = matrix
        self.n_qubits = n_qubits

    @classmethod
    def _wrap(cls, matrix: np.ndarray, n_qubits: int) -> "DensityMatrix":
        rho = object.__new__(cls)
        rho.matrix = matrix
        rho.n_qubits = n_qubits
        return rho

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        """Outer product ``|psi><psi|``."""
        n_qubits = check_n_qubits(state.n_qubits, high=MAX_DENSITY_QUBITS)
        amps = state.amplitudes
        return cls._wrap(np.outer(amps, amps.conj()), n_qubits)

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        n_qubits = check_n_qubits(n_qubits, high=MAX_DENSITY_QUBITS)
        dim = 2**n_qubits
        return cls._wrap(np.eye(dim, dtype=complex) / dim, n_qubits)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_pure(self) -> bool:
        return False

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        """``Tr(rho^2)``."""
        # Tr(rho rho) = sum |rho_ij|^2 for Hermitian rho
        return float(np.sum(np.abs(self.matrix) ** 2))

    def probabilities(self) -> np.ndarray:
        return np.clip(np.diagonal(self.matrix).real, 0.0, None)

    def validate(self, atol: float = PSD_ATOL) -> "DensityMatrix":
        """Check positive semidefiniteness; return self for chaining."""
        smallest = scipy.linalg.eigvalsh(self.matrix)[0]
        if smallest < -atol:
            raise ValueError(
                f"density matrix is not positive semidefinite (eigenvalue {smallest:.3g})"
            )
        return self

    def copy(self) -> "DensityMatrix":
        return DensityMatrix._wrap(self.matrix.copy(), self.n_qubits)

    def __repr__(self):
        return f"DensityMatrix(n_qubits={self.n_qubits})"


State = Union[StateVector, DensityMatrix]


def _check_same_size(a, b):
    if a.n_qubits != b.n_qubits:
        raise ValueError(
            f"dimension mismatch: {a.n_qubits} qubits vs {b.n_qubits} qubits"
        )


def _contract(tensor: np.ndarray, u: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    u_tensor = u.reshape((2,) * (2 * k))
    out = np.tensordot(u_tensor, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def _row_axes(targets: Sequence[int], n_qubits: int) -> list:
    return [n_qubits - 1 - t for t in targets]


def apply_to_vector(amplitudes, u, targets, n_qubits) -> np.ndarray:
    """Array kernel: ``U`` on :targets of a length ``2^N`` amplitude array."""
    tensor = amplitudes.reshape((2,) * n_qubits)
    out = _contract(tensor, u, _row_axes(targets, n_qubits))
    return out.reshape(-1)


def apply_to_rows(matrix, u, targets, n_qubits) -> np.ndarray:
    """Array kernel: left multiplication ``U M`` on :targets."""
    tensor = matrix.reshape((2,) * (2 * n_qubits))
    out = _contract(tensor, u, _row_axes(targets, n_qubits))
    return out.reshape(matrix.shape)


def conjugate(matrix, u, targets, n_qubits) -> np.ndarray:
    """Array kernel: ``U M U^dagger`` on :targets."""
    tensor = matrix.reshape((2,) * (2 * n_qubits))
    rows = _row_axes(targets, n_qubits)
    tensor = _contract(tensor, u, rows)
    tensor = _contract(tensor, u.conj(), [n_qubits + r for r in rows])
    return tensor.reshape(matrix.shape)


def _check_unitary(u: np.ndarray, k: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2**k, 2**k):
        raise ValueError(f"expected a {2**k}x{2**k} matrix for {k} targets, got {u.shape}")
    if validation_enabled():
        err = np.max(np.abs(u.conj().T @ u - np.eye(2**k)))
        if err > STATE_ATOL:
            raise ValueError(f"matrix is not unitary (|U^dag U - I| = {err:.3g})")
    return u


def apply_unitary(state: State, u, targets: Sequence[int]) -> State:
    """Apply a k-qubit unitary to the given target qubits.

    Parameters
    ----------
    state : StateVector or DensityMatrix
        Input state, left unchanged.
    u : array_like
        ``2^k x 2^k`` unitary matrix.
    targets : sequence of int
        Distinct qubit indices; ``targets[0]`` is the most significant bit of
        the row index of :u.

    Returns
    -------
    StateVector or DensityMatrix
        ``U|psi>`` for pure input, ``U rho U^dagger`` for mixed input.

    Examples
    --------
    >>> import numpy as np
    >>> from qaoa_qng.states import StateVector, apply_unitary
    >>> x = np.array([[0, 1], [1, 0]])
    >>> apply_unitary(StateVector.basis(1, 0), x, [0]).probabilities().tolist()
    [0.0, 1.0]
    """
    targets = check_targets(targets, state.n_qubits)
    u = _check_unitary(u, len(targets))
    if state.is_pure:
        out = apply_to_vector(state.amplitudes, u, targets, state.n_qubits)
        return StateVector._wrap(out, state.n_qubits)
    out = conjugate(state.matrix, u, targets, state.n_qubits)
    return DensityMatrix._wrap(out, state.n_qubits)


def apply_diagonal(state: State, phases: np.ndarray) -> State:
    """Apply the diagonal unitary ``diag(phases)`` in O(2^N) per row."""
    phases = np.asarray(phases, dtype=complex)
    if phases.shape != (2**state.n_qubits,):
        raise ValueError("phase vector does not match the state dimension")
    if state.is_pure:
        return StateVector._wrap(state.amplitudes * phases, state.n_qubits)
    out = phases[:, None] * state.matrix * phases.conj()[None, :]
    return DensityMatrix._wrap(out, state.n_qubits)


def apply_kraus(rho: DensityMatrix, operators: Sequence[np.ndarray], targets) -> DensityMatrix:
    """Apply the channel ``rho -> sum_i K_i rho K_i^dagger`` on :targets."""
    if rho.is_pure:
        raise TypeError("Kraus channels act on DensityMatrix, not StateVector")
    targets = check_targets(targets, rho.n_qubits)
    out = np.zeros_like(rho.matrix)
    for op in operators:
        out += conjugate(rho.matrix, np.asarray(op, dtype=complex), targets, rho.n_qubits)
    return DensityMatrix._wrap(out, rho.n_qubits)


def expectation(state: State, h) -> float:
    """Energy ``<psi|H|psi>`` or ``Tr(rho H)`` of a Hermitian Pauli sum.

    Examples
    --------
    >>> from qaoa_qng.states import DensityMatrix, expectation
    >>> from qaoa_qng.operators import HamiltonianOperator
    >>> z = HamiltonianOperator(1, [(1.0, "Z")])
    >>> expectation(DensityMatrix.maximally_mixed(1), z)
    0.0
    """
    if h.n_qubits != state.n_qubits:
        raise ValueError(
            f"dimension mismatch: operator on {h.n_qubits} qubits, "
            f"state on {state.n_qubits}"
        )
    if state.is_pure:
        amps = state.amplitudes
        value = np.vdot(amps, h.apply(amps))
    else:
        value = h.trace_product(state.matrix)
    if abs(value.imag) > STATE_ATOL * max(1.0, abs(value.real)):
        raise ValueError(f"expectation has imaginary residue {value.imag:.3g}")
    return float(value.real)


def _clamp_unit(value: float) -> float:
    if -PSD_ATOL <= value < 0.0:
        return 0.0
    if 1.0 < value <= 1.0 + PSD_ATOL:
        return 1.0
    return value


def fidelity(rho: State, psi_g: StateVector) -> float:
    """Fidelity ``<psi_g|rho|psi_g>`` of a state with a pure target.

    A pure :rho is treated as ``|phi><phi|``, giving ``|<psi_g|phi>|^2``.
    The value is clamped to [0, 1] only within 1e-9 of the bounds.
    """
    _check_same_size(rho, psi_g)
    g = psi_g.amplitudes
    if rho.is_pure:
        value = abs(np.vdot(g, rho.amplitudes)) ** 2
    else:
        value = np.vdot(g, rho.matrix @ g).real
    return _clamp_unit(float(value))


def subspace_fidelity(rho: State, basis: np.ndarray) -> float:
    """Weight of :rho inside a subspace given by orthonormal columns.

    Used when the ground state is degenerate: returns ``sum_k <g_k|rho|g_k>``.
    """
    basis = np.asarray(basis, dtype=complex)
    if basis.ndim == 1:
        basis = basis[:, None]
    if basis.shape[0] != 2**rho.n_qubits:
        raise ValueError("subspace basis does not match the state dimension")
    if rho.is_pure:
        value = np.sum(np.abs(basis.conj().T @ rho.amplitudes) ** 2)
    else:
        value = np.trace(basis.conj().T @ rho.matrix @ basis).real
    return _clamp_unit(float(value))


def eigendecompose(rho: Union[DensityMatrix, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and matching eigenvector columns.

    Examples
    --------
    >>> import numpy as np
    >>> from qaoa_qng.states import DensityMatrix, eigendecompose
    >>> values, vectors = eigendecompose(DensityMatrix(np.diag([0.1, 0.9])))
    >>> np.round(values, 12).tolist()
    [0.9, 0.1]
    """
    matrix = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    herm = np.max(np.abs(matrix - matrix.conj().T))
    if herm > STATE_ATOL:
        raise ValueError(f"matrix is not Hermitian ({herm:.3g})")
    values, vectors = scipy.linalg.eigh(matrix)
    return values[::-1], vectors[:, ::-1]


def dense_operator(u, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    """Full ``2^N x 2^N`` matrix of :u acting on :targets.

    Built entry by entry from the bit convention, independently of the
    tensor kernels; only intended for registers of a few qubits.
    """
    n_qubits = check_n_qubits(n_qubits, high=8)
    targets = check_targets(targets, n_qubits)
    u = np.asarray(u, dtype=complex)
    k = len(targets)
    dim = 2**n_qubits
    target_mask = sum(1 << t for t in targets)
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        sub_col = sum(((col >> t) & 1) << (k - 1 - j) for j, t in enumerate(targets))
        rest = col & ~target_mask
        for sub_row in range(2**k):
            row = rest
            for j, t in enumerate(targets):
                row |= ((sub_row >> (k - 1 - j)) & 1) << t
            out[row, col] = u[sub_row, sub_col]
    return out


def random_state(n_qubits: int, rng: Optional[np.random.Generator] = None) -> StateVector:
    """Haar-random pure state."""
    rng = np.random.default_rng(rng)
    n_qubits = check_n_qubits(n_qubits)
    amps = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return StateVector(amps, normalize=True)


def random_density(n_qubits: int, rank: int = 2, rng=None) -> DensityMatrix:
    """Random mixed state of the given rank."""
    rng = np.random.default_rng(rng)
    n_qubits = check_n_qubits(n_qubits, high=MAX_DENSITY_QUBITS)
    dim = 2**n_qubits
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    matrix = a @ a.conj().T
    matrix = 0.5 * (matrix + matrix.conj().T)
    return DensityMatrix(matrix / np.trace(matrix).real)
