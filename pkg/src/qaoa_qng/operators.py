"""
Hermitian Pauli-sum operators.

A Pauli string is written with one character per qubit and character ``k``
acts on qubit ``k`` (so ``"ZII"`` is ``Z`` on qubit 0). Strings are applied
without building matrices: a string ``P`` maps basis index ``i`` to
``i ^ x_mask`` with phase ``i^{n_Y} (-1)^{popcount(i & z_mask)}``, where
``x_mask`` marks X/Y positions and ``z_mask`` marks Z/Y positions.
"""

from functools import lru_cache
from typing import Iterable, List, Tuple

import numpy as np
import scipy.sparse

from qaoa_qng.util import check_n_qubits

PAULI_CHARS = frozenset("IXYZ")


@lru_cache(maxsize=32)
def basis_indices(n_qubits: int) -> np.ndarray:
    indices = np.arange(2**n_qubits, dtype=np.int64)
    indices.setflags(write=False)
    return indices


def _parity(indices: np.ndarray, mask: int) -> np.ndarray:
    parity = np.zeros(indices.shape, dtype=np.int64)
    q = 0
    while mask >> q:
        if (mask >> q) & 1:
            parity ^= (indices >> q) & 1
        q += 1
    return parity


class PauliTerm:
    """Single weighted Pauli string with precomputed flip mask and phases."""

    __slots__ = ("coefficient", "string", "x_mask", "phases")

    def __init__(self, coefficient: float, string: str):
        self.coefficient = coefficient
        self.string = string
        x_mask = z_mask = 0
        n_y = 0
        for q, char in enumerate(string):
            if char in "XY":
                x_mask |= 1 << q
            if char in "ZY":
                z_mask |= 1 << q
            n_y += char == "Y"
        self.x_mask = x_mask
        parity = _parity(basis_indices(len(string)), z_mask)
        self.phases = (1j**n_y) * (1.0 - 2.0 * parity)

    @property
    def is_diagonal(self) -> bool:
        return self.x_mask == 0


class HamiltonianOperator:
    """Real-weighted sum of Pauli strings on ``n_qubits`` qubits.

    Parameters
    ----------
    n_qubits : int
        Register size; every string must have this length.
    terms : iterable of (float, str)
        ``(coefficient, pauli_string)`` pairs. Repeated strings are kept as
        separate terms.

    Examples
    --------
    >>> from qaoa_qng.operators import HamiltonianOperator
    >>> h = HamiltonianOperator(2, [(-1.0, "ZZ"), (-0.5, "XI")])
    >>> len(h)
    2
    >>> h.terms[0]
    (-1.0, 'ZZ')
    """

    def __init__(self, n_qubits: int, terms: Iterable[Tuple[float, str]]):
        self.n_qubits = check_n_qubits(n_qubits)
        self._terms: List[PauliTerm] = []
        for coefficient, string in terms:
            if isinstance(coefficient, complex) or np.iscomplexobj(coefficient):
                raise TypeError("Pauli-sum coefficients must be real")
            string = str(string).upper()
            if len(string) != self.n_qubits:
                raise ValueError(
                    f"Pauli string '{string}' does not have length {self.n_qubits}"
                )
            if not set(string) <= PAULI_CHARS:
                raise ValueError(f"Pauli string '{string}' has characters outside IXYZ")
            self._terms.append(PauliTerm(float(coefficient), string))

    @property
    def terms(self) -> List[Tuple[float, str]]:
        return [(t.coefficient, t.string) for t in self._terms]

    def __len__(self):
        return len(self._terms)

    def __repr__(self):
        return f"HamiltonianOperator(n_qubits={self.n_qubits}, terms={len(self)})"

    def __add__(self, other: "HamiltonianOperator") -> "HamiltonianOperator":
        if not isinstance(other, HamiltonianOperator):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot add operators on different register sizes")
        return HamiltonianOperator(self.n_qubits, self.terms + other.terms)

    def __mul__(self, scalar: float) -> "HamiltonianOperator":
        if isinstance(scalar, complex):
            return NotImplemented
        return HamiltonianOperator(
            self.n_qubits, [(scalar * c, s) for c, s in self.terms]
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @property
    def is_diagonal(self) -> bool:
        return all(t.is_diagonal for t in self._terms)

    def diagonal(self) -> np.ndarray:
        """Diagonal of the operator in the computational basis."""
        out = np.zeros(2**self.n_qubits)
        for term in self._terms:
            if term.is_diagonal:
                out += term.coefficient * term.phases.real
        return out

    def apply(self, array: np.ndarray) -> np.ndarray:
        """Return ``H @ array`` for a vector or a matrix acted on by rows."""
        array = np.asarray(array)
        if array.shape[0] != 2**self.n_qubits:
            raise ValueError("array does not match the operator dimension")
        idx = basis_indices(self.n_qubits)
        out = np.zeros(array.shape, dtype=complex)
        for term in self._terms:
            phases = term.phases if array.ndim == 1 else term.phases[:, None]
            out[idx ^ term.x_mask] += term.coefficient * phases * array
        return out

    def trace_product(self, matrix: np.ndarray) -> complex:
        """Return ``Tr(H M)`` for any square :matrix."""
        idx = basis_indices(self.n_qubits)
        total = 0.0j
        for term in self._terms:
            total += term.coefficient * np.sum(matrix[idx, idx ^ term.x_mask] * term.phases)
        return complex(total)

    def square(self) -> "SquaredOperator":
        """``H^2`` as a callable operator (not expanded into Pauli strings)."""
        return SquaredOperator(self)

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        """Sparse ``2^N x 2^N`` matrix of the operator."""
        dim = 2**self.n_qubits
        idx = basis_indices(self.n_qubits)
        rows, cols, data = [], [], []
        for term in self._terms:
            rows.append(idx ^ term.x_mask)
            cols.append(idx)
            data.append(term.coefficient * term.phases)
        matrix = scipy.sparse.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        )
        return matrix.tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


class SquaredOperator:
    """``H^2`` evaluated as two applications of ``H``."""

    def __init__(self, base: HamiltonianOperator):
        self.base = base
        self.n_qubits = base.n_qubits

    def apply(self, array):
        return self.base.apply(self.base.apply(array))

    def trace_product(self, matrix) -> complex:
        return complex(np.trace(self.base.apply(self.base.apply(matrix))))
