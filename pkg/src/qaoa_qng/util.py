"""
Shared options, warning classes and argument checks.
"""

import numbers
from typing import Sequence

import numpy as np

qaoa_global_options = {"validate": True}

# Statevectors and density matrices have different memory ceilings.
MAX_STATE_QUBITS = 12
MAX_DENSITY_QUBITS = 10


class QaoaQngWarning(UserWarning):
    """Base class for numerical diagnostics raised by qaoa_qng."""


class InfeasibleFitWarning(QaoaQngWarning):
    """The relaxation channel alone is noisier than the reported gate error."""


class IndefiniteMetricWarning(QaoaQngWarning):
    """A mixed-state metric has a significantly negative eigenvalue."""


class ClosedFormMismatchWarning(QaoaQngWarning):
    """The closed-form ground energy disagrees with exact diagonalization."""


def validation_enabled() -> bool:
    return bool(qaoa_global_options["validate"])


def check_n_qubits(n_qubits, *, low: int = 1, high: int = MAX_STATE_QUBITS) -> int:
    """Return :n_qubits as an int, raising if it is not an integer in
    [low, high]."""
    if isinstance(n_qubits, bool) or not isinstance(n_qubits, numbers.Integral):
        raise TypeError(f"n_qubits must be an integer, got {n_qubits!r}")
    n_qubits = int(n_qubits)
    if not low <= n_qubits <= high:
        raise ValueError(f"n_qubits must lie in [{low}, {high}], got {n_qubits}")
    return n_qubits


def check_targets(targets: Sequence[int], n_qubits: int) -> tuple:
    """Validate a list of target qubits against the register size."""
    targets = tuple(int(t) for t in targets)
    if not targets:
        raise ValueError("at least one target qubit is required")
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits in {targets}")
    for t in targets:
        if not 0 <= t < n_qubits:
            raise ValueError(f"target qubit {t} out of range for {n_qubits} qubits")
    return targets


def check_probability(value: float, label: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"'{label}' must be a probability in [0, 1], got {value}")
    return value


def check_non_negative(value: float, label: str) -> float:
    value = float(value)
    if value < 0.0 or np.isnan(value):
        raise ValueError(f"'{label}' must be non-negative, got {value}")
    return value


def check_positive(value: float, label: str) -> float:
    value = float(value)
    if not value > 0.0:
        raise ValueError(f"'{label}' must be positive, got {value}")
    return value


def check_distribution(probabilities, n_qubits: int = None, atol: float = 1e-10):
    """Return :probabilities as a float array after checking it is a
    normalized distribution over 2**n basis states."""
    probabilities = np.asarray(probabilities, dtype=float)
    if probabilities.ndim != 1:
        raise ValueError("distribution must be one-dimensional")
    size = probabilities.shape[0]
    if size < 2 or size & (size - 1):
        raise ValueError(f"distribution length {size} is not a power of two")
    if n_qubits is not None and size != 2**n_qubits:
        raise ValueError(
            f"distribution length {size} does not match {n_qubits} qubits"
        )
    if np.any(probabilities < -atol):
        raise ValueError("distribution has negative entries")
    total = probabilities.sum()
    if abs(total - 1.0) > atol:
        raise ValueError(f"distribution is not normalized (sums to {float(total)!r})")
    return probabilities
