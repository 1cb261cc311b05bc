"""
Quantum Fisher information (QFIM) and Fubini-Study metric of the QAOA
ansatz, plus the pseudo-inverse used by the natural-gradient step.

Pure traces use the generator form

    F_ab = 4 Re[<psi_{a-1}| H_a Pi_ab H_b |psi_{b-1}>
                - <psi_{a-1}|H_a|psi_{a-1}> <psi_{b-1}|H_b|psi_{b-1}>]

with ``Pi_ab = exp(i theta_a H_a) ... exp(i theta_{b-1} H_{b-1})`` for
``a <= b``. Mixed traces use

    F_ab = 4 Re[Tr(H_a Pi_ab H_b rho_{b-1} Pi_ab^dagger)
                - Tr(rho_{a-1} H_a) Tr(rho_{b-1} H_b)]

where ``Pi_ab`` is built from the ideal generators whatever noise produced
the ``rho``. On pure traces the two forms agree, and the mixed diagonal is
``4 [Tr(rho_{a-1} H_a^2) - Tr(rho_{a-1} H_a)^2]``.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.linalg

from qaoa_qng.ansatz import AnsatzTrace, apply_generator, conjugate_generator, generator_operator
from qaoa_qng.states import StateVector
from qaoa_qng.util import IndefiniteMetricWarning

logger = logging.getLogger(__name__)

KIND_FS = "fubini-study"
KIND_QFIM = "qfim"
SYMMETRY_ATOL = 1e-9
INDEFINITE_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class MetricMatrix:
    """Real symmetric ``2P x 2P`` metric, either the Fubini-Study ``g`` or
    the QFIM ``F = 4 g``."""

    entries: np.ndarray
    kind: str = KIND_QFIM

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"metric must be square, got shape {entries.shape}")
        if self.kind not in (KIND_FS, KIND_QFIM):
            raise ValueError(f"unknown metric kind '{self.kind}'")
        asym = np.max(np.abs(entries - entries.T)) if entries.size else 0.0
        if asym > SYMMETRY_ATOL:
            raise ValueError(f"metric is not symmetric ({asym:.3g})")
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def fubini_study(self) -> np.ndarray:
        """Entries of ``g``."""
        return self.entries / 4.0 if self.kind == KIND_QFIM else self.entries

    def qfim(self) -> np.ndarray:
        """Entries of ``F``."""
        return self.entries * 4.0 if self.kind == KIND_FS else self.entries

    def eigenvalues(self) -> np.ndarray:
        return scipy.linalg.eigvalsh(self.entries)


def _check_trace(trace: AnsatzTrace):
    if len(trace.states) != len(trace.params) + 1:
        raise ValueError("trace length does not match the parameter count")


def qfim_pure_full(trace: AnsatzTrace) -> MetricMatrix:
    """Full QFIM of a pure trace.

    Examples
    --------
    >>> import numpy as np
    >>> from qaoa_qng.ansatz import QaoaParams, evolve
    >>> from qaoa_qng.metric import qfim_pure_full
    >>> _, trace = evolve(QaoaParams.zeros(1), 3, keep_trace=True)
    >>> np.allclose(qfim_pure_full(trace).entries, [[12.0, 0.0], [0.0, 0.0]])
    True
    """
    _check_trace(trace)
    if not trace.is_pure:
        raise TypeError("qfim_pure_full needs a trace of StateVector")
    n, size = trace.n_qubits, len(trace.params)
    tags, theta = trace.generators, trace.params.theta
    h_psi = [generator_operator(tags[a], n).apply(trace.states[a].amplitudes) for a in range(size)]
    means = [np.vdot(trace.states[a].amplitudes, h_psi[a]).real for a in range(size)]
    f = np.empty((size, size))
    for b in range(size):
        w = StateVector._wrap(h_psi[b], n)
        f[b, b] = np.vdot(h_psi[b], h_psi[b]).real - means[b] ** 2
        for a in range(b - 1, -1, -1):
            w = apply_generator(w, tags[a], -theta[a])
            f[a, b] = f[b, a] = np.vdot(h_psi[a], w.amplitudes).real - means[a] * means[b]
    return MetricMatrix(4.0 * f, KIND_QFIM)


def qfim_pure_diag(trace: AnsatzTrace) -> MetricMatrix:
    """Diagonal QFIM ``F_aa = 4 Var_{psi_{a-1}}(H_a)`` of a pure trace."""
    _check_trace(trace)
    if not trace.is_pure:
        raise TypeError("qfim_pure_diag needs a trace of StateVector")
    n, size = trace.n_qubits, len(trace.params)
    diag = np.empty(size)
    for a in range(size):
        amps = trace.states[a].amplitudes
        h_psi = generator_operator(trace.generators[a], n).apply(amps)
        diag[a] = np.vdot(h_psi, h_psi).real - np.vdot(amps, h_psi).real ** 2
    return MetricMatrix(np.diag(4.0 * diag), KIND_QFIM)


def _density_matrices(trace: AnsatzTrace):
    return [s.matrix if not s.is_pure else s.to_density().matrix for s in trace.states]


def _warn_if_indefinite(entries: np.ndarray):
    values = scipy.linalg.eigvalsh(entries)
    scale = np.max(np.abs(values)) if values.size else 0.0
    if scale > 0 and values[0] < -INDEFINITE_RTOL * scale:
        logger.debug("mixed metric eigenvalues %s", values)
        warnings.warn(
            f"mixed-state metric is indefinite (min eigenvalue {values[0]:.3g}, "
            f"max |eigenvalue| {scale:.3g})",
            IndefiniteMetricWarning,
            stacklevel=3,
        )


def qfim_mixed_full(trace: AnsatzTrace) -> MetricMatrix:
    """Full QFIM approximation for a trace of density matrices.

    The result can be slightly indefinite under strong noise; this raises
    :class:`~qaoa_qng.util.IndefiniteMetricWarning` and is otherwise
    returned as computed.
    """
    _check_trace(trace)
    n, size = trace.n_qubits, len(trace.params)
    tags, theta = trace.generators, trace.params.theta
    rhos = _density_matrices(trace)
    ops = [generator_operator(tags[a], n) for a in range(size)]
    means = [ops[a].trace_product(rhos[a]).real for a in range(size)]
    f = np.empty((size, size))
    for b in range(size):
        m = ops[b].apply(rhos[b])
        f[b, b] = ops[b].trace_product(m).real - means[b] ** 2
        for a in range(b - 1, -1, -1):
            m = conjugate_generator(m, tags[a], -theta[a], n)
            f[a, b] = f[b, a] = ops[a].trace_product(m).real - means[a] * means[b]
    entries = 4.0 * f
    _warn_if_indefinite(entries)
    return MetricMatrix(entries, KIND_QFIM)


def qfim_mixed_diag(trace: AnsatzTrace) -> MetricMatrix:
    """Diagonal QFIM ``4 [Tr(rho H_a^2) - Tr(rho H_a)^2]`` of a mixed trace."""
    _check_trace(trace)
    n, size = trace.n_qubits, len(trace.params)
    rhos = _density_matrices(trace)
    diag = np.empty(size)
    for a in range(size):
        op = generator_operator(trace.generators[a], n)
        diag[a] = op.square().trace_product(rhos[a]).real - op.trace_product(rhos[a]).real ** 2
    return MetricMatrix(np.diag(4.0 * diag), KIND_QFIM)


def compute_metric(trace: AnsatzTrace, diagonal: bool = False) -> MetricMatrix:
    """Pick the pure or mixed, full or diagonal QFIM for :trace."""
    if trace.is_pure:
        return qfim_pure_diag(trace) if diagonal else qfim_pure_full(trace)
    return qfim_mixed_diag(trace) if diagonal else qfim_mixed_full(trace)


def fubini_study_fd(
    state_fn: Callable[[np.ndarray], StateVector], theta, step: float = 1e-4
) -> MetricMatrix:
    """Finite-difference Fubini-Study metric from state overlaps.

    Uses ``1 - |<psi(theta)|psi(theta + d)>|^2 = d^T g d + O(|d|^3)`` on
    symmetric stencils, in which the odd-order terms cancel.
    """
    theta = np.asarray(theta, dtype=float)
    base = state_fn(theta)
    size = theta.size

    def distance(delta):
        return 1.0 - abs(base.overlap(state_fn(theta + delta))) ** 2

    unit = np.eye(size) * step
    g = np.empty((size, size))
    for i in range(size):
        g[i, i] = (distance(unit[i]) + distance(-unit[i])) / (2.0 * step**2)
        for j in range(i):
            g[i, j] = g[j, i] = (
                distance(unit[i] + unit[j])
                - distance(unit[i] - unit[j])
                - distance(-unit[i] + unit[j])
                + distance(-unit[i] - unit[j])
            ) / (8.0 * step**2)
    return MetricMatrix(g, KIND_FS)


def pseudo_inverse(
    m: Union[MetricMatrix, np.ndarray], rcond: float = 1e-8
) -> Union[MetricMatrix, np.ndarray]:
    """Moore-Penrose pseudo-inverse of a symmetric matrix.

    Eigenvalues with ``|lambda| <= rcond * max|lambda|`` are treated as zero;
    the rest are inverted with their sign kept, so slightly indefinite
    mixed-state metrics are handled too. A :class:`MetricMatrix` input gives a
    :class:`MetricMatrix` of the same kind back.

    Examples
    --------
    >>> import numpy as np
    >>> from qaoa_qng.metric import pseudo_inverse
    >>> np.allclose(pseudo_inverse(np.diag([2.0, 0.0])), [[0.5, 0.0], [0.0, 0.0]])
    True
    """
    entries = m.entries if isinstance(m, MetricMatrix) else np.asarray(m, dtype=float)
    sym = 0.5 * (entries + entries.T)
    values, vectors = scipy.linalg.eigh(sym)
    scale = np.max(np.abs(values)) if values.size else 0.0
    inverse = np.zeros_like(sym)
    if scale > 0:
        keep = np.abs(values) > rcond * scale
        if np.any(values[keep] < -INDEFINITE_RTOL * scale):
            logger.debug("pseudo-inverting an indefinite metric, eigenvalues %s", values)
        vk = vectors[:, keep]
        inverse = (vk / values[keep]) @ vk.T
        inverse = 0.5 * (inverse + inverse.T)
    if isinstance(m, MetricMatrix):
        return MetricMatrix(inverse, m.kind)
    return inverse
