"""
Layered QAOA ansatz

    |psi(theta)> = U_m(beta_P) U_zz(gamma_P) ... U_m(beta_1) U_zz(gamma_1) |+>^N

with ``U_zz(g) = exp(-i g H_zz)`` and ``U_m(b) = exp(-i b H_m)``. Parameters
are stored interleaved as ``theta = (gamma_1, beta_1, ..., gamma_P, beta_P)``.

The gate view decomposes each layer into ``N`` two-qubit ``ZZ(2 gamma)`` gates
and ``N`` single-qubit ``Rx(2 beta)`` gates, which is what the gate-noise
simulator executes.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from qaoa_qng import states
from qaoa_qng.operators import HamiltonianOperator
from qaoa_qng.states import DensityMatrix, State, StateVector
from qaoa_qng.tfim import TfimSpec, bonds, build_hc, build_hmix, build_hzz
from qaoa_qng.util import check_n_qubits

GEN_ZZ = "zz"
GEN_MIX = "mix"


@dataclass(frozen=True, eq=False)
class QaoaParams:
    """Interleaved angle vector of a depth-P ansatz.

    Examples
    --------
    >>> from qaoa_qng.ansatz import QaoaParams
    >>> params = QaoaParams.from_angles([0.1, 0.2], [0.3, 0.4])
    >>> params.depth, params.theta.tolist()
    (2, [0.1, 0.3, 0.2, 0.4])
    """

    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if theta.size < 2 or theta.size % 2:
            raise ValueError(
                f"theta must have even length 2P with P >= 1, got length {theta.size}"
            )
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta has non-finite entries")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_angles(cls, gammas: Sequence[float], betas: Sequence[float]) -> "QaoaParams":
        if len(gammas) != len(betas):
            raise ValueError("gammas and betas must have the same length")
        theta = np.empty(2 * len(gammas))
        theta[0::2] = gammas
        theta[1::2] = betas
        return cls(theta)

    @classmethod
    def zeros(cls, depth: int) -> "QaoaParams":
        return cls(np.zeros(2 * depth))

    @property
    def depth(self) -> int:
        return self.theta.size // 2

    @property
    def gammas(self) -> np.ndarray:
        return self.theta[0::2]

    @property
    def betas(self) -> np.ndarray:
        return self.theta[1::2]

    @property
    def generators(self) -> Tuple[str, ...]:
        return generator_tags(self.depth)

    def __len__(self):
        return self.theta.size

    def __repr__(self):
        return f"QaoaParams(depth={self.depth}, theta={self.theta.tolist()})"


def as_params(theta) -> QaoaParams:
    return theta if isinstance(theta, QaoaParams) else QaoaParams(theta)


def generator_tags(depth: int) -> Tuple[str, ...]:
    return (GEN_ZZ, GEN_MIX) * depth


@dataclass
class AnsatzTrace:
    """States after each parameterized evolution.

    ``states[a]`` is the state after the first ``a`` evolutions, so
    ``states[0]`` is the initial state and ``states[-1]`` the trial state.
    """

    params: QaoaParams
    states: List[State]
    generators: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.generators:
            self.generators = self.params.generators
        if len(self.states) != len(self.params) + 1:
            raise ValueError(
                f"trace holds {len(self.states)} states, expected {len(self.params) + 1}"
            )

    @property
    def n_qubits(self) -> int:
        return self.states[0].n_qubits

    @property
    def is_pure(self) -> bool:
        return all(s.is_pure for s in self.states)

    @property
    def final(self) -> State:
        return self.states[-1]


@lru_cache(maxsize=32)
def zz_diagonal(n_qubits: int) -> np.ndarray:
    """Eigenvalues ``z(x)`` of ``H_zz`` on each computational basis state."""
    diag = build_hzz(n_qubits).diagonal()
    diag.setflags(write=False)
    return diag


@lru_cache(maxsize=32)
def generator_operator(tag: str, n_qubits: int) -> HamiltonianOperator:
    if tag == GEN_ZZ:
        return build_hzz(n_qubits)
    if tag == GEN_MIX:
        return build_hmix(n_qubits)
    raise ValueError(f"unknown generator '{tag}'")


@lru_cache(maxsize=32)
def cost_operator(spec: TfimSpec) -> HamiltonianOperator:
    return build_hc(spec)


def prepare_plus(n_qubits: int) -> StateVector:
    """Uniform superposition ``|+>^N``.

    Examples
    --------
    >>> from qaoa_qng.ansatz import prepare_plus
    >>> prepare_plus(2).amplitudes.real.tolist()
    [0.5, 0.5, 0.5, 0.5]
    """
    n_qubits = check_n_qubits(n_qubits)
    dim = 2**n_qubits
    return StateVector._wrap(np.full(dim, dim**-0.5, dtype=complex), n_qubits)


def rx_matrix(beta: float) -> np.ndarray:
    """``exp(-i beta X)``."""
    c, s = np.cos(beta), np.sin(beta)
    return np.array([[c, -1j * s], [-1j * s, c]])


def apply_uzz(state: State, gamma: float) -> State:
    """Apply ``exp(-i gamma H_zz)`` as a diagonal phase."""
    phases = np.exp(-1j * gamma * zz_diagonal(state.n_qubits))
    return states.apply_diagonal(state, phases)


def apply_umix(state: State, beta: float) -> State:
    """Apply ``exp(-i beta H_m)`` as one ``exp(-i beta X)`` per qubit."""
    return _apply_every_qubit(state, rx_matrix(beta))


def _apply_every_qubit(state: State, u: np.ndarray) -> State:
    n = state.n_qubits
    if state.is_pure:
        amps = state.amplitudes
        for q in range(n):
            amps = states.apply_to_vector(amps, u, (q,), n)
        return StateVector._wrap(amps, n)
    matrix = state.matrix
    for q in range(n):
        matrix = states.conjugate(matrix, u, (q,), n)
    return DensityMatrix._wrap(matrix, n)


def apply_generator(state: State, tag: str, angle: float) -> State:
    """Apply ``exp(-i angle H)`` for the generator named by :tag."""
    if tag == GEN_ZZ:
        return apply_uzz(state, angle)
    if tag == GEN_MIX:
        return apply_umix(state, angle)
    raise ValueError(f"unknown generator '{tag}'")


def conjugate_generator(matrix: np.ndarray, tag: str, angle: float, n_qubits: int) -> np.ndarray:
    """Array kernel: ``U M U^dagger`` with ``U = exp(-i angle H)`` for any
    square :matrix (not necessarily a state)."""
    if tag == GEN_ZZ:
        phases = np.exp(-1j * angle * zz_diagonal(n_qubits))
        return phases[:, None] * matrix * phases.conj()[None, :]
    u = rx_matrix(angle)
    for q in range(n_qubits):
        matrix = states.conjugate(matrix, u, (q,), n_qubits)
    return matrix


def evolve(
    params,
    n_qubits: int,
    initial: Optional[State] = None,
    keep_trace: bool = False,
) -> Tuple[State, Optional[AnsatzTrace]]:
    """Run the ansatz on :initial (default ``|+>^N``).

    Returns the final state and, when :keep_trace is set, the
    :class:`AnsatzTrace` with all ``2P + 1`` intermediate states.
    """
    params = as_params(params)
    state = prepare_plus(n_qubits) if initial is None else initial
    if state.n_qubits != n_qubits:
        raise ValueError(
            f"dimension mismatch: initial state on {state.n_qubits} qubits, expected {n_qubits}"
        )
    history = [state] if keep_trace else None
    for tag, angle in zip(params.generators, params.theta):
        state = apply_generator(state, tag, angle)
        if keep_trace:
            history.append(state)
    trace = AnsatzTrace(params, history) if keep_trace else None
    return state, trace


def energy(params, spec: TfimSpec, initial: Optional[State] = None) -> float:
    """Cost ``<psi(theta)|H_c|psi(theta)>`` (or ``Tr(rho H_c)`` for mixed
    :initial).

    Examples
    --------
    >>> from qaoa_qng.ansatz import QaoaParams, energy
    >>> from qaoa_qng.tfim import TfimSpec
    >>> round(energy(QaoaParams.zeros(1), TfimSpec(4)), 12)
    -2.0
    """
    final, _ = evolve(params, spec.n_qubits, initial)
    return states.expectation(final, cost_operator(spec))


def accuracy(e_c: float, e_0: float) -> float:
    """Relative energy error ``(e_c - e_0) / |e_0|``.

    Examples
    --------
    >>> from qaoa_qng.ansatz import accuracy
    >>> round(accuracy(-0.9, -1.0), 12)
    0.1
    """
    if e_0 == 0:
        raise ValueError("accuracy is undefined for a zero reference energy")
    return float((e_c - e_0) / abs(e_0))


# -- gate view


class Gate(NamedTuple):
    kind: str
    qubits: Tuple[int, ...]
    angle: float
    slot: int


def zz_gate(angle: float) -> np.ndarray:
    """Two-qubit ``exp(-i (angle/2) Z Z)``."""
    minus, plus = np.exp(-0.5j * angle), np.exp(0.5j * angle)
    return np.diag([minus, plus, plus, minus])


def rx_gate(angle: float) -> np.ndarray:
    """Single-qubit ``exp(-i (angle/2) X)``."""
    return rx_matrix(0.5 * angle)


def gate_angles(params) -> List[Tuple[float, float]]:
    """``(2 gamma_p, 2 beta_p)`` gate angles per layer."""
    params = as_params(params)
    return [(2.0 * g, 2.0 * b) for g, b in zip(params.gammas, params.betas)]


def circuit_gates(params, n_qubits: int) -> Iterator[Gate]:
    """Gate sequence of the decomposed circuit.

    ``slot`` is the 1-based parameter index the gate belongs to; each slot
    is completed before the next one starts.
    """
    params = as_params(params)
    for layer, (zz_angle, rx_angle) in enumerate(gate_angles(params)):
        for pair in bonds(n_qubits):
            yield Gate("zz", pair, zz_angle, 2 * layer + 1)
        for q in range(n_qubits):
            yield Gate("rx", (q,), rx_angle, 2 * layer + 2)


def gate_matrix(gate: Gate) -> np.ndarray:
    return zz_gate(gate.angle) if gate.kind == "zz" else rx_gate(gate.angle)


def evolve_gates(params, n_qubits: int, initial: Optional[State] = None) -> State:
    """Run the gate-decomposed circuit; equal to :func:`evolve` up to
    rounding."""
    state = prepare_plus(n_qubits) if initial is None else initial
    for gate in circuit_gates(params, n_qubits):
        state = states.apply_unitary(state, gate_matrix(gate), gate.qubits)
    return state
