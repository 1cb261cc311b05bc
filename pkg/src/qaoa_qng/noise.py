"""
Calibration-driven gate noise for the decomposed QAOA circuit.

Each gate is followed by a depolarizing error on its qubits and then by
thermal relaxation of each participating qubit over the gate duration. The
depolarizing strength is fitted so the composite channel reproduces the
reported gate error as an average gate infidelity. Readout errors are
per-qubit classical confusion matrices.

Depolarizing convention: ``rho -> (1 - p) rho + p I/d``. Relaxation assumes
zero excited-state population at equilibrium, so ``|1>`` decays to ``|0>``.

Times are in microseconds except calibration gate durations, which are given
in nanoseconds as in the calibration file.
"""

import itertools
import json
import logging
import math
import string
import warnings
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from qaoa_qng import states
from qaoa_qng.ansatz import (
    AnsatzTrace,
    as_params,
    circuit_gates,
    gate_matrix,
    prepare_plus,
    zz_diagonal,
)
from qaoa_qng.states import DensityMatrix
from qaoa_qng.tfim import TfimSpec
from qaoa_qng.util import (
    MAX_DENSITY_QUBITS,
    InfeasibleFitWarning,
    check_distribution,
    check_n_qubits,
    check_non_negative,
    check_probability,
)

logger = logging.getLogger(__name__)

GATE_KINDS = ("rx", "zz")
GATE_WIDTH = {"rx": 1, "zz": 2}
KRAUS_ATOL = 1e-9
CHOI_ATOL = 1e-8
REFERENCE_CALIBRATION = "reference_calibration.json"

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


# -- calibration data


@dataclass(frozen=True)
class QubitCalibration:
    """Coherence times (µs) and readout flip probabilities of one qubit."""

    t1_us: float
    t2_us: float
    readout_p10: float = 0.0
    readout_p01: float = 0.0

    def __post_init__(self):
        for name in ("t1_us", "t2_us", "readout_p10", "readout_p01"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.t1_us > 0:
            raise ValueError(f"T1 must be positive, got {self.t1_us}")
        if not 0 < self.t2_us <= 2 * self.t1_us:
            raise ValueError(
                f"unphysical coherence times: need 0 < T2 <= 2 T1, "
                f"got T1={self.t1_us}, T2={self.t2_us}"
            )
        check_probability(self.readout_p10, "readout_p10")
        check_probability(self.readout_p01, "readout_p01")


@dataclass(frozen=True)
class GateCalibration:
    """Reported error probability and duration (ns) of one gate."""

    kind: str
    qubits: Tuple[int, ...]
    error: float
    duration_ns: float

    def __post_init__(self):
        object.__setattr__(self, "error", float(self.error))
        object.__setattr__(self, "duration_ns", float(self.duration_ns))
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind '{self.kind}', expected one of {GATE_KINDS}")
        check_probability(self.error, f"{self.kind} gate error")
        check_non_negative(self.duration_ns, f"{self.kind} gate duration")

    @property
    def duration_us(self) -> float:
        return self.duration_ns * 1e-3


@dataclass(frozen=True)
class CalibrationData:
    """Per-qubit and per-gate calibration with file-level defaults.

    Lookups for qubits or gates without an explicit entry fall back to the
    defaults; a gate kind without an override or a default raises
    ``KeyError``.
    """

    defaults: QubitCalibration
    qubits: Dict[int, QubitCalibration] = field(default_factory=dict)
    gate_defaults: Dict[str, GateCalibration] = field(default_factory=dict)
    gates: Dict[Tuple[str, Tuple[int, ...]], GateCalibration] = field(default_factory=dict)
    source: str = ""

    @classmethod
    def ideal(cls) -> "CalibrationData":
        """Noise-free limit: infinite T1/T2, zero gate and readout errors."""
        qubit = QubitCalibration(t1_us=math.inf, t2_us=math.inf)
        gate_defaults = {
            kind: GateCalibration(kind, (), 0.0, 0.0) for kind in GATE_KINDS
        }
        return cls(defaults=qubit, gate_defaults=gate_defaults, source="ideal")

    def qubit(self, q: int) -> QubitCalibration:
        return self.qubits.get(q, self.defaults)

    def gate(self, kind: str, qubits: Sequence[int]) -> GateCalibration:
        qubits = tuple(qubits)
        for key in ((kind, qubits), (kind, tuple(sorted(qubits)))):
            if key in self.gates:
                return self.gates[key]
        if kind in self.gate_defaults:
            return replace(self.gate_defaults[kind], qubits=qubits)
        raise KeyError(f"no calibration for {kind} gate on qubits {qubits} and no default")

    def readout_error(self, n_qubits: int) -> "ReadoutError":
        records = [self.qubit(q) for q in range(n_qubits)]
        return ReadoutError.from_probabilities(
            [r.readout_p10 for r in records], [r.readout_p01 for r in records]
        )

    def to_dict(self) -> dict:
        return {
            "name": self.source,
            "defaults": {
                **asdict(self.defaults),
                "gates": {
                    k: {"error": g.error, "duration_ns": g.duration_ns}
                    for k, g in self.gate_defaults.items()
                },
            },
            "qubits": [{"qubit": q, **asdict(rec)} for q, rec in sorted(self.qubits.items())],
            "gates": [
                {"kind": g.kind, "qubits": list(g.qubits), "error": g.error, "duration_ns": g.duration_ns}
                for g in self.gates.values()
            ],
        }


_QUBIT_KEYS = {"t1_us", "t2_us", "readout_p10", "readout_p01"}
_TOP_KEYS = {"name", "defaults", "qubits", "gates"}


def _check_keys(record: dict, allowed: set, where: str):
    if not isinstance(record, dict):
        raise ValueError(f"{where} must be an object, got {type(record).__name__}")
    extra = set(record) - allowed
    if extra:
        raise ValueError(f"unexpected keys {sorted(extra)} in {where}")


def calibration_from_dict(data: dict, source: str = "") -> CalibrationData:
    """Build :class:`CalibrationData` from the JSON schema (see
    :func:`load_calibration`)."""
    _check_keys(data, _TOP_KEYS, "calibration file")
    if "defaults" not in data:
        raise ValueError("calibration file is missing the 'defaults' section")
    raw_defaults = dict(data["defaults"])
    _check_keys(raw_defaults, _QUBIT_KEYS | {"gates"}, "'defaults'")
    raw_gate_defaults = raw_defaults.pop("gates", {})
    missing = {"t1_us", "t2_us"} - set(raw_defaults)
    if missing:
        raise ValueError(f"'defaults' is missing {sorted(missing)}")
    defaults = QubitCalibration(**raw_defaults)

    gate_defaults = {}
    for kind, record in raw_gate_defaults.items():
        _check_keys(record, {"error", "duration_ns"}, f"default gate '{kind}'")
        gate_defaults[kind] = GateCalibration(kind, (), record["error"], record["duration_ns"])

    qubits = {}
    for position, record in enumerate(data.get("qubits", [])):
        _check_keys(record, _QUBIT_KEYS | {"qubit"}, f"qubit entry {position}")
        record = dict(record)
        q = int(record.pop("qubit", position))
        qubits[q] = replace(defaults, **record)

    gates = {}
    for position, record in enumerate(data.get("gates", [])):
        _check_keys(record, {"kind", "qubits", "error", "duration_ns"}, f"gate entry {position}")
        try:
            gate = GateCalibration(
                record["kind"], tuple(int(q) for q in record["qubits"]),
                record["error"], record["duration_ns"],
            )
        except KeyError as exc:
            raise ValueError(f"gate entry {position} is missing {exc}") from None
        if len(gate.qubits) != GATE_WIDTH[gate.kind]:
            raise ValueError(f"gate entry {position}: {gate.kind} acts on {GATE_WIDTH[gate.kind]} qubit(s)")
        gates[(gate.kind, gate.qubits)] = gate

    return CalibrationData(
        defaults=defaults,
        qubits=qubits,
        gate_defaults=gate_defaults,
        gates=gates,
        source=str(data.get("name", source)),
    )


def load_calibration(path: Union[str, Path, None] = None) -> CalibrationData:
    """Read a calibration JSON file.

    Schema::

        {
          "name": "...",                        # optional
          "defaults": {"t1_us": ..., "t2_us": ..., "readout_p10": ...,
                       "readout_p01": ...,
                       "gates": {"rx": {"error": ..., "duration_ns": ...},
                                 "zz": {...}}},
          "qubits": [{"qubit": 0, "t1_us": ..., ...}, ...],
          "gates": [{"kind": "zz", "qubits": [0, 1], "error": ...,
                     "duration_ns": ...}, ...]
        }

    Qubit entries may be partial; missing fields come from ``defaults``.

    Parameters
    ----------
    path : str or Path, optional
        Calibration file; the bundled reference calibration when omitted.

    Examples
    --------
    >>> from qaoa_qng.noise import load_calibration
    >>> cal = load_calibration()
    >>> cal.qubit(0).t1_us, cal.gate("zz", (0, 1)).duration_ns
    (300.0, 500.0)
    """
    if path is None:
        text = resources.files("qaoa_qng").joinpath("data", REFERENCE_CALIBRATION).read_text()
        source = REFERENCE_CALIBRATION
    else:
        text = Path(path).read_text()
        source = str(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"calibration file {source} is not valid JSON: {exc}") from exc
    return calibration_from_dict(data, source=source)


# -- Kraus channels


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Completely positive map ``rho -> sum_i K_i rho K_i^dagger``."""

    operators: Tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        if dim < 2 or dim & (dim - 1) or any(k.shape != (dim, dim) for k in ops):
            raise ValueError("Kraus operators must be square with a common power-of-two size")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def completeness_error(self) -> float:
        total = sum(k.conj().T @ k for k in self.operators)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def is_trace_preserving(self, atol: float = KRAUS_ATOL) -> bool:
        return self.completeness_error() <= atol

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_i vec(K_i) vec(K_i)^dagger`` (column stacking)."""
        vecs = [k.reshape(-1, order="F") for k in self.operators]
        return sum(np.outer(v, v.conj()) for v in vecs)

    def is_completely_positive(self, atol: float = CHOI_ATOL) -> bool:
        return scipy.linalg.eigvalsh(self.choi())[0] >= -atol

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """Channel applying ``self`` first and ``other`` second."""
        if other.dim != self.dim:
            raise ValueError("cannot compose channels of different dimension")
        return KrausChannel(tuple(b @ a for a in self.operators for b in other.operators))

    def tensor(self, other: "KrausChannel") -> "KrausChannel":
        """``self`` on the first (most significant) targets, ``other`` on the
        rest."""
        return KrausChannel(tuple(np.kron(a, b) for a in self.operators for b in other.operators))

    def process_fidelity(self) -> float:
        """Process fidelity with the identity, ``sum_i |Tr K_i|^2 / d^2``."""
        return float(sum(abs(np.trace(k)) ** 2 for k in self.operators) / self.dim**2)

    def average_gate_fidelity(self) -> float:
        d = self.dim
        return (d * self.process_fidelity() + 1.0) / (d + 1.0)

    def average_gate_infidelity(self) -> float:
        return 1.0 - self.average_gate_fidelity()

    def apply(self, rho: DensityMatrix, targets: Sequence[int]) -> DensityMatrix:
        if len(targets) != self.n_qubits:
            raise ValueError(f"channel acts on {self.n_qubits} qubit(s), got targets {targets}")
        return states.apply_kraus(rho, self.operators, targets)


def thermal_relaxation_channel(t1: float, t2: float, duration: float) -> KrausChannel:
    """Amplitude damping plus pure dephasing over :duration.

    The damping probability is ``1 - exp(-t/T1)``; the dephasing part is
    chosen so coherences decay by exactly ``exp(-t/T2)``, which requires
    ``T2 <= 2 T1``. Infinite times are allowed.

    Examples
    --------
    >>> from qaoa_qng.noise import thermal_relaxation_channel
    >>> len(thermal_relaxation_channel(100.0, 80.0, 0.0).operators)
    1
    """
    if not t1 > 0:
        raise ValueError(f"T1 must be positive, got {t1}")
    if not 0 < t2 <= 2 * t1:
        raise ValueError(f"unphysical coherence times: need 0 < T2 <= 2 T1, got T1={t1}, T2={t2}")
    check_non_negative(duration, "duration")
    gamma, decay = relaxation_parameters(t1, t2, duration)
    return _relaxation_from_parameters(gamma, decay)


def relaxation_parameters(t1: float, t2: float, duration: float) -> Tuple[float, float]:
    """``(gamma, coherence decay)`` of thermal relaxation over :duration."""
    gamma = -math.expm1(-duration / t1)
    decay = math.exp(-duration / t2)
    return gamma, decay


def depolarizing_channel(p: float, n_qubits: int = 1) -> KrausChannel:
    """Pauli Kraus form of ``rho -> (1 - p) rho + p I/d``.

    Examples
    --------
    >>> from qaoa_qng.noise import depolarizing_channel
    >>> round(depolarizing_channel(0.1).average_gate_fidelity(), 12)
    0.95
    """
    check_probability(p, "depolarizing probability")
    if n_qubits not in (1, 2):
        raise ValueError(f"depolarizing channels are defined on 1 or 2 qubits, got {n_qubits}")
    d2 = 4**n_qubits
    ops = []
    for index, paulis in enumerate(itertools.product(_PAULIS, repeat=n_qubits)):
        op = paulis[0]
        for extra in paulis[1:]:
            op = np.kron(op, extra)
        weight = 1.0 - p + p / d2 if index == 0 else p / d2
        if weight > 0:
            ops.append(math.sqrt(weight) * op)
    return KrausChannel(tuple(ops))


def fit_depolarizing(gate_error: float, relaxation: KrausChannel) -> float:
    """Depolarizing ``p`` so that depolarizing-then-:relaxation has average
    gate infidelity :gate_error.

    The composite process fidelity is linear in ``p``,
    ``F(p) = (1 - p) F_relax + p / d^2``, so the fit is closed form. When
    relaxation alone is already noisier than :gate_error, or no
    better than full depolarization, no non-negative ``p`` exists: ``p`` is
    clamped to 0 and an :class:`~qaoa_qng.util.InfeasibleFitWarning` is
    issued.
    """
    check_probability(gate_error, "gate error")
    d = relaxation.dim
    f_relax = relaxation.process_fidelity()
    f_target = ((1.0 - gate_error) * (d + 1.0) - 1.0) / d
    denom = f_relax - 1.0 / d**2
    if denom <= 0:
        warnings.warn(
            f"relaxation process fidelity {f_relax:.3g} is at or below full depolarization; "
            "using p = 0",
            InfeasibleFitWarning,
            stacklevel=2,
        )
        return 0.0
    p = (f_relax - f_target) / denom
    if p < 0:
        if p < -1e-12:
            logger.debug("infeasible depolarizing fit: p=%g", p)
            warnings.warn(
                f"relaxation infidelity {relaxation.average_gate_infidelity():.3g} exceeds "
                f"the reported gate error {gate_error:.3g}; using p = 0",
                InfeasibleFitWarning,
                stacklevel=2,
            )
        return 0.0
    if p > 1:
        warnings.warn(
            f"gate error {gate_error:.3g} exceeds what full depolarization reaches; using p = 1",
            InfeasibleFitWarning,
            stacklevel=2,
        )
        return 1.0
    return float(p)


# -- fast density-matrix kernels


def _axes(q: int, n: int) -> Tuple[int, int]:
    return n - 1 - q, 2 * n - 1 - q


def depolarize(matrix: np.ndarray, p: float, targets: Sequence[int], n: int) -> np.ndarray:
    """Closed-form depolarizing of :targets:
    ``(1 - p) rho + p (I/d_T (x) Tr_T rho)``."""
    if p == 0.0:
        return matrix
    tensor = matrix.reshape((2,) * (2 * n))
    letters = string.ascii_letters[: 2 * n]
    traced = list(letters)
    target_axes = set()
    for q in targets:
        row, col = _axes(q, n)
        traced[col] = traced[row]
        target_axes.update((row, col))
    kept = "".join(letters[i] for i in range(2 * n) if i not in target_axes)
    reduced = np.einsum("".join(traced) + "->" + kept, tensor)
    half = np.eye(2) / 2.0
    subscripts = [kept] + ["".join(letters[a] for a in _axes(q, n)) for q in targets]
    mixed = np.einsum(",".join(subscripts) + "->" + letters, reduced, *([half] * len(targets)))
    return (1.0 - p) * matrix + p * mixed.reshape(matrix.shape)


def relax(matrix: np.ndarray, gamma: float, decay: float, q: int, n: int) -> np.ndarray:
    """Closed-form thermal relaxation of qubit :q."""
    if gamma == 0.0 and decay == 1.0:
        return matrix
    row, col = _axes(q, n)
    tensor = matrix.reshape((2,) * (2 * n)).copy()

    def block(r, c):
        index = [slice(None)] * (2 * n)
        index[row], index[col] = r, c
        return tuple(index)

    excited = tensor[block(1, 1)].copy()
    tensor[block(0, 0)] += gamma * excited
    tensor[block(1, 1)] *= 1.0 - gamma
    tensor[block(0, 1)] *= decay
    tensor[block(1, 0)] *= decay
    return tensor.reshape(matrix.shape)


# -- noise model


@dataclass(frozen=True)
class GateNoise:
    """Fitted noise attached to one calibrated gate."""

    kind: str
    qubits: Tuple[int, ...]
    depolarizing: float
    relaxation: Tuple[Tuple[float, float], ...]

    @property
    def is_identity(self) -> bool:
        return self.depolarizing == 0.0 and all(g == 0.0 and d == 1.0 for g, d in self.relaxation)

    def channel(self) -> KrausChannel:
        """Kraus form of the composite error (for inspection and tests)."""
        dep = depolarizing_channel(self.depolarizing, len(self.qubits))
        relax_channel = None
        for gamma, decay in self.relaxation:
            ch = _relaxation_from_parameters(gamma, decay)
            relax_channel = ch if relax_channel is None else relax_channel.tensor(ch)
        return dep.then(relax_channel)

    def apply(self, matrix: np.ndarray, n: int) -> np.ndarray:
        matrix = depolarize(matrix, self.depolarizing, self.qubits, n)
        for q, (gamma, decay) in zip(self.qubits, self.relaxation):
            matrix = relax(matrix, gamma, decay, q, n)
        return matrix


def _relaxation_from_parameters(gamma: float, decay: float) -> KrausChannel:
    # dephasing left after the damping contribution exp(-t / 2T1)
    dephase = 1.0 if gamma >= 1.0 else min(1.0, decay / math.sqrt(1.0 - gamma))
    damping = [
        np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]]),
        np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]]),
    ]
    dephasing = [
        math.sqrt((1.0 + dephase) / 2.0) * _PAULIS[0],
        math.sqrt((1.0 - dephase) / 2.0) * _PAULIS[3],
    ]
    ops = (a @ b for a in damping for b in dephasing)
    return KrausChannel(tuple(k for k in ops if np.any(np.abs(k) > 0)))


class NoiseModel:
    """Per-gate fitted noise for an ``n_qubits`` register.

    Gate noise is fitted lazily on first use and cached.
    """

    def __init__(self, calibration: CalibrationData, n_qubits: int):
        self.calibration = calibration
        self.n_qubits = check_n_qubits(n_qubits, high=MAX_DENSITY_QUBITS)
        self._cache: Dict[Tuple[str, Tuple[int, ...]], GateNoise] = {}

    def gate_noise(self, kind: str, qubits: Sequence[int]) -> GateNoise:
        key = (kind, tuple(qubits))
        if key not in self._cache:
            self._cache[key] = self._fit(kind, tuple(qubits))
        return self._cache[key]

    def _fit(self, kind: str, qubits: Tuple[int, ...]) -> GateNoise:
        gate = self.calibration.gate(kind, qubits)
        duration = gate.duration_us
        relaxation = []
        channel = None
        for q in qubits:
            rec = self.calibration.qubit(q)
            relaxation.append(relaxation_parameters(rec.t1_us, rec.t2_us, duration))
            ch = thermal_relaxation_channel(rec.t1_us, rec.t2_us, duration)
            channel = ch if channel is None else channel.tensor(ch)
        p = fit_depolarizing(gate.error, channel)
        logger.debug("fitted %s%s: error=%g p=%g", kind, qubits, gate.error, p)
        return GateNoise(kind, qubits, p, tuple(relaxation))

    @property
    def readout(self) -> "ReadoutError":
        return self.calibration.readout_error(self.n_qubits)


def build_noise_model(calibration: CalibrationData, n_qubits: int) -> NoiseModel:
    return NoiseModel(calibration, n_qubits)


def _as_noise_model(noise, n_qubits: int) -> NoiseModel:
    if isinstance(noise, NoiseModel):
        if noise.n_qubits != n_qubits:
            raise ValueError("noise model register size does not match the problem")
        return noise
    return NoiseModel(noise, n_qubits)


def _run_noisy(params, n: int, model: NoiseModel, initial: Optional[DensityMatrix], keep: bool):
    params = as_params(params)
    rho = prepare_plus(n).to_density() if initial is None else initial
    matrix = rho.matrix
    history = [rho] if keep else None
    slot = 1
    for gate in circuit_gates(params, n):
        if gate.slot != slot:
            if keep:
                history.append(DensityMatrix._wrap(matrix, n))
            slot = gate.slot
        matrix = states.conjugate(matrix, gate_matrix(gate), gate.qubits, n)
        noise = model.gate_noise(gate.kind, gate.qubits)
        if not noise.is_identity:
            matrix = noise.apply(matrix, n)
    final = DensityMatrix._wrap(matrix, n)
    if keep:
        history.append(final)
        return final, AnsatzTrace(params, history)
    return final, None


def noisy_qaoa_evolve(
    params,
    spec: TfimSpec,
    calibration: Union[CalibrationData, NoiseModel],
    initial: Optional[DensityMatrix] = None,
) -> DensityMatrix:
    """Density-matrix execution of the gate-decomposed circuit.

    Every layer runs ``N`` ZZ gates (angle ``2 gamma``) followed by ``N`` Rx
    gates (angle ``2 beta``); after each gate its fitted depolarizing error
    and the thermal relaxation of its qubits are applied.
    """
    n = check_n_qubits(spec.n_qubits, low=2, high=MAX_DENSITY_QUBITS)
    final, _ = _run_noisy(params, n, _as_noise_model(calibration, n), initial, keep=False)
    return final


def noisy_qaoa_trace(
    params,
    spec: TfimSpec,
    calibration: Union[CalibrationData, NoiseModel],
    initial: Optional[DensityMatrix] = None,
) -> AnsatzTrace:
    """As :func:`noisy_qaoa_evolve`, keeping the state after each
    parameterized block (all ZZ gates of a layer, or all Rx gates)."""
    n = check_n_qubits(spec.n_qubits, low=2, high=MAX_DENSITY_QUBITS)
    _, trace = _run_noisy(params, n, _as_noise_model(calibration, n), initial, keep=True)
    return trace


# -- readout


@dataclass(frozen=True, eq=False)
class ReadoutError:
    """Per-qubit confusion matrices ``M[true, measured]``; ``matrices[q]``
    belongs to qubit ``q``."""

    matrices: Tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = tuple(np.asarray(m, dtype=float) for m in self.matrices)
        for q, m in enumerate(mats):
            if m.shape != (2, 2):
                raise ValueError(f"confusion matrix of qubit {q} must be 2x2")
            if np.any(m < 0) or np.max(np.abs(m.sum(axis=1) - 1.0)) > 1e-12:
                raise ValueError(f"confusion matrix of qubit {q} is not row-stochastic")
        object.__setattr__(self, "matrices", mats)

    @classmethod
    def from_probabilities(cls, p10: Sequence[float], p01: Sequence[float]) -> "ReadoutError":
        """``p10[q]`` is P(read 1 | prepared 0), ``p01[q]`` is P(read 0 |
        prepared 1)."""
        if len(p10) != len(p01):
            raise ValueError(f"got {len(p10)} p10 rates but {len(p01)} p01 rates")
        return cls(tuple(np.array([[1.0 - a, a], [b, 1.0 - b]]) for a, b in zip(p10, p01)))

    @classmethod
    def identity(cls, n_qubits: int) -> "ReadoutError":
        return cls.from_probabilities([0.0] * n_qubits, [0.0] * n_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.matrices)

    def dense(self) -> np.ndarray:
        """Full ``2^N x 2^N`` stochastic matrix ``S[true, measured]``."""
        out = np.ones((1, 1))
        for m in reversed(self.matrices):
            out = np.kron(out, m)
        return out


def apply_readout(probabilities, readout: ReadoutError) -> np.ndarray:
    """Corrupt a basis-state distribution with per-qubit readout flips.

    Examples
    --------
    >>> from qaoa_qng.noise import ReadoutError, apply_readout
    >>> apply_readout([1.0, 0.0], ReadoutError.from_probabilities([0.1], [0.0])).tolist()
    [0.9, 0.1]
    """
    n = readout.n_qubits
    probs = check_distribution(probabilities, n)
    tensor = probs.reshape((2,) * n)
    for q, m in enumerate(readout.matrices):
        axis = n - 1 - q
        tensor = np.moveaxis(np.tensordot(tensor, m, axes=([axis], [0])), -1, axis)
    return tensor.reshape(-1)


def measured_zz_energy(distribution, spec: TfimSpec) -> float:
    """Bond part ``-J <H_zz>`` of the cost evaluated from a measured basis
    distribution (possibly readout- or SPAM-corrupted)."""
    probs = check_distribution(distribution, spec.n_qubits)
    return float(-spec.coupling * np.dot(probs, zz_diagonal(spec.n_qubits)))
