"""
Execution backends for the QAOA ansatz.

A backend turns an angle vector into a state, an energy, a gradient and a
metric. The optimizer only talks to this interface, so the same loop drives
the exact statevector simulator, the calibrated gate-noise simulator and the
analog Rydberg emulator.
"""

import abc
import logging
from typing import Optional, Union

import numpy as np

from qaoa_qng import states
from qaoa_qng.ansatz import AnsatzTrace, as_params, cost_operator, evolve
from qaoa_qng.gradients import gradient_analytic, gradient_fd
from qaoa_qng.metric import MetricMatrix, compute_metric
from qaoa_qng.noise import (
    CalibrationData,
    NoiseModel,
    build_noise_model,
    load_calibration,
    noisy_qaoa_evolve,
    noisy_qaoa_trace,
)
from qaoa_qng.rydberg import (
    BETA_PERIOD,
    GAMMA_PERIOD,
    AnalogSettings,
    TrajectoryEnsemble,
    average_density,
    canonical_angles,
)
from qaoa_qng.states import DensityMatrix, State
from qaoa_qng.tfim import GroundState, TfimSpec

logger = logging.getLogger(__name__)

GRADIENT_ANALYTIC = "analytic"
GRADIENT_FD = "finite-difference"
GRADIENT_MODES = (GRADIENT_ANALYTIC, GRADIENT_FD)

BACKEND_NAMES = ("noiseless", "digital", "analog")


def _key(theta) -> bytes:
    return np.ascontiguousarray(as_params(theta).theta).tobytes()


class Backend(abc.ABC):
    """Common interface of all simulators.

    Subclasses provide :meth:`state` and :meth:`trace`; energies, metrics
    and fidelities follow from them.
    """

    name = ""
    supports_analytic_gradient = False

    def __init__(self, spec: TfimSpec):
        self.spec = spec
        self._trace_key = None
        self._trace = None

    @property
    def n_qubits(self) -> int:
        return self.spec.n_qubits

    @abc.abstractmethod
    def state(self, theta) -> State:
        """Trial state at :theta."""

    @abc.abstractmethod
    def _build_trace(self, theta) -> AnsatzTrace:
        pass

    def trace(self, theta) -> AnsatzTrace:
        """States after each parameterized block; the last call is cached."""
        key = _key(theta)
        if key != self._trace_key:
            self._trace = self._build_trace(as_params(theta))
            self._trace_key = key
        return self._trace

    def energy(self, theta) -> float:
        return states.expectation(self.state(theta), cost_operator(self.spec))

    def canonicalize(self, theta) -> np.ndarray:
        """Angles the optimizer should carry on with; the identity unless a
        backend is only continuous on a fundamental domain."""
        return np.array(as_params(theta).theta, dtype=float)

    def gradient(self, theta, mode: str = GRADIENT_ANALYTIC, step: float = 1e-5) -> np.ndarray:
        if mode not in GRADIENT_MODES:
            raise ValueError(f"unknown gradient mode '{mode}', expected one of {GRADIENT_MODES}")
        if mode == GRADIENT_ANALYTIC:
            if not self.supports_analytic_gradient:
                raise TypeError(
                    f"the {self.name} backend has no analytic gradient; use '{GRADIENT_FD}'"
                )
            return self._analytic_gradient(theta)
        return self._fd_gradient(as_params(theta).theta, step)

    def _fd_gradient(self, theta: np.ndarray, step: float) -> np.ndarray:
        return gradient_fd(theta, self.energy, step)

    def _analytic_gradient(self, theta) -> np.ndarray:
        raise NotImplementedError

    def metric(self, theta, diagonal: bool = False) -> MetricMatrix:
        """QFIM at :theta, pure or mixed form depending on the backend
        states."""
        return compute_metric(self.trace(theta), diagonal=diagonal)

    def fidelity(self, theta, ground: GroundState) -> float:
        """Overlap of the trial state with the ground state, or with the
        whole ground manifold when it is degenerate."""
        rho = self.state(theta)
        if ground.degeneracy > 1:
            return states.subspace_fidelity(rho, ground.subspace)
        return states.fidelity(rho, ground.state)

    def __repr__(self):
        return f"{type(self).__name__}(n_qubits={self.n_qubits})"


class NoiselessBackend(Backend):
    """Exact statevector simulation."""

    name = "noiseless"
    supports_analytic_gradient = True

    def state(self, theta) -> State:
        final, _ = evolve(theta, self.n_qubits)
        return final

    def _build_trace(self, theta) -> AnsatzTrace:
        _, trace = evolve(theta, self.n_qubits, keep_trace=True)
        return trace

    def _analytic_gradient(self, theta) -> np.ndarray:
        return gradient_analytic(theta, self.spec)


class DigitalNoiseBackend(Backend):
    """Density-matrix simulation of the decomposed circuit with
    calibration-fitted gate noise.

    Parameters
    ----------
    spec : TfimSpec
        Problem instance, at most 10 qubits.
    calibration : CalibrationData or NoiseModel, optional
        Device calibration, defaults to the bundled reference file.
    """

    name = "digital"

    def __init__(self, spec: TfimSpec, calibration: Union[CalibrationData, NoiseModel, None] = None):
        super().__init__(spec)
        if calibration is None:
            calibration = load_calibration()
        if isinstance(calibration, NoiseModel):
            self.noise_model = calibration
        else:
            self.noise_model = build_noise_model(calibration, spec.n_qubits)

    def state(self, theta) -> DensityMatrix:
        return noisy_qaoa_evolve(theta, self.spec, self.noise_model)

    def _build_trace(self, theta) -> AnsatzTrace:
        return noisy_qaoa_trace(theta, self.spec, self.noise_model)


class AnalogBackend(Backend):
    """Monte Carlo emulation of the compiled pulse schedule on a Rydberg
    register.

    Noise realizations are drawn once per depth from :seed and reused at
    every angle vector, so energies are deterministic functions of the
    angles. Every depth spawns its trajectories from the same seed, so
    trajectory ``k`` sees the same atoms at every depth. Without active
    noise a single trajectory is run and states are pure.

    Each ``gamma`` compiles to a pulse on ``[0, pi / 2)`` and each ``beta``
    to one on ``[-pi / 2, pi / 2]``. The energy jumps where an angle wraps,
    most at ``gamma = 0`` since no global drive reverses the sign of the
    interaction. :meth:`canonicalize` keeps the optimizer on that domain
    and finite differences turn one-sided at its edges.
    """

    name = "analog"

    def __init__(self, spec: TfimSpec, settings: Optional[AnalogSettings] = None, seed=None):
        super().__init__(spec)
        self.settings = AnalogSettings() if settings is None else settings
        self.seed = seed
        self.register = self.settings.build_register(spec.n_qubits)
        self._ensembles = {}

    @property
    def n_traj(self) -> int:
        return 1 if self.settings.noise.is_noiseless else self.settings.n_traj

    def ensemble(self, depth: int) -> TrajectoryEnsemble:
        if depth not in self._ensembles:
            s = self.settings
            self._ensembles[depth] = TrajectoryEnsemble(
                self.register,
                s.noise,
                self.n_traj,
                2 * depth,
                np.random.SeedSequence(0 if self.seed is None else self.seed),
                omega_min=s.omega_min,
                omega_max=s.omega_max,
                max_segment_duration=s.max_segment_duration,
            )
            logger.debug("analog ensemble for P=%d with %d trajectories", depth, self.n_traj)
        return self._ensembles[depth]

    def state(self, theta) -> State:
        params = as_params(theta)
        vectors = self.ensemble(params.depth).states(params)
        return vectors[0] if len(vectors) == 1 else average_density(vectors)

    def energy(self, theta) -> float:
        params = as_params(theta)
        return float(np.mean(self.ensemble(params.depth).energies(params, self.spec)))

    def canonicalize(self, theta) -> np.ndarray:
        return canonical_angles(theta)

    def _fd_gradient(self, theta: np.ndarray, step: float) -> np.ndarray:
        theta = canonical_angles(theta)
        lower = np.full(theta.size, -np.inf)
        upper = np.full(theta.size, np.inf)
        lower[0::2], upper[0::2] = 0.0, GAMMA_PERIOD
        lower[1::2], upper[1::2] = -0.5 * BETA_PERIOD, 0.5 * BETA_PERIOD
        return gradient_fd(theta, self.energy, step, lower, upper)

    def _build_trace(self, theta) -> AnsatzTrace:
        runs = self.ensemble(theta.depth).states(theta, keep_trace=True)
        if len(runs) == 1:
            return AnsatzTrace(theta, runs[0][1])
        slots = zip(*(history for _, history in runs))
        return AnsatzTrace(theta, [average_density(vectors) for vectors in slots])


def make_backend(
    name: str,
    spec: TfimSpec,
    *,
    calibration: Union[CalibrationData, NoiseModel, None] = None,
    analog: Optional[AnalogSettings] = None,
    seed=None,
) -> Backend:
    """Backend by name: ``"noiseless"``, ``"digital"`` or ``"analog"``."""
    if name == "noiseless":
        return NoiselessBackend(spec)
    if name == "digital":
        return DigitalNoiseBackend(spec, calibration)
    if name == "analog":
        return AnalogBackend(spec, analog, seed)
    raise KeyError(f"unknown backend '{name}', expected one of {BACKEND_NAMES}")
