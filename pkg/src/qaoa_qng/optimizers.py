"""
Gradient-descent and quantum-natural-gradient optimization of the QAOA
angles.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from qaoa_qng.ansatz import accuracy
from qaoa_qng.backends import GRADIENT_ANALYTIC, GRADIENT_MODES, Backend, NoiselessBackend
from qaoa_qng.metric import MetricMatrix, pseudo_inverse
from qaoa_qng.tfim import TfimSpec, exact_diagonalize
from qaoa_qng.util import check_positive

logger = logging.getLogger(__name__)

METHOD_VANILLA = "vanilla"
METHOD_QNG_DIAG = "qng-diag"
METHOD_QNG_FULL = "qng-full"
METHODS = (METHOD_VANILLA, METHOD_QNG_DIAG, METHOD_QNG_FULL)

STOP_ENERGY = "energy"
STOP_PARAMS = "params"

CONVERGED = "converged"
MAX_ITERS = "max-iters"


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings of one optimization run.

    ``stop_on="energy"`` stops once ``|E_{t+1} - E_t| < eps_stop``;
    ``stop_on="params"`` uses the Euclidean norm of the angle update
    instead.
    """

    method: str = METHOD_QNG_FULL
    learning_rate: float = 0.01
    max_iters: int = 5000
    eps_stop: float = 1e-12
    pinv_rcond: float = 1e-8
    gradient_mode: str = GRADIENT_ANALYTIC
    fd_step: float = 1e-5
    stop_on: str = STOP_ENERGY

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method '{self.method}', expected one of {METHODS}")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(
                f"unknown gradient mode '{self.gradient_mode}', expected one of {GRADIENT_MODES}"
            )
        if self.stop_on not in (STOP_ENERGY, STOP_PARAMS):
            raise ValueError(f"stop_on must be 'energy' or 'params', got '{self.stop_on}'")
        check_positive(self.learning_rate, "learning_rate")
        check_positive(self.eps_stop, "eps_stop")
        check_positive(self.pinv_rcond, "pinv_rcond")
        check_positive(self.fd_step, "fd_step")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")
        object.__setattr__(self, "max_iters", int(self.max_iters))

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise KeyError(f"unknown optimizer keys {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    """Outcome of :func:`optimize`.

    ``energy_trajectory[0]`` is the starting energy, so the trajectory holds
    ``steps_taken + 1`` values. ``best_accuracy`` is the smallest relative
    error over the whole trajectory and ``best_theta`` the angles that
    reached it.
    """

    initial_theta: np.ndarray
    final_theta: np.ndarray
    energy_trajectory: np.ndarray
    steps_taken: int
    stop_reason: str
    best_accuracy: float
    success: bool
    best_theta: np.ndarray
    exact_energy: float
    threshold: float
    config: OptimizerConfig = field(default_factory=OptimizerConfig)

    @property
    def final_energy(self) -> float:
        return float(self.energy_trajectory[-1])

    @property
    def best_energy(self) -> float:
        return float(np.min(self.energy_trajectory))

    @property
    def converged(self) -> bool:
        return self.stop_reason == CONVERGED

    def accuracy_trajectory(self) -> np.ndarray:
        """Best-so-far relative error after each step."""
        best = np.minimum.accumulate(self.energy_trajectory)
        return (best - self.exact_energy) / abs(self.exact_energy)


def vanilla_step(theta, grad, eta: float) -> np.ndarray:
    """Plain gradient step ``theta - eta grad``.

    Examples
    --------
    >>> from qaoa_qng.optimizers import vanilla_step
    >>> vanilla_step([0.0, 0.0], [1.0, -2.0], 0.1).tolist()
    [-0.1, 0.2]
    """
    theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
    grad = np.asarray(grad, dtype=float)
    if theta.shape != grad.shape:
        raise ValueError(f"shape mismatch: theta {theta.shape} vs gradient {grad.shape}")
    return theta - eta * grad


def qng_step(
    theta, grad, metric: Union[MetricMatrix, np.ndarray], eta: float, rcond: float = 1e-8
) -> np.ndarray:
    """Natural-gradient step ``theta - eta g^+ grad``.

    A :class:`MetricMatrix` is converted to the Fubini-Study ``g`` first; a
    plain array is taken to be ``g`` already.
    """
    theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
    grad = np.asarray(grad, dtype=float)
    g = metric.fubini_study() if isinstance(metric, MetricMatrix) else np.asarray(metric, dtype=float)
    if g.shape != (theta.size, theta.size) or grad.shape != theta.shape:
        raise ValueError(
            f"shape mismatch: theta {theta.shape}, gradient {grad.shape}, metric {g.shape}"
        )
    return theta - eta * (pseudo_inverse(g, rcond) @ grad)


def _update(theta, backend: Backend, config: OptimizerConfig) -> np.ndarray:
    grad = backend.gradient(theta, config.gradient_mode, config.fd_step)
    if config.method == METHOD_VANILLA:
        return vanilla_step(theta, grad, config.learning_rate)
    metric = backend.metric(theta, diagonal=config.method == METHOD_QNG_DIAG)
    return qng_step(theta, grad, metric, config.learning_rate, config.pinv_rcond)


def optimize(
    initial_theta,
    spec: TfimSpec,
    config: Optional[OptimizerConfig] = None,
    backend: Optional[Backend] = None,
    *,
    exact_energy: Optional[float] = None,
    threshold: float = 1e-9,
    callback: Optional[Callable[[int, np.ndarray, float], None]] = None,
) -> RunResult:
    """Minimize the TFIM energy from :initial_theta.

    Angles are kept on the backend's fundamental domain (see
    :meth:`~qaoa_qng.backends.Backend.canonicalize`), starting angles
    included.

    Parameters
    ----------
    initial_theta : QaoaParams or array_like
        Starting angles ``(gamma_1, beta_1, ...)``.
    spec : TfimSpec
        Problem instance.
    config : OptimizerConfig, optional
        Method and stopping rule, defaults to ``OptimizerConfig()``.
    backend : Backend, optional
        Simulator, defaults to :class:`~qaoa_qng.backends.NoiselessBackend`.
    exact_energy : float, optional
        Reference ground energy; computed by exact diagonalization when
        omitted.
    threshold : float, optional
        A run succeeds when its best accuracy is below this value.
    callback : callable, optional
        Called as ``callback(step, theta, energy)`` after every step.

    Returns
    -------
    RunResult
    """
    config = OptimizerConfig() if config is None else config
    backend = NoiselessBackend(spec) if backend is None else backend
    if backend.spec != spec:
        raise ValueError("backend was built for a different problem instance")
    if exact_energy is None:
        exact_energy = exact_diagonalize(spec).energy
    theta = backend.canonicalize(initial_theta)
    start = theta.copy()
    energy = backend.energy(theta)
    energies = [energy]
    best_theta, best_energy = start, energy
    stop_reason = MAX_ITERS
    for step in range(1, config.max_iters + 1):
        stepped = _update(theta, backend, config)
        updated = backend.canonicalize(stepped)
        new_energy = backend.energy(updated)
        energies.append(new_energy)
        if new_energy < best_energy:
            best_theta, best_energy = updated, new_energy
        if config.stop_on == STOP_ENERGY:
            change = abs(new_energy - energy)
        else:
            change = float(np.linalg.norm(stepped - theta))
        theta, energy = updated, new_energy
        if callback is not None:
            callback(step, theta, energy)
        if change < config.eps_stop:
            stop_reason = CONVERGED
            break
    trajectory = np.array(energies)
    best_accuracy = accuracy(best_energy, exact_energy)
    logger.debug(
        "%s on N=%d: %s after %d steps, best accuracy %.3g",
        config.method,
        spec.n_qubits,
        stop_reason,
        len(energies) - 1,
        best_accuracy,
    )
    return RunResult(
        initial_theta=start,
        final_theta=theta,
        energy_trajectory=trajectory,
        steps_taken=len(energies) - 1,
        stop_reason=stop_reason,
        best_accuracy=best_accuracy,
        success=bool(best_accuracy < threshold),
        best_theta=best_theta,
        exact_energy=float(exact_energy),
        threshold=threshold,
        config=config,
    )
