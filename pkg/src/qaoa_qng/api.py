"""
Top-level API functions
"""

from typing import Optional, Union

import numpy as np

from qaoa_qng.backends import GRADIENT_ANALYTIC, GRADIENT_FD, Backend, make_backend
from qaoa_qng.noise import CalibrationData
from qaoa_qng.optimizers import OptimizerConfig, RunResult, optimize
from qaoa_qng.rydberg import AnalogSettings
from qaoa_qng.tfim import TfimSpec
from qaoa_qng.util import qaoa_global_options


def set_validation(flag: bool = True):
    """Enables or disables validation mode. With validation on, states are
    checked for normalization, density matrices for Hermiticity and unit
    trace, and gates for unitarity whenever they are built or applied.
    Validation is enabled by default; long benchmark sweeps can switch it
    off for speed.

    >>> import numpy as np
    >>> import qaoa_qng
    >>> from qaoa_qng.states import StateVector
    >>> StateVector([1.0, 1.0])
    Traceback (most recent call last):
        ...
    ValueError: state is not normalized (norm 1.4142135623730951)
    >>> qaoa_qng.set_validation(False)
    >>> StateVector([1.0, 1.0]).norm() > 1.0
    True
    >>> qaoa_qng.set_validation()

    Parameters
    ----------
    flag : bool, optional
        Pass False to disable validation, defaults to True
    """
    qaoa_global_options["validate"] = bool(flag)


def optimize_tfim(
    n_qubits: int,
    depth: int,
    *,
    method: str = "qng-full",
    field: float = 0.5,
    coupling: float = 1.0,
    learning_rate: float = 0.01,
    max_iters: int = 5000,
    eps_stop: Optional[float] = None,
    gradient_mode: Optional[str] = None,
    seed: Optional[int] = None,
    initial_theta=None,
    backend: Union[str, Backend] = "noiseless",
    calibration: Optional[CalibrationData] = None,
    analog: Optional[AnalogSettings] = None,
    threshold: Optional[float] = None,
) -> RunResult:
    """Optimize a depth-:depth QAOA ansatz for the periodic TFIM on
    :n_qubits spins.

    Initial angles are drawn uniformly from ``[-pi, pi)`` with :seed unless
    :initial_theta is given. Stopping tolerance, gradient mode and success
    threshold default to the noiseless values (1e-12, analytic, 1e-9) on the
    noiseless backend and to the noisy ones (1e-8, finite differences, 1e-6)
    otherwise.

    >>> from qaoa_qng import optimize_tfim
    >>> result = optimize_tfim(2, 1, field=0.01, learning_rate=0.05, seed=7)
    >>> result.success, result.stop_reason
    (True, 'converged')

    Parameters
    ----------
    n_qubits : int
        Number of spins ``N``.
    depth : int
        Number of QAOA layers ``P``.
    method : str, optional
        ``"vanilla"``, ``"qng-diag"`` or ``"qng-full"``, defaults to
        ``"qng-full"``.
    field : float, optional
        Transverse field ``h``, defaults to 0.5.
    coupling : float, optional
        Coupling ``J``, defaults to 1.0.
    learning_rate : float, optional
        Step size ``eta``, defaults to 0.01.
    max_iters : int, optional
        Iteration cap, defaults to 5000.
    seed : int, optional
        Seed of the random initial angles (and of the analog noise).
    initial_theta : array_like, optional
        Starting angles, overriding :seed.
    backend : str or Backend, optional
        ``"noiseless"``, ``"digital"``, ``"analog"`` or a prepared backend,
        defaults to ``"noiseless"``.
    calibration : CalibrationData, optional
        Calibration for the digital backend; the bundled reference file is
        used otherwise.
    analog : AnalogSettings, optional
        Register and noise settings for the analog backend.

    Returns
    -------
    RunResult
    """
    spec = TfimSpec(n_qubits, coupling=coupling, field=field)
    if isinstance(backend, str):
        backend = make_backend(backend, spec, calibration=calibration, analog=analog, seed=seed)
    noisy = backend.name != "noiseless" and not (
        backend.name == "analog" and backend.settings.noise.is_noiseless
    )
    if gradient_mode is None:
        gradient_mode = GRADIENT_ANALYTIC if backend.supports_analytic_gradient else GRADIENT_FD
    config = OptimizerConfig(
        method=method,
        learning_rate=learning_rate,
        max_iters=max_iters,
        eps_stop=eps_stop if eps_stop is not None else (1e-8 if noisy else 1e-12),
        gradient_mode=gradient_mode,
    )
    if initial_theta is None:
        initial_theta = np.random.default_rng(seed).uniform(-np.pi, np.pi, 2 * depth)
    elif np.size(initial_theta) != 2 * depth:
        raise ValueError(f"initial_theta has {np.size(initial_theta)} angles, expected {2 * depth}")
    if threshold is None:
        threshold = 1e-6 if noisy else 1e-9
    return optimize(initial_theta, spec, config, backend, threshold=threshold)
