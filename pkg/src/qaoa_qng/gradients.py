"""
Energy gradients with respect to the interleaved QAOA angles.
"""

from typing import Callable, Optional

import numpy as np

from qaoa_qng import states
from qaoa_qng.ansatz import (
    apply_generator,
    as_params,
    cost_operator,
    evolve,
    generator_operator,
)
from qaoa_qng.states import State, StateVector
from qaoa_qng.tfim import TfimSpec

# A gradient is a float array with one entry per angle.
GradientVector = np.ndarray


def gradient_analytic(params, spec: TfimSpec, initial: Optional[State] = None) -> GradientVector:
    """Exact gradient of the noiseless energy by a reverse sweep.

    With ``psi_a`` the state after ``a`` evolutions and ``lambda_a`` the
    back-propagated ``H_c |psi_final>``, each component is
    ``dE/dtheta_a = 2 Im <lambda_a| H_a |psi_a>``. One forward evolution and
    one backward sweep give every component.

    Parameters
    ----------
    params : QaoaParams or array_like
        Angles ``(gamma_1, beta_1, ...)``.
    spec : TfimSpec
        Problem instance.
    initial : StateVector, optional
        Initial state, defaults to ``|+>^N``.

    Returns
    -------
    ndarray
        Gradient of length ``2P``.
    """
    if initial is not None and not initial.is_pure:
        raise TypeError(
            "analytic gradients need a pure state; use gradient_fd for mixed states"
        )
    params = as_params(params)
    n = spec.n_qubits
    psi, _ = evolve(params, n, initial)
    lam = StateVector._wrap(cost_operator(spec).apply(psi.amplitudes), n)
    grad = np.empty(len(params))
    for a in range(len(params) - 1, -1, -1):
        tag, angle = params.generators[a], params.theta[a]
        h_psi = generator_operator(tag, n).apply(psi.amplitudes)
        grad[a] = 2.0 * np.vdot(lam.amplitudes, h_psi).imag
        psi = apply_generator(psi, tag, -angle)
        lam = apply_generator(lam, tag, -angle)
    return grad


def gradient_fd(
    theta,
    energy_fn: Callable[[np.ndarray], float],
    step: float = 1e-5,
    lower=None,
    upper=None,
) -> GradientVector:
    """Central finite-difference gradient.

    :energy_fn must be deterministic; Monte Carlo energies achieve this by
    reusing the same noise realizations at every point.

    :lower and :upper give optional per-angle bounds of a domain the
    energy is only continuous on. A component closer than :step to a bound
    uses the one-sided difference that stays inside.

    Examples
    --------
    >>> import numpy as np
    >>> from qaoa_qng.gradients import gradient_fd
    >>> np.round(gradient_fd([1.0, -2.0], lambda t: float(np.sum(t**2))), 6).tolist()
    [2.0, -4.0]
    >>> ramp = lambda t: float(t[0]) if t[0] >= 0 else 5.0
    >>> round(float(gradient_fd([0.0], ramp, lower=[0.0])[0]), 6)
    1.0
    """
    if not step > 0:
        raise ValueError(f"finite-difference step must be positive, got {step}")
    theta = np.array(getattr(theta, "theta", theta), dtype=float)
    lower = np.full(theta.size, -np.inf) if lower is None else np.broadcast_to(lower, theta.shape)
    upper = np.full(theta.size, np.inf) if upper is None else np.broadcast_to(upper, theta.shape)
    grad = np.empty(theta.size)
    for k in range(theta.size):
        shift = np.zeros(theta.size)
        shift[k] = step
        if theta[k] - step < lower[k]:
            grad[k] = (energy_fn(theta + shift) - energy_fn(theta)) / step
        elif theta[k] + step >= upper[k]:
            grad[k] = (energy_fn(theta) - energy_fn(theta - shift)) / step
        else:
            grad[k] = (energy_fn(theta + shift) - energy_fn(theta - shift)) / (2.0 * step)
    return grad


def energy_landscape(spec: TfimSpec, initial: Optional[State] = None) -> Callable[[np.ndarray], float]:
    """Noiseless energy as a function of a plain angle array."""
    h = cost_operator(spec)

    def energy_fn(theta):
        final, _ = evolve(theta, spec.n_qubits, initial)
        return states.expectation(final, h)

    return energy_fn
