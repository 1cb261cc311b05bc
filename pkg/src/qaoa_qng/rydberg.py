"""
Pulse-level emulation of a neutral-atom Rydberg register running the QAOA
ansatz.

Units are microseconds, micrometres and rad/us. Each atom is a qubit, with
bit 0 the ground state and bit 1 the Rydberg state, and ``n_i`` projects
onto bit 1. During a constant pulse segment the register evolves under

    H = sum_i (Omega_i / 2) (cos(phi) X_i + sin(phi) Y_i)
        - sum_i (delta + delta_i) n_i + sum_{i<j} U_ij n_i n_j,
    U_ij = C6 / R_ij^6

where ``Omega_i`` includes the beam-profile and shot-to-shot amplitude
factors, ``phi`` is the laser phase and ``delta_i`` is the atom's Doppler
shift.

Since ``n_i n_j = (1 - Z_i - Z_j + Z_i Z_j) / 4``, the global detuning
``delta = sum_j U_ij / 2`` removes every single-site term on a ring,
interaction tail included, and leaves ``sum_{i<j} (U_ij / 4) Z_i Z_j``. A
QAOA layer then compiles to two segments at that detuning:

* a blockade segment at ``Omega_min`` for ``t = 4 gamma / U_nn``, giving
  ``exp(-i gamma H_zz)``;
* a mixing segment at ``Omega_max`` for ``t = 2 |beta| / Omega_max``, with
  phase ``pi`` for negative ``beta``, giving ``exp(-i beta H_m)``.

To first order, a mixing segment also applies a ``Z_i Z_j`` phase and a
blockade segment an ``X`` rotation. Both are subtracted from the
preceding segment of the other kind, see :func:`compile_schedule`.
The couplings beyond nearest neighbours and the higher-order drive terms
are genuine compilation errors and stay in the Hamiltonian.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from qaoa_qng import states
from qaoa_qng.ansatz import as_params, cost_operator
from qaoa_qng.noise import ReadoutError, apply_readout
from qaoa_qng.operators import basis_indices
from qaoa_qng.states import DensityMatrix, StateVector
from qaoa_qng.tfim import TfimSpec
from qaoa_qng.util import (
    MAX_DENSITY_QUBITS,
    MAX_STATE_QUBITS,
    check_distribution,
    check_n_qubits,
    check_non_negative,
    check_positive,
    check_probability,
)

logger = logging.getLogger(__name__)

# Rb-87 |70S> van der Waals coefficient, rad um^6 / us.
C6_DEFAULT = 5420158.53
OMEGA_MIN_DEFAULT = 1.0
OMEGA_MAX_DEFAULT = 15.0
DEFAULT_MAX_SEGMENT_DURATION = 100.0

BOLTZMANN = 1.380649e-23
RB87_MASS_KG = 1.45e-25
# Effective wavevector of the counter-propagating two-photon drive, 1/um.
EFFECTIVE_WAVEVECTOR = 8.7

NOISE_SOURCES = ("doppler", "amplitude", "waist", "spam")
LASER_SOURCES = ("doppler", "amplitude", "waist")
LAYOUTS = ("ring", "chain")

STEP_TOL = 1e-8
MAX_SUBSTEPS = 64
SPECTRAL_MAX_QUBITS = 8

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(48)

SEGMENT_GAMMA = "gamma"
SEGMENT_BETA = "beta"

# exp(-i gamma H_zz) and exp(-i beta H_m) repeat, up to a global phase, with
# these periods.
GAMMA_PERIOD = 0.5 * math.pi
BETA_PERIOD = math.pi


def blockade_radius(omega: float, c6: float = C6_DEFAULT) -> float:
    """Distance at which the interaction equals the Rabi frequency,
    ``(c6 / omega)^(1/6)``.

    Examples
    --------
    >>> from qaoa_qng.rydberg import blockade_radius
    >>> blockade_radius(2.0, c6=2.0)
    1.0
    """
    check_positive(omega, "omega")
    check_positive(c6, "c6")
    return float((c6 / omega) ** (1.0 / 6.0))


def default_spacing(
    c6: float = C6_DEFAULT,
    omega_min: float = OMEGA_MIN_DEFAULT,
    omega_max: float = OMEGA_MAX_DEFAULT,
) -> float:
    """Spacing whose nearest-neighbour interaction is the geometric mean of
    the two Rabi frequencies, so the blockade segment is interaction
    dominated and the mixing segment drive dominated."""
    return blockade_radius(math.sqrt(omega_min * omega_max), c6)


@dataclass(frozen=True, eq=False)
class AtomRegister:
    """Atom positions in the plane, beam centred at the origin.

    Atom ``q`` is qubit ``q`` of the simulated register.
    """

    positions: np.ndarray
    c6: float = C6_DEFAULT

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise ValueError(f"positions must have shape (n, 2), got {positions.shape}")
        check_n_qubits(positions.shape[0], low=2, high=MAX_STATE_QUBITS)
        check_positive(self.c6, "c6")
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "c6", float(self.c6))
        off_diagonal = self.distances[~np.eye(self.n_atoms, dtype=bool)]
        if np.any(off_diagonal <= 0.0):
            raise ValueError("atoms must sit at distinct positions")

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]

    @cached_property
    def distances(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.sqrt(np.sum(diff**2, axis=-1))

    @cached_property
    def interactions(self) -> np.ndarray:
        """Symmetric ``U_ij`` with a zero diagonal."""
        with np.errstate(divide="ignore"):
            u = self.c6 / self.distances**6
        np.fill_diagonal(u, 0.0)
        return u

    @cached_property
    def pairs(self) -> Tuple[Tuple[int, int, float], ...]:
        """``(i, j, U_ij)`` for every ``i < j``."""
        n = self.n_atoms
        return tuple(
            (i, j, float(self.interactions[i, j])) for i in range(n) for j in range(i + 1, n)
        )

    @property
    def nearest_neighbour_interaction(self) -> float:
        return float(max(u for _, _, u in self.pairs))

    @property
    def blockade_detuning(self) -> float:
        """Global detuning ``sum_j U_ij / 2`` cancelling the single-site
        fields of the interaction, averaged over atoms.

        Every atom of a ring sees the same sum, so the cancellation is
        exact there; the ends of a chain keep a residual field.
        """
        return float(0.5 * np.mean(self.interactions.sum(axis=1)))

    @property
    def radii(self) -> np.ndarray:
        """Distance of each atom to the beam centre."""
        return np.sqrt(np.sum(self.positions**2, axis=1))

    @cached_property
    def occupations(self) -> np.ndarray:
        """``occupations[i, x]`` is the bit of atom ``i`` in basis state
        ``x``."""
        idx = basis_indices(self.n_atoms)
        return np.array([(idx >> i) & 1 for i in range(self.n_atoms)], dtype=float)

    @cached_property
    def interaction_diagonal(self) -> np.ndarray:
        occ = self.occupations
        diag = np.zeros(occ.shape[1])
        for i, j, u in self.pairs:
            diag += u * occ[i] * occ[j]
        return diag


def build_chain_register(n_atoms: int, spacing: float, c6: float = C6_DEFAULT) -> AtomRegister:
    """Equally spaced atoms on a line centred at the origin."""
    n_atoms = check_n_qubits(n_atoms, low=2)
    check_positive(spacing, "spacing")
    x = (np.arange(n_atoms) - 0.5 * (n_atoms - 1)) * spacing
    return AtomRegister(np.column_stack([x, np.zeros(n_atoms)]), c6)


def build_ring_register(n_atoms: int, spacing: float, c6: float = C6_DEFAULT) -> AtomRegister:
    """Atoms on a circle with neighbouring chords of length :spacing, so
    every atom has two equidistant neighbours as in the periodic chain.

    Examples
    --------
    >>> from qaoa_qng.rydberg import build_ring_register
    >>> register = build_ring_register(4, 10.0)
    >>> round(float(register.distances[0, 1]), 9), round(float(register.distances[0, 2]), 9)
    (10.0, 14.142135624)
    """
    n_atoms = check_n_qubits(n_atoms, low=3)
    check_positive(spacing, "spacing")
    radius = spacing / (2.0 * math.sin(math.pi / n_atoms))
    angles = 2.0 * math.pi * np.arange(n_atoms) / n_atoms
    return AtomRegister(radius * np.column_stack([np.cos(angles), np.sin(angles)]), c6)


# -- pulse schedules


@dataclass(frozen=True)
class PulseSegment:
    """Constant drive over ``duration`` microseconds, laser phase
    ``phase`` in radians."""

    omega: float
    delta: float
    duration: float
    kind: str = ""
    phase: float = 0.0

    def __post_init__(self):
        check_non_negative(self.omega, "omega")
        check_non_negative(self.duration, "duration")
        for label in ("delta", "phase"):
            if not math.isfinite(getattr(self, label)):
                raise ValueError(f"'{label}' must be finite, got {getattr(self, label)}")


@dataclass(frozen=True)
class PulseSchedule:
    segments: Tuple[PulseSegment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def total_duration(self) -> float:
        return math.fsum(s.duration for s in self.segments)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)


def wrap_gamma(gamma):
    """Cost angle on ``[0, pi / 2)``."""
    return np.mod(gamma, GAMMA_PERIOD)


def wrap_beta(beta):
    """Mixer angle on ``[-pi / 2, pi / 2]``."""
    return beta - BETA_PERIOD * np.round(np.asarray(beta) / BETA_PERIOD)


def canonical_angles(params) -> np.ndarray:
    """Angle vector with every ``gamma`` on ``[0, pi / 2)`` and every
    ``beta`` on ``[-pi / 2, pi / 2]``; the ideal ansatz state is unchanged
    up to a global phase.

    Examples
    --------
    >>> from qaoa_qng.rydberg import canonical_angles
    >>> canonical_angles([-0.25, 3.0]).round(6).tolist()
    [1.320796, -0.141593]
    """
    theta = np.array(as_params(params).theta, dtype=float)
    theta[0::2] = wrap_gamma(theta[0::2])
    theta[1::2] = wrap_beta(theta[1::2])
    return theta


def mixer_zz_phase(beta: float, u_nn: float, omega_max: float) -> float:
    """First-order ``gamma`` applied by the interaction during a mixing
    segment, ``U_nn (|beta| + sin(4 |beta|) / 4) / (4 Omega_max)``."""
    b = abs(beta)
    return u_nn * (b + 0.25 * math.sin(4.0 * b)) / (4.0 * omega_max)


def blockade_drive_rotation(duration: float, register: AtomRegister, omega_min: float) -> float:
    """First-order ``beta`` applied by the residual drive during a blockade
    segment of :duration microseconds.

    In the frame of the interaction, the ``X_i`` content of the drive is
    ``prod_j cos(u U_ij / 2)`` at time ``u``; the rotation is
    ``Omega_min / 2`` times its time integral, averaged over atoms. On a
    ring without tail this is ``Omega_min (gamma + sin(4 gamma) / 4) / U_nn``.

    Examples
    --------
    >>> import math
    >>> from qaoa_qng.rydberg import blockade_drive_rotation, build_ring_register
    >>> triangle = build_ring_register(3, 10.0)
    >>> u = triangle.nearest_neighbour_interaction
    >>> gamma = 0.3
    >>> a = blockade_drive_rotation(4.0 * gamma / u, triangle, 1.0)
    >>> math.isclose(a, (gamma + math.sin(4.0 * gamma) / 4.0) / u, rel_tol=1e-12)
    True
    """
    if duration == 0.0:
        return 0.0
    u = 0.5 * duration * (_GAUSS_NODES + 1.0)
    content = np.prod(np.cos(0.5 * u[:, None, None] * register.interactions[None]), axis=2)
    integral = 0.5 * duration * float(_GAUSS_WEIGHTS @ content.mean(axis=1))
    return 0.5 * omega_min * integral


def compile_schedule(
    params,
    register: AtomRegister,
    *,
    omega_min: float = OMEGA_MIN_DEFAULT,
    omega_max: float = OMEGA_MAX_DEFAULT,
    max_segment_duration: float = DEFAULT_MAX_SEGMENT_DURATION,
) -> PulseSchedule:
    """Blockade-regime pulse schedule of a QAOA angle vector.

    Angles are first brought onto their canonical ranges (see
    :func:`canonical_angles`). A negative ``beta`` is driven with laser
    phase ``pi``, so the schedule is continuous wherever a mixing pulse
    passes through zero length. It jumps where an angle wraps, at
    ``gamma = 0`` and ``beta = +-pi / 2``.

    Layers are compiled from the last to the first. The ``Z_i Z_j`` phase
    a mixing segment picks up (:func:`mixer_zz_phase`) acts right after
    the blockade segment of its layer and is taken off that segment's
    ``gamma``, floored at zero. The ``X`` rotation of a blockade segment's
    residual drive (:func:`blockade_drive_rotation`) acts right after the
    previous mixing segment and is taken off its ``beta``; in the first
    layer it acts on ``|+>^N`` and only changes the global phase.

    Parameters
    ----------
    params : QaoaParams or array_like
        QAOA angles ``(gamma_1, beta_1, ...)``.
    register : AtomRegister
        Atom layout; the nearest-neighbour coupling implements the bonds.
    omega_min, omega_max : float, optional
        Rabi frequencies of the blockade and mixing segments in rad/us.
    max_segment_duration : float, optional
        Longest allowed segment in microseconds.

    Returns
    -------
    PulseSchedule
        ``2P`` segments alternating blockade and mixing.

    Examples
    --------
    >>> from qaoa_qng.rydberg import build_ring_register, compile_schedule
    >>> schedule = compile_schedule([0.0, 0.0, 0.0, 0.0], build_ring_register(4, 10.0))
    >>> len(schedule), schedule.total_duration
    (4, 0.0)
    """
    params = as_params(params)
    check_positive(omega_min, "omega_min")
    check_positive(omega_max, "omega_max")
    if omega_min >= omega_max:
        raise ValueError(f"omega_min ({omega_min}) must be below omega_max ({omega_max})")
    u_nn = register.nearest_neighbour_interaction
    # N = 2 wraps the ring onto one pair, which carries both bonds
    bond_weight = 2.0 if register.n_atoms == 2 else 1.0
    delta = register.blockade_detuning
    theta = canonical_angles(params)
    layers = []
    carry = 0.0
    for k in range(params.depth - 1, -1, -1):
        beta = float(theta[2 * k + 1]) - carry
        zz = mixer_zz_phase(beta, u_nn, omega_max) / bond_weight
        gamma = max(float(theta[2 * k]) - zz, 0.0)
        t_gamma = 4.0 * bond_weight * gamma / u_nn
        carry = blockade_drive_rotation(t_gamma, register, omega_min)
        layers.append((t_gamma, beta))
    segments = []
    for t_gamma, beta in reversed(layers):
        t_beta = 2.0 * abs(beta) / omega_max
        phase = math.pi if beta < 0 else 0.0
        segments.append(PulseSegment(omega_min, delta, t_gamma, SEGMENT_GAMMA))
        segments.append(PulseSegment(omega_max, delta, t_beta, SEGMENT_BETA, phase))
    for k, seg in enumerate(segments):
        if seg.duration > max_segment_duration:
            raise ValueError(
                f"segment {k} ({seg.kind}) lasts {seg.duration:.4g} us, "
                f"above the limit of {max_segment_duration} us"
            )
    return PulseSchedule(tuple(segments))


# -- noise


def doppler_sigma_from_temperature(temperature_uk: float) -> float:
    """Detuning spread ``k_eff sqrt(k_B T / m)`` in rad/us for an Rb-87
    cloud at :temperature_uk microkelvin.

    Examples
    --------
    >>> from qaoa_qng.rydberg import doppler_sigma_from_temperature
    >>> round(doppler_sigma_from_temperature(50.0), 3)
    0.6
    """
    check_non_negative(temperature_uk, "temperature_uk")
    # m/s equals um/us
    velocity = math.sqrt(BOLTZMANN * temperature_uk * 1e-6 / RB87_MASS_KG)
    return EFFECTIVE_WAVEVECTOR * velocity


def _expand_sources(noise_types) -> FrozenSet[str]:
    if isinstance(noise_types, str):
        noise_types = [noise_types]
    out = set()
    for name in noise_types:
        if name == "laser":
            out.update(LASER_SOURCES)
        elif name == "all":
            out.update(NOISE_SOURCES)
        elif name in NOISE_SOURCES:
            out.add(name)
        else:
            raise ValueError(
                f"unknown noise source '{name}', expected one of {NOISE_SOURCES + ('laser', 'all')}"
            )
    return frozenset(out)


@dataclass(frozen=True)
class AnalogNoiseConfig:
    """Active noise sources and their strengths.

    ``doppler_sigma`` overrides the value derived from ``temperature_uk``
    when given. Strengths of sources missing from ``noise_types`` are kept
    but not applied.
    """

    noise_types: FrozenSet[str] = frozenset()
    temperature_uk: float = 50.0
    doppler_sigma: Optional[float] = None
    laser_waist: float = 175.0
    amp_sigma: float = 0.05
    spam_eta: float = 0.005
    spam_eps: float = 0.01
    spam_eps_prime: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "noise_types", _expand_sources(self.noise_types))
        check_non_negative(self.temperature_uk, "temperature_uk")
        if self.doppler_sigma is not None:
            check_non_negative(self.doppler_sigma, "doppler_sigma")
        check_positive(self.laser_waist, "laser_waist")
        check_non_negative(self.amp_sigma, "amp_sigma")
        for label in ("spam_eta", "spam_eps", "spam_eps_prime"):
            check_probability(getattr(self, label), label)

    @classmethod
    def noiseless(cls) -> "AnalogNoiseConfig":
        return cls()

    @classmethod
    def laser(cls, **kwargs) -> "AnalogNoiseConfig":
        return cls(noise_types=frozenset(LASER_SOURCES), **kwargs)

    @classmethod
    def spam(cls, **kwargs) -> "AnalogNoiseConfig":
        return cls(noise_types=frozenset({"spam"}), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "AnalogNoiseConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown analog noise keys {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["noise_types"] = sorted(self.noise_types)
        return data

    @property
    def is_noiseless(self) -> bool:
        return not self.noise_types

    @property
    def effective_doppler_sigma(self) -> float:
        if "doppler" not in self.noise_types:
            return 0.0
        if self.doppler_sigma is not None:
            return float(self.doppler_sigma)
        return doppler_sigma_from_temperature(self.temperature_uk)

    @property
    def effective_amp_sigma(self) -> float:
        return self.amp_sigma if "amplitude" in self.noise_types else 0.0

    @property
    def effective_spam_eta(self) -> float:
        return self.spam_eta if "spam" in self.noise_types else 0.0


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    """One draw of every noise source for a register and schedule length."""

    detunings: np.ndarray
    waist_factors: np.ndarray
    amplitude_factors: np.ndarray
    prep_errors: np.ndarray
    seed: object = None

    @property
    def n_atoms(self) -> int:
        return self.detunings.shape[0]

    @property
    def is_identity(self) -> bool:
        return bool(
            not np.any(self.detunings)
            and np.all(self.waist_factors == 1.0)
            and np.all(self.amplitude_factors == 1.0)
            and not np.any(self.prep_errors)
        )

    def rabi_factors(self, segment_index: int) -> np.ndarray:
        """Per-atom multiplier of the nominal Rabi frequency."""
        factors = self.waist_factors * self.amplitude_factors[segment_index]
        return np.where(self.prep_errors, 0.0, factors)

    @classmethod
    def identity(cls, n_atoms: int, n_segments: int) -> "NoiseRealization":
        return cls(
            np.zeros(n_atoms), np.ones(n_atoms), np.ones(n_segments), np.zeros(n_atoms, dtype=bool)
        )


def sample_noise(
    config: AnalogNoiseConfig, register: AtomRegister, n_segments: int, seed=None
) -> NoiseRealization:
    """Draw a noise realization.

    Draws always happen in the same order (Doppler, preparation, then one
    amplitude factor per segment) from unit distributions scaled
    afterwards. A seed therefore yields the same stream whichever sources
    are active, and a longer schedule extends the draws of a shorter one.

    Examples
    --------
    >>> from qaoa_qng.rydberg import AnalogNoiseConfig, build_ring_register, sample_noise
    >>> sample_noise(AnalogNoiseConfig(), build_ring_register(3, 10.0), 2, seed=1).is_identity
    True
    """
    if n_segments < 0:
        raise ValueError(f"n_segments must be non-negative, got {n_segments}")
    rng = np.random.default_rng(seed)
    n = register.n_atoms
    detunings = config.effective_doppler_sigma * rng.standard_normal(n)
    prep = rng.random(n) < config.effective_spam_eta
    amplitude = 1.0 + config.effective_amp_sigma * rng.standard_normal(n_segments)
    if "waist" in config.noise_types:
        waist = np.exp(-(register.radii**2) / config.laser_waist**2)
    else:
        waist = np.ones(n)
    return NoiseRealization(detunings, waist, amplitude, prep, seed)


# -- evolution


def initial_state(register: AtomRegister, realization: Optional[NoiseRealization] = None) -> StateVector:
    """``|+>`` on every atom, except atoms with a preparation error, which
    start in the ground state."""
    n = register.n_atoms
    plus = np.full(2, 2**-0.5, dtype=complex)
    ground = np.array([1.0, 0.0], dtype=complex)
    prep = np.zeros(n, dtype=bool) if realization is None else realization.prep_errors
    amps = np.ones(1, dtype=complex)
    # kron puts its first factor on the most significant bit
    for q in range(n):
        amps = np.kron(ground if prep[q] else plus, amps)
    return StateVector._wrap(amps, n)


def segment_hamiltonian(
    register: AtomRegister,
    segment: PulseSegment,
    realization: Optional[NoiseRealization] = None,
    index: int = 0,
) -> scipy.sparse.csr_matrix:
    """Sparse Hamiltonian of one segment under a noise realization."""
    n = register.n_atoms
    dim = 2**n
    if realization is None:
        omegas = np.full(n, segment.omega)
        detunings = np.full(n, segment.delta)
    else:
        omegas = segment.omega * realization.rabi_factors(index)
        detunings = segment.delta + realization.detunings
    idx = basis_indices(n)
    rows, cols = [idx], [idx]
    data = [(register.interaction_diagonal - detunings @ register.occupations).astype(complex)]
    # <1|H|0> carries exp(i phase), <0|H|1> its conjugate
    raising = np.exp(1j * segment.phase)
    for q in range(n):
        if omegas[q] != 0.0:
            rows.append(idx ^ (1 << q))
            cols.append(idx)
            ground = ((idx >> q) & 1) == 0
            data.append(0.5 * omegas[q] * np.where(ground, raising, raising.conjugate()))
    matrix = scipy.sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    return matrix.tocsr()


def _substeps(h, amps: np.ndarray, duration: float, count: int) -> np.ndarray:
    dt = duration / count
    for _ in range(count):
        amps = scipy.sparse.linalg.expm_multiply((-1j * dt) * h, amps)
    return amps


def _propagate(h, amps: np.ndarray, duration: float, step_check: bool) -> np.ndarray:
    if duration == 0.0:
        return amps
    if not step_check:
        return scipy.sparse.linalg.expm_multiply((-1j * duration) * h, amps)
    count = 1
    coarse = _substeps(h, amps, duration, count)
    while count < MAX_SUBSTEPS:
        fine = _substeps(h, amps, duration, 2 * count)
        change = np.linalg.norm(fine - coarse)
        if change < STEP_TOL:
            return fine
        coarse, count = fine, 2 * count
    raise RuntimeError(
        f"segment of {duration:.4g} us did not reach a step change below "
        f"{STEP_TOL} within {MAX_SUBSTEPS} substeps (last change {change:.3g})"
    )


def evolve_schedule(
    register: AtomRegister,
    schedule: PulseSchedule,
    realization: Optional[NoiseRealization] = None,
    *,
    initial: Optional[StateVector] = None,
    keep_trace: bool = False,
    step_check: bool = True,
) -> Union[StateVector, Tuple[StateVector, List[StateVector]]]:
    """Evolve a register through a pulse schedule.

    Each segment is integrated with ``expm_multiply`` on the sparse
    Hamiltonian. With :step_check set, the number of substeps is doubled
    until halving the substep changes the state by less than 1e-8, and a
    ``RuntimeError`` is raised if 64 substeps are not enough.

    When :keep_trace is set, also returns the state before the first
    segment and after every segment.
    """
    n = check_n_qubits(register.n_atoms, low=2, high=MAX_STATE_QUBITS)
    if realization is not None and realization.amplitude_factors.shape[0] < len(schedule):
        raise ValueError("noise realization has fewer segments than the schedule")
    state = initial_state(register, realization) if initial is None else initial
    if state.n_qubits != n:
        raise ValueError(f"dimension mismatch: state on {state.n_qubits} qubits, register of {n}")
    amps = state.amplitudes
    history = [state] if keep_trace else None
    for k, seg in enumerate(schedule):
        if seg.duration > 0.0:
            h = segment_hamiltonian(register, seg, realization, k)
            amps = _propagate(h, amps, seg.duration, step_check)
        if keep_trace:
            history.append(StateVector._wrap(amps, n))
    final = StateVector._wrap(amps, n)
    return (final, history) if keep_trace else final


class SpectralPropagator:
    """Exact segment propagators of one noise realization.

    Segment Hamiltonians depend on the angles only through their durations,
    so each is diagonalized once and reused for every schedule with the same
    drive. Meant for registers of at most 8 atoms.
    """

    def __init__(self, register: AtomRegister, realization: Optional[NoiseRealization] = None):
        self.register = register
        self.realization = realization
        self._cache: Dict[Tuple[int, float, float, float], Tuple[np.ndarray, np.ndarray]] = {}

    def _spectrum(self, seg: PulseSegment, index: int):
        key = (index, seg.omega, seg.delta, seg.phase)
        if key not in self._cache:
            h = segment_hamiltonian(self.register, seg, self.realization, index).toarray()
            self._cache[key] = scipy.linalg.eigh(h)
        return self._cache[key]

    def evolve(self, schedule: PulseSchedule, keep_trace: bool = False):
        n = self.register.n_atoms
        amps = initial_state(self.register, self.realization).amplitudes
        history = [StateVector._wrap(amps, n)] if keep_trace else None
        for k, seg in enumerate(schedule):
            if seg.duration > 0.0:
                values, vectors = self._spectrum(seg, k)
                amps = vectors @ (np.exp(-1j * seg.duration * values) * (vectors.conj().T @ amps))
            if keep_trace:
                history.append(StateVector._wrap(amps, n))
        final = StateVector._wrap(amps, n)
        return (final, history) if keep_trace else final


def _fresh_seed_sequence(seed) -> np.random.SeedSequence:
    # spawn() advances its sequence, so children always come from a copy
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key, pool_size=seed.pool_size)
    return np.random.SeedSequence(seed)


class TrajectoryEnsemble:
    """Fixed set of noise realizations evaluated at arbitrary angles.

    Reusing the realizations at every angle vector gives common random
    numbers, so finite differences of the mean energy are smooth.
    Trajectory ``k`` draws its noise from the ``k``-th child of
    ``SeedSequence(seed)``; :seed may be an int, None or a
    ``SeedSequence``, which is not advanced.
    """

    def __init__(
        self,
        register: AtomRegister,
        config: AnalogNoiseConfig,
        n_traj: int,
        n_segments: int,
        seed=None,
        *,
        omega_min: float = OMEGA_MIN_DEFAULT,
        omega_max: float = OMEGA_MAX_DEFAULT,
        max_segment_duration: float = DEFAULT_MAX_SEGMENT_DURATION,
    ):
        if n_traj < 1:
            raise ValueError(f"n_traj must be at least 1, got {n_traj}")
        self.register = register
        self.config = config
        self.omega_min = omega_min
        self.omega_max = omega_max
        self.max_segment_duration = max_segment_duration
        self.n_segments = n_segments
        children = _fresh_seed_sequence(seed).spawn(n_traj)
        self.realizations = [sample_noise(config, register, n_segments, s) for s in children]
        self._spectral = register.n_atoms <= SPECTRAL_MAX_QUBITS
        self._propagators = (
            [SpectralPropagator(register, r) for r in self.realizations] if self._spectral else []
        )

    @property
    def n_traj(self) -> int:
        return len(self.realizations)

    def schedule(self, params) -> PulseSchedule:
        return compile_schedule(
            params,
            self.register,
            omega_min=self.omega_min,
            omega_max=self.omega_max,
            max_segment_duration=self.max_segment_duration,
        )

    def states(self, params, keep_trace: bool = False) -> list:
        """Final state (or ``(final, history)``) of every trajectory."""
        schedule = self.schedule(params)
        if len(schedule) > self.n_segments:
            raise ValueError(
                f"schedule has {len(schedule)} segments, the ensemble was sampled for {self.n_segments}"
            )
        if self._spectral:
            return [p.evolve(schedule, keep_trace) for p in self._propagators]
        return [
            evolve_schedule(self.register, schedule, r, keep_trace=keep_trace, step_check=False)
            for r in self.realizations
        ]

    def energies(self, params, spec: TfimSpec) -> np.ndarray:
        h = cost_operator(spec)
        return np.array([states.expectation(psi, h) for psi in self.states(params)])


def average_density(vectors: Sequence[StateVector]) -> DensityMatrix:
    """Mean of ``|psi_k><psi_k|`` with compensated summation."""
    n = vectors[0].n_qubits
    check_n_qubits(n, high=MAX_DENSITY_QUBITS)
    total = np.zeros((2**n, 2**n), dtype=complex)
    carry = np.zeros_like(total)
    for psi in vectors:
        amps = psi.amplitudes
        term = np.outer(amps, amps.conj()) - carry
        updated = total + term
        carry = (updated - total) - term
        total = updated
    return DensityMatrix._wrap(total / len(vectors), n)


@dataclass
class MonteCarloResult:
    """Trajectory-averaged state and energy statistics.

    ``rho`` is None when the density matrix was not requested;
    ``energy`` and ``energy_se`` are None without a problem instance.
    """

    rho: Optional[DensityMatrix]
    energy: Optional[float]
    energy_se: Optional[float]
    n_traj: int
    energies: np.ndarray = field(default_factory=lambda: np.empty(0))


def standard_error(samples) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        return 0.0
    return float(np.std(samples, ddof=1) / math.sqrt(samples.size))


def monte_carlo_state(
    params,
    register: AtomRegister,
    config: AnalogNoiseConfig,
    n_traj: int,
    seed=None,
    *,
    spec: Optional[TfimSpec] = None,
    density: bool = True,
    omega_min: float = OMEGA_MIN_DEFAULT,
    omega_max: float = OMEGA_MAX_DEFAULT,
    max_segment_duration: float = DEFAULT_MAX_SEGMENT_DURATION,
) -> MonteCarloResult:
    """Average :n_traj noisy trajectories of the compiled ansatz.

    Parameters
    ----------
    params : QaoaParams or array_like
        QAOA angles.
    register : AtomRegister
        Atom layout.
    config : AnalogNoiseConfig
        Active noise sources.
    n_traj : int
        Number of trajectories, at least 1.
    seed : int or SeedSequence, optional
        Master seed; trajectory seeds are spawned from it.
    spec : TfimSpec, optional
        When given, the mean energy and its standard error are reported.
    density : bool, optional
        Build the averaged density matrix (at most 10 atoms), defaults to
        True. Turn off for energy-only runs on up to 12 atoms.

    Returns
    -------
    MonteCarloResult
    """
    params = as_params(params)
    if density:
        check_n_qubits(register.n_atoms, low=2, high=MAX_DENSITY_QUBITS)
    ensemble = TrajectoryEnsemble(
        register,
        config,
        n_traj,
        2 * params.depth,
        seed,
        omega_min=omega_min,
        omega_max=omega_max,
        max_segment_duration=max_segment_duration,
    )
    vectors = ensemble.states(params)
    rho = average_density(vectors) if density else None
    energy = energy_se = None
    energies = np.empty(0)
    if spec is not None:
        if spec.n_qubits != register.n_atoms:
            raise ValueError("problem size does not match the register")
        h = cost_operator(spec)
        energies = np.array([states.expectation(psi, h) for psi in vectors])
        energy, energy_se = float(np.mean(energies)), standard_error(energies)
        logger.debug("analog MC: %d trajectories, E=%.6f +- %.2g", n_traj, energy, energy_se)
    return MonteCarloResult(rho, energy, energy_se, n_traj, energies)


def spam_measure(
    distribution, config: AnalogNoiseConfig, seed=None, shots: Optional[int] = None
) -> np.ndarray:
    """Apply measurement errors to a basis distribution.

    Each atom in the ground state reads as excited with probability
    ``spam_eps`` and each excited atom reads as ground with probability
    ``spam_eps_prime``. With :shots, returns multinomial frequencies drawn
    with :seed instead of the exact corrupted distribution.

    Examples
    --------
    >>> from qaoa_qng.rydberg import AnalogNoiseConfig, spam_measure
    >>> spam_measure([1.0, 0.0], AnalogNoiseConfig(spam_eps=0.01)).round(12).tolist()
    [0.99, 0.01]
    """
    probs = check_distribution(distribution)
    n = probs.shape[0].bit_length() - 1
    readout = ReadoutError.from_probabilities([config.spam_eps] * n, [config.spam_eps_prime] * n)
    corrupted = apply_readout(probs, readout)
    if shots is None:
        return corrupted
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    rng = np.random.default_rng(seed)
    corrupted = np.clip(corrupted, 0.0, None)
    return rng.multinomial(shots, corrupted / corrupted.sum()) / shots


# -- backend settings


@dataclass(frozen=True)
class AnalogSettings:
    """Register layout, drive range and trajectory count of an analog run.

    ``spacing_um`` defaults to :func:`default_spacing`.
    """

    layout: str = "ring"
    spacing_um: Optional[float] = None
    c6: float = C6_DEFAULT
    omega_min: float = OMEGA_MIN_DEFAULT
    omega_max: float = OMEGA_MAX_DEFAULT
    n_traj: int = 20
    max_segment_duration: float = DEFAULT_MAX_SEGMENT_DURATION
    noise: AnalogNoiseConfig = field(default_factory=AnalogNoiseConfig)

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {LAYOUTS}, got '{self.layout}'")
        if self.spacing_um is not None:
            check_positive(self.spacing_um, "spacing_um")
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be at least 1, got {self.n_traj}")

    @property
    def spacing(self) -> float:
        if self.spacing_um is not None:
            return float(self.spacing_um)
        return default_spacing(self.c6, self.omega_min, self.omega_max)

    def build_register(self, n_atoms: int) -> AtomRegister:
        if self.layout == "ring":
            return build_ring_register(n_atoms, self.spacing, self.c6)
        return build_chain_register(n_atoms, self.spacing, self.c6)

    @classmethod
    def from_dict(cls, data: dict) -> "AnalogSettings":
        data = dict(data)
        noise_keys = set(AnalogNoiseConfig.__dataclass_fields__)
        noise = {k: data.pop(k) for k in list(data) if k in noise_keys}
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise KeyError(f"unknown analog keys {sorted(unknown)}")
        return cls(noise=AnalogNoiseConfig.from_dict(noise), **data)

    def to_dict(self) -> dict:
        data = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "noise"}
        data.update(self.noise.to_dict())
        return data
