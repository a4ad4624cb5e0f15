"""Complex poles of the δ-shell outgoing Green's function and their resonant states.

Units ħ = 2m = 1 throughout. Poles κ_p = a_p - i·b_p with p ≥ 1 are solved on the fourth
quadrant; the mirror set κ_{-p} = -κ_p* is always derived, never solved.
"""
import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from resdecay.exceptions import DegenerateStateError, DomainError, SolverError
from resdecay.special_functions import RealLike
from resdecay.utils import render_csv

DEFAULT_POLES = 20
MAX_ITERATIONS = 100
RESIDUAL_TOLERANCE = 1e-12
DUPLICATE_TOLERANCE = 1e-8
CONTINUATION_STRENGTH = 1e4
CONTINUATION_STEPS = 200

_logger = logging.getLogger('resdecay.poles')


@dataclass(frozen=True)
class ModelParams:
    """δ-shell model: V(r) = λ·δ(r - a)

    :param strength: Potential strength λ (1/length)
    :param radius: Shell radius a (length)
    :param n_poles: Number of proper poles kept in every resonance sum
    """

    strength: float
    radius: float = 1.0
    n_poles: int = DEFAULT_POLES

    def __post_init__(self) -> None:
        if not self.strength >= 0:
            raise DomainError(f'Potential strength must be non-negative, got `{self.strength}`')
        if not self.radius > 0:
            raise DomainError(f'Shell radius must be positive, got `{self.radius}`')
        if self.n_poles < 1:
            raise DomainError(f'Number of poles must be positive, got `{self.n_poles}`')

    @property
    def free(self) -> bool:
        return self.strength == 0

    @property
    def h1(self) -> float:
        return (1 + self.strength * self.radius) ** 2


@dataclass(frozen=True)
class Pole:
    index: int
    kappa: complex

    @property
    def energy(self) -> complex:
        return self.kappa * self.kappa

    @property
    def resonance_energy(self) -> float:
        return self.energy.real

    @property
    def width(self) -> float:
        return -2 * self.energy.imag

    @property
    def lifetime(self) -> float:
        return 1 / self.width

    @property
    def proper(self) -> bool:
        return self.kappa.real > abs(self.kappa.imag)

    def mirror(self) -> 'Pole':
        return Pole(index=-self.index, kappa=-self.kappa.conjugate())


@dataclass(frozen=True)
class ResonantState:
    pole: Pole
    amplitude: complex

    def mirror(self) -> 'ResonantState':
        # NOTE: u_{-p}(r) = u_p*(r) requires A_{-p} = -A_p* since sin(-κ*r) = -sin(κr)*
        return ResonantState(pole=self.pole.mirror(), amplitude=-self.amplitude.conjugate())

    def value(self, r: RealLike, radius: float):
        return state_value(self, r, radius)


def pole_residual(kappa: complex, params: ModelParams) -> complex:
    """2iκ + λ(exp(2iκa) - 1), zero at the poles"""
    return 2j * kappa + params.strength * (cmath.exp(2j * kappa * params.radius) - 1)


def pole_residual_derivative(kappa: complex, params: ModelParams) -> complex:
    return 2j + 2j * params.strength * params.radius * cmath.exp(2j * kappa * params.radius)


def residual_tolerance(params: ModelParams, kappa: complex = 0j) -> float:
    """Absolute tolerance on the residual, scaled with the size of its terms at κ"""
    return RESIDUAL_TOLERANCE * max(1.0, params.strength * params.radius, 2 * abs(kappa) * params.radius)


def _newton(seed: complex, params: ModelParams) -> Optional[complex]:
    kappa = seed
    for iteration in range(MAX_ITERATIONS):
        try:
            step = pole_residual(kappa, params) / pole_residual_derivative(kappa, params)
        except (ZeroDivisionError, OverflowError):
            return None
        kappa -= step
        if not cmath.isfinite(kappa):
            return None
        if abs(step) <= 4e-16 * max(1.0, abs(kappa)):
            _logger.debug('Newton converged from %s to %s in %s iterations', seed, kappa, iteration + 1)
            # NOTE: One more step to polish the last bit
            return kappa - pole_residual(kappa, params) / pole_residual_derivative(kappa, params)
    return None


def _in_strip(kappa: complex, n: int, params: ModelParams) -> bool:
    """Pole n has Re κ a in ((n - ½)π, (n + ½)π) and lies on the lower half plane"""
    x = kappa.real * params.radius / math.pi
    return n - 0.5 < x < n + 0.5 and kappa.imag < 0


def _continuation(n: int, params: ModelParams) -> Optional[complex]:
    """Follow pole n from the box limit down to the target strength"""
    start = max(CONTINUATION_STRENGTH, params.strength)
    kappa: Optional[complex] = n * math.pi / params.radius
    for strength in np.geomspace(start, params.strength, CONTINUATION_STEPS):
        step_params = ModelParams(strength=float(strength), radius=params.radius, n_poles=params.n_poles)
        kappa = _newton(complex(kappa), step_params)  # type: ignore
        if kappa is None:
            return None
    return kappa


def _solve_pole(n: int, params: ModelParams) -> complex:
    seed = complex(n * math.pi / params.radius, -0.1 / params.radius)
    kappa = _newton(seed, params)
    if kappa is None or not _in_strip(kappa, n, params):
        _logger.info('Newton from seed %s failed for pole %s, falling back to continuation in strength', seed, n)
        kappa = _continuation(n, params)
    if kappa is None or not _in_strip(kappa, n, params):
        raise SolverError(f'Newton iteration did not converge to pole {n}', seed)
    residual = abs(pole_residual(kappa, params))
    if residual > residual_tolerance(params, kappa):
        raise SolverError(f'Pole {n} residual {residual:.3e} exceeds tolerance', seed)
    return kappa


def search_rectangle(poles: Sequence[Pole], params: ModelParams) -> Tuple[float, float, float, float]:
    """(x_lo, x_hi, y_lo, y_hi) of the argument-principle contour, κ = 0 left outside"""
    depth = max((-p.kappa.imag for p in poles), default=0.0)
    x_lo = 0.25 * math.pi / params.radius
    x_hi = (params.n_poles + 0.5) * math.pi / params.radius
    return x_lo, x_hi, -(1.5 * depth + 1 / params.radius), 1 / params.radius


def count_zeros(params: ModelParams, rectangle: Tuple[float, float, float, float], points: int = 4000) -> int:
    """Number of zeros of the pole residual inside the rectangle, by the argument principle"""
    x_lo, x_hi, y_lo, y_hi = rectangle
    corners = [complex(x_lo, y_lo), complex(x_hi, y_lo), complex(x_hi, y_hi), complex(x_lo, y_hi)]
    residual = np.vectorize(lambda k: pole_residual(k, params))

    for _ in range(6):
        path = np.concatenate(
            [np.linspace(corners[i], corners[(i + 1) % 4], points, endpoint=False) for i in range(4)] + [corners[:1]]
        )
        values = residual(path)
        increments = np.angle(values[1:] / values[:-1])
        if np.max(np.abs(increments)) < math.pi / 4:
            return int(round(np.sum(increments) / (2 * math.pi)))
        points *= 2
    raise SolverError('Argument principle contour passes too close to a zero')


def solve_poles(params: ModelParams) -> List[Pole]:
    """Proper poles p = 1..N ordered by Re κ"""
    if params.free:
        _logger.warning('Potential strength is zero, outgoing Green\'s function has no poles')
        return []

    poles = [Pole(index=n, kappa=_solve_pole(n, params)) for n in range(1, params.n_poles + 1)]
    poles.sort(key=lambda p: p.kappa.real)

    for i, first in enumerate(poles):
        for second in poles[i + 1 :]:
            if abs(first.kappa - second.kappa) < DUPLICATE_TOLERANCE:
                raise SolverError(f'Poles {first.index} and {second.index} coincide', first.kappa)

    zeros = count_zeros(params, search_rectangle(poles, params))
    if zeros != params.n_poles:
        raise SolverError(f'Argument principle counts {zeros} zeros, {params.n_poles} poles solved')

    _logger.info('Solved %s poles for λ=%s, a=%s', len(poles), params.strength, params.radius)
    return poles


def normalization_denominator(kappa: complex, radius: float) -> complex:
    """∫₀ᵃ sin²(κr)dr + i·sin²(κa)/(2κ)"""
    return radius / 2 - cmath.sin(2 * kappa * radius) / (4 * kappa) + 1j * cmath.sin(kappa * radius) ** 2 / (2 * kappa)


def normalize_state(pole: Pole, params: ModelParams) -> ResonantState:
    denominator = normalization_denominator(pole.kappa, params.radius)
    if abs(denominator) < 1e-14:
        raise DegenerateStateError(pole.index, pole.kappa)
    amplitude = cmath.sqrt(1 / denominator)
    if amplitude.real < 0 or (amplitude.real == 0 and amplitude.imag < 0):
        amplitude = -amplitude
    return ResonantState(pole=pole, amplitude=amplitude)


def normalization_residual(state: ResonantState, radius: float) -> float:
    return abs(state.amplitude ** 2 * normalization_denominator(state.pole.kappa, radius) - 1)


def state_value(state: ResonantState, r: RealLike, radius: float):
    """u_p(r) = A_p·sin(κ_p r) on the interior 0 ≤ r ≤ a"""
    r_ = np.asarray(r, dtype=float)
    if np.any(r_ < 0) or np.any(r_ > radius * (1 + 1e-12)):
        raise DomainError(f'Resonant states are evaluated on [0, {radius}] only')
    value = state.amplitude * np.sin(state.pole.kappa * r_)
    return complex(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class PoleTable:
    """Solved proper poles with their normalized states and the derived mirror set

    Full-set arrays are ordered p = 1..N, -1..-N.
    """

    params: ModelParams
    states: Tuple[ResonantState, ...]
    kappa: np.ndarray = field(repr=False)
    amplitude: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, params: ModelParams) -> 'PoleTable':
        states = tuple(normalize_state(pole, params) for pole in solve_poles(params))
        full = list(states) + [state.mirror() for state in states]
        kappa = np.array([s.pole.kappa for s in full], dtype=complex)
        amplitude = np.array([s.amplitude for s in full], dtype=complex)
        indices = np.array([s.pole.index for s in full], dtype=int)
        for array in (kappa, amplitude, indices):
            array.setflags(write=False)
        return cls(params=params, states=states, kappa=kappa, amplitude=amplitude, indices=indices)

    @property
    def poles(self) -> Tuple[Pole, ...]:
        return tuple(state.pole for state in self.states)

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def proper_kappa(self) -> np.ndarray:
        return self.kappa[: self.size]

    @property
    def proper_amplitude(self) -> np.ndarray:
        return self.amplitude[: self.size]

    @property
    def mirror_positions(self) -> np.ndarray:
        """Position of state -p for every position of state p in full-set arrays"""
        n = self.size
        return np.concatenate([np.arange(n, 2 * n), np.arange(n)])

    @property
    def tau1(self) -> float:
        """System lifetime, the longest τ_p; 1 for the free model"""
        if not self.states:
            return 1.0
        return max(state.pole.lifetime for state in self.states)

    def pole(self, index: int) -> Pole:
        for state in self.states:
            if state.pole.index == abs(index):
                return state.pole if index > 0 else state.pole.mirror()
        raise DomainError(f'Pole `{index}` is not in the table of {self.size} poles')

    def values(self, r: RealLike) -> np.ndarray:
        """u_j(r) for every state of the full set; shape (2N,) + shape(r)"""
        r_ = np.asarray(r, dtype=float)
        if np.any(r_ < 0) or np.any(r_ > self.params.radius * (1 + 1e-12)):
            raise DomainError(f'Resonant states are evaluated on [0, {self.params.radius}] only')
        kappa = self.kappa.reshape(self.kappa.shape + (1,) * r_.ndim)
        amplitude = self.amplitude.reshape(kappa.shape)
        return amplitude * np.sin(kappa * r_)

    def verify_proper(self) -> bool:
        return all(state.pole.proper for state in self.states)

    def to_csv(self) -> str:
        header = ['p', 're_kappa', 'im_kappa', 'energy', 'width', 'lifetime', 're_amplitude', 'im_amplitude']
        rows = [
            (
                s.pole.index,
                s.pole.kappa.real,
                s.pole.kappa.imag,
                s.pole.resonance_energy,
                s.pole.width,
                s.pole.lifetime,
                s.amplitude.real,
                s.amplitude.imag,
            )
            for s in self.states
        ]
        meta = {'strength': self.params.strength, 'radius': self.params.radius, 'n_poles': self.params.n_poles}
        return render_csv(header, rows, meta)
