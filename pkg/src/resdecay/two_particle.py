"""Two identical non-interacting particles initially in combinations of box states.

Non-interacting evolution factorizes, so every kind is evaluated as an (anti)symmetrized
product of single-particle propagated states; the pole double sums with coefficients B_pq
are kept for cross-checks.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from resdecay.enums import PropagatorForm, StateKind
from resdecay.exceptions import DomainError, InvalidStateError
from resdecay.overlaps import OverlapSet, box_state_value
from resdecay.poles import PoleTable
from resdecay.propagator import DEFAULT_SWITCH_TIME, AsymptoticCoefficients, PropagatedState, h_coefficients, resolve_form
from resdecay.special_functions import ComplexLike, moshinsky

_logger = logging.getLogger('resdecay.two_particle')

SQRT2 = math.sqrt(2)


@dataclass(frozen=True)
class InitialStateSpec:
    """Initial state over infinite-box quantum numbers

    :param kind: State class; `single` is one particle in ψ_alpha
    :param alpha: First box quantum number
    :param beta: Second box quantum number, entangled kinds only
    """

    kind: StateKind
    alpha: int
    beta: Optional[int] = None

    def __post_init__(self) -> None:
        if self.alpha < 1 or (self.beta is not None and self.beta < 1):
            raise InvalidStateError(f'Box quantum numbers must be positive, got α={self.alpha}, β={self.beta}')
        if self.kind.entangled and self.beta is None:
            raise InvalidStateError(f'`{self.kind.value}` state requires `beta`')
        if self.kind == StateKind.entangled_antisymmetric and self.alpha == self.beta:
            raise InvalidStateError('Antisymmetric state with α = β vanishes identically')

    @property
    def box_indices(self) -> Tuple[int, ...]:
        if self.kind.entangled:
            return (self.alpha, self.beta)  # type: ignore
        return (self.alpha,)

    @property
    def sign(self) -> int:
        return self.kind.parity


def initial_wavefunction(spec: InitialStateSpec, y1, y2, radius: float):
    """Ψ(y₁, y₂, 0)"""
    if spec.kind == StateKind.single:
        raise InvalidStateError('Single-particle state has no two-particle wave function')
    if not spec.kind.entangled:
        return box_state_value(spec.alpha, y1, radius) * box_state_value(spec.alpha, y2, radius)
    cross = box_state_value(spec.alpha, y1, radius) * box_state_value(spec.beta, y2, radius)  # type: ignore
    swap = box_state_value(spec.beta, y1, radius) * box_state_value(spec.alpha, y2, radius)  # type: ignore
    return (cross + spec.sign * swap) / SQRT2


@dataclass(frozen=True)
class TwoParticleCoefficients:
    """B_pq over the full mirrored pole set

    The extended coefficients run over (u_1..u_{-N}, r), the last basis function carrying the
    t^{-3/2} term of the omitted poles.
    """

    B: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, spec: InitialStateSpec, overlaps: OverlapSet, extended: bool = False) -> 'TwoParticleCoefficients':
        def vector(s: int) -> np.ndarray:
            return overlaps.extended_C(s) if extended else overlaps.C[s]

        c_alpha = vector(spec.alpha)
        if spec.kind.entangled:
            c_beta = vector(spec.beta)  # type: ignore
            outer = np.outer(c_alpha, c_beta)
            # M ± Mᵀ keeps the antisymmetric diagonal exactly zero
            B = (outer + spec.sign * outer.T) / SQRT2
        else:
            B = np.outer(c_alpha, c_alpha)
        B.setflags(write=False)
        return cls(B=B)

    @property
    def diagonal_defect(self) -> float:
        return float(np.max(np.abs(np.diag(self.B)), initial=0.0))


@dataclass(frozen=True)
class TwoParticleSystem:
    """Immutable tables for one (model, initial state) pair"""

    table: PoleTable
    spec: InitialStateSpec
    overlaps: OverlapSet
    states: Dict[int, PropagatedState] = field(repr=False)
    switch_time: float

    @classmethod
    def build(cls, table: PoleTable, spec: InitialStateSpec, switch_time: Optional[float] = None) -> 'TwoParticleSystem':
        overlaps = OverlapSet.build(table, spec.box_indices)
        states = {s: PropagatedState.create(table, s, overlaps.C[s]) for s in spec.box_indices}
        if switch_time is None:
            switch_time = DEFAULT_SWITCH_TIME * table.tau1
        return cls(table=table, spec=spec, overlaps=overlaps, states=states, switch_time=switch_time)

    @property
    def radius(self) -> float:
        return self.table.params.radius

    @property
    def coefficients(self) -> TwoParticleCoefficients:
        return TwoParticleCoefficients.build(self.spec, self.overlaps)

    @property
    def extended_coefficients(self) -> TwoParticleCoefficients:
        return TwoParticleCoefficients.build(self.spec, self.overlaps, extended=True)

    def combine(self, phi: Dict[int, Tuple[np.ndarray, np.ndarray]]):
        """(Anti)symmetrized product of per-state values at (r1, r2)"""
        spec = self.spec
        if spec.kind == StateKind.single:
            raise InvalidStateError('Single-particle state has no two-particle wave function')
        a1, a2 = phi[spec.alpha]
        if not spec.kind.entangled:
            return a1 * a2
        b1, b2 = phi[spec.beta]  # type: ignore
        return (a1 * b2 + spec.sign * b1 * a2) / SQRT2


def _check_points(system: TwoParticleSystem, r1, r2) -> Tuple[np.ndarray, np.ndarray]:
    r1_, r2_ = np.broadcast_arrays(np.asarray(r1, dtype=float), np.asarray(r2, dtype=float))
    radius = system.radius
    for r in (r1_, r2_):
        if np.any(r < 0) or np.any(r > radius * (1 + 1e-12)):
            raise DomainError(f'Two-particle wave functions are evaluated on [0, {radius}]² only')
    return r1_, r2_


def _unwrap(value):
    value = np.asarray(value)
    return complex(value) if value.ndim == 0 else value


def psi_exact(system: TwoParticleSystem, r1, r2, t: float, tail_corrected: bool = False):
    """Σ_{p,q} B_pq u_p(r1) u_q(r2) M(z_p) M(z_q) in product form, O(N) per point"""
    r1_, r2_ = _check_points(system, r1, r2)
    phi = {s: (state.exact(r1_, t, tail_corrected), state.exact(r2_, t, tail_corrected)) for s, state in system.states.items()}
    return _unwrap(system.combine(phi))


def psi_exact_double_sum(system: TwoParticleSystem, r1: float, r2: float, t: float) -> complex:
    """Literal O(N²) double sum over B_pq"""
    _check_points(system, r1, r2)
    m = moshinsky(system.table.kappa, t)
    v1 = system.table.values(r1) * m
    v2 = system.table.values(r2) * m
    return complex(v1 @ system.coefficients.B @ v2)


@dataclass(frozen=True)
class AsymptoticTerms:
    """Leading contributions of the long-time wave function"""

    exponential: ComplexLike
    power: ComplexLike
    mixed: ComplexLike

    @property
    def total(self) -> ComplexLike:
        return self.exponential + self.power + self.mixed


def _exponentials(system: TwoParticleSystem, r1_: np.ndarray, r2_: np.ndarray, t: float) -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
    return {s: (state.exponential(r1_, t), state.exponential(r2_, t)) for s, state in system.states.items()}


def asymptotic_terms(system: TwoParticleSystem, r1, r2, t: float) -> AsymptoticTerms:
    """Pure exponential, pure inverse-power and mixed terms, per kind

    Factorized and entangled symmetric states keep the t^{-3/2} propagator term (pure t⁻³
    contribution); the antisymmetric state needs the propagator up to t^{-7/2}, because its
    t⁻³ and t⁻⁴ contributions cancel exactly and a t⁻⁵ term remains.
    """
    if t <= 0:
        raise DomainError(f'Asymptotic form needs positive time, got `{t}`')
    spec = system.spec
    if spec.kind == StateKind.single:
        raise InvalidStateError('Single-particle state has no two-particle wave function')
    r1_, r2_ = _check_points(system, r1, r2)
    h1 = h_coefficients(system.table.params)[0]
    eta = AsymptoticCoefficients()
    D, G = system.overlaps.D, system.overlaps.G
    E = _exponentials(system, r1_, r2_, t)
    exponential = system.combine(E)
    prefactor = -1j * eta[1] / (h1 * t ** 1.5)

    def reflected(s: int, sign: int):
        e1, e2 = E[s]
        return r2_ * e1 + sign * r1_ * e2

    alpha = spec.alpha
    if spec.kind == StateKind.factorized_symmetric:
        power = -r1_ * r2_ * D[alpha] ** 2 * eta[1] ** 2 / (h1 ** 2 * t ** 3)
        mixed = prefactor * D[alpha] * reflected(alpha, 1)
    elif spec.kind == StateKind.entangled_symmetric:
        beta = spec.beta
        power = -SQRT2 * r1_ * r2_ * D[alpha] * D[beta] * eta[1] ** 2 / (h1 ** 2 * t ** 3)
        mixed = prefactor / SQRT2 * (D[beta] * reflected(alpha, 1) + D[alpha] * reflected(beta, 1))
    else:
        beta = spec.beta
        coefficient = antisymmetric_power_coefficient()
        geometry = (r1_ ** 3 * r2_ - r2_ ** 3 * r1_) * (D[beta] * G[alpha] - G[beta] * D[alpha])
        power = coefficient * geometry / (SQRT2 * h1 ** 2 * t ** 5)
        mixed = prefactor / SQRT2 * (D[beta] * reflected(alpha, -1) - D[alpha] * reflected(beta, -1))

    power = power + np.zeros_like(exponential)
    return AsymptoticTerms(exponential=_unwrap(exponential), power=_unwrap(power), mixed=_unwrap(mixed))


def antisymmetric_power_coefficient() -> complex:
    """η₂² - 10η₁η₃/3"""
    eta = AsymptoticCoefficients()
    return eta[2] ** 2 - 10 * eta[1] * eta[3] / 3


def psi_asymptotic(system: TwoParticleSystem, r1, r2, t: float):
    return asymptotic_terms(system, r1, r2, t).total


def psi_asymptotic_generic(system: TwoParticleSystem, r1, r2, t: float, m_max: int = 3):
    """(Anti)symmetrized product of single-particle long-time forms, all cross terms kept"""
    if t <= 0:
        raise DomainError(f'Asymptotic form needs positive time, got `{t}`')
    r1_, r2_ = _check_points(system, r1, r2)
    phi = {s: (state.asymptotic(r1_, t, m_max), state.asymptotic(r2_, t, m_max)) for s, state in system.states.items()}
    return _unwrap(system.combine(phi))


def psi_power_generic(system: TwoParticleSystem, r1, r2, t: float, m_max: int = 3):
    """Pure inverse-power part of the generic long-time form"""
    r1_, r2_ = _check_points(system, r1, r2)
    phi = {s: (state.power(r1_, t, m_max), state.power(r2_, t, m_max)) for s, state in system.states.items()}
    return _unwrap(system.combine(phi))


def fit_power_coefficient(system: TwoParticleSystem, r1: float, r2: float, t: float = 1e4) -> complex:
    """Coefficient of the antisymmetric t⁻⁵ term recovered from the generic m ≤ 3 expansion

    Comparable with `antisymmetric_power_coefficient`. The t⁻⁶ remainder is removed by
    Richardson extrapolation between t and 2t; much later times lose the t⁻⁵ term to rounding
    in the cancelling t⁻³ products.
    """
    spec = system.spec
    if spec.kind != StateKind.entangled_antisymmetric:
        raise InvalidStateError('Power coefficient fit is defined for the antisymmetric state only')
    D, G = system.overlaps.D, system.overlaps.G
    h1 = h_coefficients(system.table.params)[0]
    geometry = (r1 ** 3 * r2 - r2 ** 3 * r1) * (D[spec.beta] * G[spec.alpha] - G[spec.beta] * D[spec.alpha])  # type: ignore
    if geometry == 0:
        raise DomainError('Antisymmetric power term vanishes at the requested point')
    scaled = [complex(psi_power_generic(system, r1, r2, x, 3)) * SQRT2 * h1 ** 2 * x ** 5 / geometry for x in (t, 2 * t)]
    return 2 * scaled[1] - scaled[0]


def evolve_pair(system: TwoParticleSystem, r1, r2, t: float, form: PropagatorForm = PropagatorForm.auto):
    """Wave function in the requested form, `auto` switching at the system switch time

    Pole forms are tail-corrected like the observables built from them.
    """
    resolved = resolve_form(form, t, system.switch_time)
    if resolved in (PropagatorForm.exact, PropagatorForm.split):
        return psi_exact(system, r1, r2, t, tail_corrected=True), resolved
    return psi_asymptotic(system, r1, r2, t), resolved


def asymptotic_threshold(
    system: TwoParticleSystem,
    r1: float,
    r2: float,
    times: Sequence[float],
    tolerance: float = 0.01,
) -> Optional[float]:
    """Earliest scanned time beyond which the asymptotic form stays within `tolerance` of the exact one

    The exact form is tail-corrected, otherwise its truncation error grows relative to the
    decaying wave function.
    """
    threshold: Optional[float] = None
    for t in sorted(times):
        exact = psi_exact(system, r1, r2, t, tail_corrected=True)
        deviation = abs(psi_asymptotic(system, r1, r2, t) - exact) / abs(exact)
        if deviation <= tolerance:
            threshold = t if threshold is None else threshold
        else:
            threshold = None
    _logger.info('Asymptotic threshold for `%s`: %s', system.spec.kind.value, threshold)
    return threshold
