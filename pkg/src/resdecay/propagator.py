"""Single-particle retarded propagator of the δ-shell model.

Three representations are provided: the full pole sum over Moshinsky functions, the
split into proper-pole exponentials plus a remainder integral, and the long-time form
where the remainder is replaced by its steepest-descent series around k = 0.
"""
import cmath
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from resdecay.enums import PropagatorForm
from resdecay.exceptions import DomainError, PoleProximityError, RepresentationError
from resdecay.overlaps import BoxState, box_moment, overlap_vector
from resdecay.poles import ModelParams, PoleTable
from resdecay.special_functions import moshinsky, moshinsky_split

DENOMINATOR_TOLERANCE = 1e-13
DEFAULT_SWITCH_TIME = 10.0
TAIL_FACTOR = -cmath.exp(1j * math.pi / 4) / (2 * math.sqrt(math.pi))
SUBLEADING_TAIL_FACTOR = cmath.exp(3j * math.pi / 4) / (4 * math.sqrt(math.pi))

_logger = logging.getLogger('resdecay.propagator')

# NOTE: principal branches, √i = exp(iπ/4)
ETA = (
    1 / cmath.sqrt(4j * math.pi),
    -cmath.sqrt(1j / (64 * math.pi)),
    -1 / cmath.sqrt(4096j * math.pi),
)


@dataclass(frozen=True)
class AsymptoticCoefficients:
    eta1: complex = ETA[0]
    eta2: complex = ETA[1]
    eta3: complex = ETA[2]

    def __getitem__(self, m: int) -> complex:
        return (self.eta1, self.eta2, self.eta3)[m - 1]


@dataclass(frozen=True)
class GreensDerivatives:
    """Odd k-derivatives of G⁺(r, r'; k) at k = 0"""

    d1: complex
    d3: complex
    d5: complex
    h1: float
    h2: float
    h3: float
    h4: float

    def order(self, n: int) -> complex:
        return {1: self.d1, 3: self.d3, 5: self.d5}[n]


def h_coefficients(params: ModelParams) -> Tuple[float, float, float, float]:
    lam, a = params.strength, params.radius
    h1 = (1 + lam * a) ** 2
    h2 = 8 * lam * a ** 3 + 2 * lam ** 2 * a ** 4
    h3 = -120 * lam ** 3 * a ** 5 - 80 * lam * a ** 3 - 20 * lam ** 4 * a ** 6 - 180 * lam ** 2 * a ** 4
    h4 = 192 * lam ** 3 * a ** 7 - 96 * lam * a ** 5 + 24 * lam ** 4 * a ** 8 + 432 * lam ** 2 * a ** 6
    return h1, h2, h3, h4


def _check_points(r: float, rp: float, radius: float) -> None:
    for x in (r, rp):
        if not 0 <= x <= radius * (1 + 1e-12):
            raise DomainError(f'Propagator is evaluated on the interior [0, {radius}] only, got `{x}`')
    if min(r, rp) >= radius:
        raise DomainError('Pole expansions diverge at r = r\' = a')


def greens_denominator(k: complex, params: ModelParams) -> complex:
    """k + λ·sin(ka)·exp(ika), proportional to the pole residual 2ik + λ(exp(2ika) - 1)"""
    a = params.radius
    return k + params.strength * cmath.sin(k * a) * cmath.exp(1j * k * a)


def greens_outgoing(r: float, rp: float, k: complex, params: ModelParams) -> complex:
    """G⁺(r, r'; k) of the δ-shell, symmetric in r and r'"""
    _check_points(r, rp, params.radius)
    r, rp = min(r, rp), max(r, rp)
    a, lam = params.radius, params.strength
    denominator = greens_denominator(k, params)
    if abs(denominator) < DENOMINATOR_TOLERANCE:
        raise PoleProximityError(k, denominator)
    numerator = k * cmath.exp(1j * k * rp) - lam * cmath.sin(k * (rp - a)) * cmath.exp(1j * k * a)
    return -cmath.sin(k * r) / k * numerator / denominator


def greens_derivatives_at_zero(r: float, rp: float, params: ModelParams) -> GreensDerivatives:
    _check_points(r, rp, params.radius)
    h1, h2, h3, h4 = h_coefficients(params)
    rr = r * rp
    s2 = r ** 2 + rp ** 2
    d1 = -1j * rr / h1
    d3 = 1j * rr * (h1 * s2 - h2) / h1 ** 2
    d5 = -1j * rr / (3 * h1 ** 3) * (h1 ** 2 * (3 * r ** 4 + 3 * rp ** 4 + 10 * r ** 2 * rp ** 2) + h3 * s2 + h4)
    return GreensDerivatives(d1=d1, d3=d3, d5=d5, h1=h1, h2=h2, h3=h3, h4=h4)


def _check_time(t: float, strict: bool = False) -> None:
    if t < 0 or (strict and t == 0):
        raise DomainError(f'Time must be {"positive" if strict else "non-negative"}, got `{t}`')


def _require_poles(table: PoleTable) -> None:
    if not table.size:
        raise RepresentationError('Pole expansions need at least one pole; free evolution has only the asymptotic form')


def pole_exponentials(table: PoleTable, t: float) -> np.ndarray:
    """exp(-iκ_p²t) = exp(-iℰ_p t)·exp(-Γ_p t/2) for proper poles"""
    kappa = table.proper_kappa
    return np.exp(-1j * kappa * kappa * t)


def settling_time(table: PoleTable) -> float:
    """2τ_N, the amplitude e-folding time of the fastest kept pole

    Omitted poles decay faster still; after a few settling times their Moshinsky functions
    reduce to the t^{-1/2} asymptote the truncation tail is built from.
    """
    _require_poles(table)
    return 2 * min(state.pole.lifetime for state in table.states)


def settling_weight(table: PoleTable, t: float) -> float:
    """1 - exp(-t/(2τ_N)); 0 at t = 0 and 1 once the omitted poles have settled"""
    _check_time(t)
    return -math.expm1(-t / settling_time(table))


def tail_vector(table: PoleTable, t: float) -> np.ndarray:
    """Truncation tail of every Moshinsky function through order t^{-3/2}

    M(z) ≈ 1/(2√π z) - 1/(4√π z³) at large |z| gives L_p·t^{-1/2} + K_p·t^{-3/2} with
    L_p = -exp(iπ/4)/(2√π κ_p) and K_p = exp(3iπ/4)/(4√π κ_p³). The complete pole sum has no
    t^{-1/2} term, so a truncated sum carries minus that of the omitted poles; its t^{-3/2}
    term is restored by `tail_slope`. The second order is gated by the squared settling weight.
    """
    if t <= 0:
        return np.zeros(table.kappa.shape, dtype=complex)
    weight = settling_weight(table, t)
    kappa = table.kappa
    return weight * TAIL_FACTOR / (kappa * math.sqrt(t)) + weight ** 2 * SUBLEADING_TAIL_FACTOR / (kappa ** 3 * t ** 1.5)


def tail_slope(table: PoleTable, t: float) -> complex:
    """Coefficient of D_s·r the complete pole sum carries at order t^{-3/2}

    Σ_p u_p(r)u_p(y)K_p = η₁·∂G⁺/∂k|₀ = -iη₁ry/h₁, so box state ψ_s picks up -iη₁D_s r/h₁.
    """
    if t <= 0:
        return 0j
    h1 = h_coefficients(table.params)[0]
    return settling_weight(table, t) ** 2 * ETA[0] * -1j / h1 * t ** -1.5


def extended_moshinsky_vector(table: PoleTable, t: float) -> np.ndarray:
    """Tail-corrected M(z_p) with `tail_slope` appended, weights over the basis (u_1..u_{-N}, r)"""
    return np.append(moshinsky_vector(table, t, tail_corrected=True), tail_slope(table, t))


def moshinsky_vector(table: PoleTable, t: float, tail_corrected: bool = False) -> np.ndarray:
    """M(z_p) over the full set, optionally with the truncation tail removed"""
    m = np.asarray(moshinsky(table.kappa, t))
    if tail_corrected:
        m = m - tail_vector(table, t)
    return m



def propagator_exact(r: float, rp: float, t: float, table: PoleTable) -> complex:
    """g(r, r'; t) = Σ_{p=±1..±N} u_p(r)u_p(r')M(z_p)"""
    _check_points(r, rp, table.params.radius)
    _check_time(t)
    _require_poles(table)
    u = table.values(r) * table.values(rp)
    return complex(np.sum(u * moshinsky(table.kappa, t)))


def split_terms(r: float, rp: float, t: float, table: PoleTable) -> Tuple[complex, complex]:
    """(proper-pole exponential sum, remainder integral I(r, r'; t))"""
    _check_points(r, rp, table.params.radius)
    _check_time(t)
    _require_poles(table)
    if not table.verify_proper():
        raise RepresentationError('Split representation requires proper poles, Re κ > |Im κ|')
    n = table.size
    u = table.values(r) * table.values(rp)
    exponential, reflected = moshinsky_split(table.proper_kappa, t)
    mirror = moshinsky(table.kappa[n:], t)
    pole_sum = complex(np.sum(u[:n] * exponential))
    # NOTE: M(z_p) = e_p - M(-z_p), so the remainder collects -M(-z_p) of proper and M(z_{-p}) of mirror poles
    integral = complex(np.sum(u[:n] * reflected) + np.sum(u[n:] * mirror))
    return pole_sum, integral


def propagator_split(r: float, rp: float, t: float, table: PoleTable) -> complex:
    pole_sum, integral = split_terms(r, rp, t, table)
    return pole_sum + integral


def propagator_asymptotic(r: float, rp: float, t: float, table: PoleTable, m_max: int = 1) -> complex:
    """Proper-pole exponentials plus Σ_{m ≤ m_max} η_m t^{-(2m+1)/2} ∂^{2m-1}G⁺/∂k^{2m-1}|₀"""
    if m_max not in (1, 2, 3):
        raise DomainError(f'Steepest-descent order must be 1, 2 or 3, got `{m_max}`')
    _check_time(t, strict=True)
    derivatives = greens_derivatives_at_zero(r, rp, table.params)
    eta = AsymptoticCoefficients()
    power = sum(eta[m] * t ** (-(2 * m + 1) / 2) * derivatives.order(2 * m - 1) for m in range(1, m_max + 1))
    if not table.size:
        return complex(power)
    u = table.values(r)[: table.size] * table.values(rp)[: table.size]
    return complex(np.sum(u * pole_exponentials(table, t)) + power)


@dataclass(frozen=True)
class PropagatedState:
    """A box state ψ_s evolved with the single-particle propagator

    The r'-integral of every representation is done analytically: pole terms pick up C_{p,s},
    power terms pick up the odd moments ∫ yⁿ ψ_s.
    """

    table: PoleTable
    s: int
    C: np.ndarray

    @classmethod
    def create(cls, table: PoleTable, s: int, C: Optional[np.ndarray] = None) -> 'PropagatedState':
        BoxState(s, table.params.radius)
        if C is None:
            C = overlap_vector(table, s) if table.size else np.zeros(0, dtype=complex)
        return cls(table=table, s=s, C=C)

    @property
    def moments(self) -> Dict[int, float]:
        return {n: box_moment(self.s, n, self.table.params.radius) for n in (1, 3, 5)}

    def exact(self, r, t: float, tail_corrected: bool = False):
        """Σ_p C_{p,s} u_p(r) M(z_p)

        With `tail_corrected` the sum is completed through order t^{-3/2}: the truncation tail
        is removed from every Moshinsky function and the omitted poles' share of η₁t^{-3/2}f₁(r)
        is added back, see `tail_vector` and `tail_slope`.
        """
        _check_time(t)
        _require_poles(self.table)
        r_ = np.asarray(r, dtype=float)
        u = self.table.values(r_)
        weights = self.C * moshinsky_vector(self.table, t, tail_corrected)
        value = np.tensordot(weights, u, axes=1)
        if tail_corrected:
            value = value + tail_slope(self.table, t) * self.moments[1] * r_
        return value

    def split(self, r, t: float):
        _check_time(t)
        _require_poles(self.table)
        if not self.table.verify_proper():
            raise RepresentationError('Split representation requires proper poles, Re κ > |Im κ|')
        n = self.table.size
        u = self.table.values(r)
        exponential, reflected = moshinsky_split(self.table.proper_kappa, t)
        weights = np.concatenate([self.C[:n] * (exponential + reflected), self.C[n:] * moshinsky(self.table.kappa[n:], t)])
        return np.tensordot(weights, u, axes=1)

    def exponential(self, r, t: float):
        """Σ_{p ≥ 1} C_{p,s} u_p(r) e^{-iℰ_p t}e^{-Γ_p t/2}"""
        n = self.table.size
        r_ = np.asarray(r, dtype=float)
        if not n:
            return np.zeros(r_.shape, dtype=complex)
        u = self.table.values(r_)[:n]
        return np.tensordot(self.C[:n] * pole_exponentials(self.table, t), u, axes=1)

    def power_profile(self, r, m: int):
        """f_m(r) = ∫₀ᵃ ∂^{2m-1}G⁺(r, y; 0) ψ_s(y) dy"""
        h1, h2, h3, h4 = h_coefficients(self.table.params)
        moments = self.moments
        D, G, H = moments[1], moments[3], moments[5]
        r_ = np.asarray(r, dtype=float)
        if m == 1:
            return -1j * r_ * D / h1
        if m == 2:
            return 1j * r_ * (h1 * (r_ ** 2 * D + G) - h2 * D) / h1 ** 2
        if m == 3:
            bracket = h1 ** 2 * (3 * r_ ** 4 * D + 3 * H + 10 * r_ ** 2 * G) + h3 * (r_ ** 2 * D + G) + h4 * D
            return -1j * r_ / (3 * h1 ** 3) * bracket
        raise DomainError(f'Steepest-descent order must be 1, 2 or 3, got `{m}`')

    def power(self, r, t: float, m_max: int = 1):
        _check_time(t, strict=True)
        eta = AsymptoticCoefficients()
        return sum(eta[m] * t ** (-(2 * m + 1) / 2) * self.power_profile(r, m) for m in range(1, m_max + 1))

    def asymptotic(self, r, t: float, m_max: int = 1):
        return self.exponential(r, t) + self.power(r, t, m_max)


def resolve_form(form: PropagatorForm, t: float, switch_time: float) -> PropagatorForm:
    """`auto` means exact up to the switch time and asymptotic beyond it"""
    if form != PropagatorForm.auto:
        return form
    return PropagatorForm.exact if t <= switch_time else PropagatorForm.asymptotic


def evolve_single(
    table: PoleTable,
    s: int,
    r,
    t: float,
    form: PropagatorForm = PropagatorForm.exact,
    m_max: int = 1,
    switch_time: Optional[float] = None,
):
    """Ψ(r, t) of a particle initially in box state ψ_s"""
    try:
        form = PropagatorForm(form)
    except ValueError as e:
        raise DomainError(f'Unknown propagator form `{form}`') from e
    state = PropagatedState.create(table, s)
    if switch_time is None:
        switch_time = DEFAULT_SWITCH_TIME * table.tau1
    form = resolve_form(form, t, switch_time)
    if form == PropagatorForm.exact:
        return state.exact(r, t, tail_corrected=True)
    if form == PropagatorForm.split:
        return state.split(r, t)
    if form == PropagatorForm.asymptotic:
        return state.asymptotic(r, t, m_max)
    raise DomainError(f'Unknown propagator form `{form}`')
