"""Survival and nonescape probabilities, decay series and regime slope fits"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.stats import linregress

from resdecay.enums import ExponentialVariant, PropagatorForm, SlopeAxis, StateKind
from resdecay.exceptions import DataIntegrityError, DomainError, FitError, RepresentationError
from resdecay.overlaps import box_state_value
from resdecay.propagator import extended_moshinsky_vector, pole_exponentials, resolve_form, settling_weight
from resdecay.two_particle import TwoParticleSystem, asymptotic_terms, initial_wavefunction, psi_asymptotic
from resdecay.utils import render_csv

ORDERING_TOLERANCE = 1e-12
# NOTE: S(0) and P(0) exceed 1 by the sum-rule defect of the truncated pole set
PROBABILITY_SLACK = 5e-3
LOWER_SLACK = 1e-12
PRECISION_FLOOR = 1e-250
MIN_FIT_POINTS = 8
QUADRATURE_ORDER = 96

_logger = logging.getLogger('resdecay.observables')


@dataclass(frozen=True)
class TimeGrid:
    """Log-spaced times in units of the system lifetime τ₁, or an explicit list of them"""

    t_min: float = 1e-3
    t_max: float = 1e3
    points: int = 400
    times: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if self.times is not None:
            if len(self.times) < 1 or any(t <= 0 for t in self.times):
                raise DomainError('Explicit grid times must be positive')
            if any(b <= a for a, b in zip(self.times, self.times[1:])):
                raise DomainError('Explicit grid times must be strictly increasing')
            return
        if not 0 < self.t_min < self.t_max or self.points < 2:
            raise DomainError(f'Invalid time grid {self.t_min}..{self.t_max} with {self.points} points')

    def relative(self) -> np.ndarray:
        if self.times is not None:
            return np.array(self.times, dtype=float)
        return np.geomspace(self.t_min, self.t_max, self.points)

    def absolute(self, tau1: float) -> np.ndarray:
        return self.relative() * tau1


def _weights(system: TwoParticleSystem, t: float, variant: Optional[ExponentialVariant] = None) -> Dict[int, np.ndarray]:
    """x_s over the basis (u_1..u_{-N}, r): tail-corrected Moshinsky weights, or the proper-pole exponentials alone"""
    table = system.table
    if variant is None:
        m = extended_moshinsky_vector(table, t)
    else:
        m = np.concatenate([pole_exponentials(table, t), np.zeros(table.size + 1, dtype=complex)])
    return {s: system.overlaps.extended_C(s) * m for s in system.spec.box_indices}


def _pair_tables(system: TwoParticleSystem, x: Dict[int, np.ndarray]) -> Tuple[Dict, Dict]:
    """a_ss' = ∫ψ_s' φ_s and p_ss' = ∫φ_s φ_s'* over one particle"""
    W = system.overlaps.extended_W
    C = {s: system.overlaps.extended_C(s) for s in x}
    a = {(s, q): complex(np.dot(x[s], C[q])) for s in x for q in x}
    p = {(s, q): complex(x[s] @ W @ np.conj(x[q])) for s in x for q in x}
    return a, p


def _projected_norms(system: TwoParticleSystem, x: Dict[int, np.ndarray]) -> Dict:
    """p_ss' restricted to the span of the box states the pole set resolves"""
    projection = system.overlaps.extended_projection
    projected = {s: projection @ x[s] for s in x}
    return {(s, q): complex(np.vdot(projected[q], projected[s])) for s in x for q in x}


def _combine(system: TwoParticleSystem, a: Dict, p: Dict) -> Tuple[complex, float]:
    spec = system.spec
    alpha = spec.alpha
    if spec.kind == StateKind.single:
        return a[alpha, alpha], p[alpha, alpha].real
    if spec.kind == StateKind.factorized_symmetric:
        return a[alpha, alpha] ** 2, (p[alpha, alpha] ** 2).real
    beta, sign = spec.beta, spec.sign
    amplitude = a[alpha, alpha] * a[beta, beta] + sign * a[alpha, beta] ** 2
    probability = p[alpha, alpha] * p[beta, beta] + sign * abs(p[alpha, beta]) ** 2
    return amplitude, probability.real


def _product_observables(system: TwoParticleSystem, x: Dict[int, np.ndarray], weight: float = 1.0) -> Tuple[complex, float]:
    """A and P from single-particle tables; `weight` < 1 blends in the box-projected norm"""
    a, p = _pair_tables(system, x)
    amplitude, probability = _combine(system, a, p)
    if weight < 1:
        _, projected = _combine(system, a, _projected_norms(system, x))
        probability = weight * probability + (1 - weight) * projected
    return amplitude, probability


def _quadrature(system: TwoParticleSystem, order: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(order or QUADRATURE_ORDER)
    radius = system.radius
    return radius / 2 * (nodes + 1), radius / 2 * weights


def _quadrature_observables(system: TwoParticleSystem, t: float, variant: Optional[ExponentialVariant] = None) -> Tuple[complex, float]:
    y, w = _quadrature(system)
    spec = system.spec
    if spec.kind == StateKind.single:
        state = system.states[spec.alpha]
        psi0 = box_state_value(spec.alpha, y, system.radius)
        psi = state.exponential(y, t) if variant else state.asymptotic(y, t, 1)
        return complex(np.sum(w * psi0 * psi)), float(np.sum(w * np.abs(psi) ** 2))

    y1, y2 = np.meshgrid(y, y, indexing='ij')
    ww = np.outer(w, w)
    psi0 = initial_wavefunction(spec, y1, y2, system.radius)
    if variant is None:
        psi = psi_asymptotic(system, y1, y2, t)
    else:
        terms = asymptotic_terms(system, y1, y2, t)
        psi = terms.exponential + terms.mixed
    return complex(np.sum(ww * psi0 * psi)), float(np.sum(ww * np.abs(psi) ** 2))


def _observables(system: TwoParticleSystem, t: float, form: PropagatorForm) -> Tuple[complex, float]:
    if form in (PropagatorForm.exact, PropagatorForm.split):
        if not system.table.size:
            raise RepresentationError('Pole expansions need at least one pole; free evolution has only the asymptotic form')
        return _product_observables(system, _weights(system, t), settling_weight(system.table, t))
    if form == PropagatorForm.asymptotic:
        return _quadrature_observables(system, t)
    raise DomainError(f'Form `{form.value}` must be resolved before evaluating observables')


def survival_amplitude(system: TwoParticleSystem, t: float, form: PropagatorForm = PropagatorForm.exact) -> complex:
    """A(t) = ∫∫ Ψ*(y₁, y₂, 0) Ψ(y₁, y₂, t)"""
    return _observables(system, t, resolve_form(form, t, system.switch_time))[0]


def survival_probability(system: TwoParticleSystem, t: float, form: PropagatorForm = PropagatorForm.exact) -> float:
    return abs(survival_amplitude(system, t, form)) ** 2


def nonescape_probability(system: TwoParticleSystem, t: float, form: PropagatorForm = PropagatorForm.exact) -> float:
    """P(t) = ∫₀ᵃ∫₀ᵃ |Ψ(r₁, r₂, t)|²

    Pole forms blend the norm of the tail-corrected sum with its projection on the box states
    n ≤ max(N, α, β), weighted by `settling_weight`. At t = 0 only the projection counts: near
    r = a the truncated sum overshoots the initial norm by about 1/N per particle.
    """
    return _observables(system, t, resolve_form(form, t, system.switch_time))[1]


def survival_amplitude_contracted(system: TwoParticleSystem, t: float) -> complex:
    """Σ_{p,q} B_pq² M_p M_q over the extended basis (u_1..u_{-N}, r)"""
    m = extended_moshinsky_vector(system.table, t)
    B = system.extended_coefficients.B
    return complex(m @ (B * B) @ m)


def nonescape_probability_contracted(system: TwoParticleSystem, t: float) -> float:
    """Σ B_pq B*_p'q' M_p M_q M*_p' M*_q' W_pp' W_qq' as matrix products of X = B ∘ (m mᵀ)"""
    m = extended_moshinsky_vector(system.table, t)
    X = system.extended_coefficients.B * np.outer(m, m)
    W = system.overlaps.extended_W
    probability = float(np.sum(X * (W @ np.conj(X) @ W.T)).real)
    weight = settling_weight(system.table, t)
    if weight < 1:
        projection = system.overlaps.extended_projection
        projected = float(np.sum(np.abs(projection @ X @ projection.T) ** 2))
        probability = weight * probability + (1 - weight) * projected
    return probability


def exponential_observables(system: TwoParticleSystem, t: float, variant: ExponentialVariant) -> Tuple[float, float]:
    """(S, P) of the purely exponential part; `poles_mixed` keeps the t^{-3/2}·pole cross terms"""
    if variant == ExponentialVariant.poles or system.spec.kind == StateKind.single:
        amplitude, probability = _product_observables(system, _weights(system, t, variant))
    else:
        amplitude, probability = _quadrature_observables(system, t, variant)
    return abs(amplitude) ** 2, probability


@dataclass(frozen=True)
class DecaySeries:
    tau1: float
    times: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    forms: Tuple[str, ...] = field(repr=False)
    extra: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.times)

    def row(self, i: int) -> Dict[str, Union[float, str]]:
        return {
            't_abs': float(self.times[i]),
            't_over_tau1': float(self.times[i] / self.tau1),
            'S': float(self.S[i]),
            'P': float(self.P[i]),
            'form': self.forms[i],
        }

    def values(self, quantity: str) -> np.ndarray:
        if quantity == 'S':
            return self.S
        if quantity == 'P':
            return self.P
        if quantity in self.extra:
            return self.extra[quantity]
        raise DomainError(f'Unknown series quantity `{quantity}`')

    def check(self, upper_slack: float = PROBABILITY_SLACK) -> None:
        """Cauchy-Schwarz ordering and probability range on every row"""
        for i in range(len(self)):
            S, P = self.S[i], self.P[i]
            if P < S - ORDERING_TOLERANCE:
                raise DataIntegrityError('Nonescape probability is below survival probability', self.row(i))
            for name, value in (('S', S), ('P', P)):
                if not -LOWER_SLACK <= value <= 1 + upper_slack:
                    raise DataIntegrityError(f'{name} is outside of [0, 1]', self.row(i))

    def to_csv(self, meta: Optional[dict] = None) -> str:
        header = ['t_abs', 't_over_tau1', 'S', 'lnS', 'P', 'lnP', 'form', *self.extra]
        rows = []
        for i in range(len(self)):
            row = [
                float(self.times[i]),
                float(self.times[i] / self.tau1),
                float(self.S[i]),
                _safe_log(self.S[i]),
                float(self.P[i]),
                _safe_log(self.P[i]),
                self.forms[i],
            ]
            row.extend(float(values[i]) for values in self.extra.values())
            rows.append(row)
        return render_csv(header, rows, meta)


def _safe_log(value: float) -> Union[float, str]:
    return math.log(value) if value > PRECISION_FLOOR else 'nan'


def decay_series(
    system: TwoParticleSystem,
    grid: TimeGrid = TimeGrid(),
    form: PropagatorForm = PropagatorForm.auto,
    variants: Sequence[ExponentialVariant] = (),
    upper_slack: float = PROBABILITY_SLACK,
    check: bool = True,
) -> DecaySeries:
    """S and P over the grid, each row tagged with the form it was computed with"""
    table = system.table
    times = grid.absolute(table.tau1)
    if not table.size and form != PropagatorForm.asymptotic:
        _logger.warning('No poles for the free model, falling back to the asymptotic form')
        form = PropagatorForm.asymptotic

    S = np.empty(len(times))
    P = np.empty(len(times))
    forms: List[str] = []
    extra = {f'{q}_{v.value}': np.empty(len(times)) for v in variants for q in ('S', 'P')}
    for i, t in enumerate(times):
        resolved = resolve_form(form, t, system.switch_time)
        amplitude, P[i] = _observables(system, t, resolved)
        S[i] = abs(amplitude) ** 2
        forms.append(resolved.value)
        for variant in variants:
            extra[f'S_{variant.value}'][i], extra[f'P_{variant.value}'][i] = exponential_observables(system, t, variant)

    series = DecaySeries(tau1=table.tau1, times=times, S=S, P=P, forms=tuple(forms), extra=extra)
    _logger.info('Computed %s rows for `%s`', len(series), system.spec.kind.value)
    if check:
        series.check(upper_slack)
    return series


def tracking_series(system: TwoParticleSystem, r1: float, r2: float, times: Sequence[float]) -> np.ndarray:
    """|Ψ(r₁, r₂, t)| of the asymptotic form at a fixed interior point"""
    if system.spec.kind == StateKind.single:
        state = system.states[system.spec.alpha]
        return np.array([abs(complex(state.asymptotic(r1, t, 1))) for t in times])
    return np.array([abs(complex(psi_asymptotic(system, r1, r2, t))) for t in times])


@dataclass(frozen=True)
class SlopeFit:
    window: Tuple[float, float]
    axis: SlopeAxis
    slope: float
    stderr: float
    points: int

    def as_dict(self) -> Dict[str, Union[float, str, int]]:
        return {
            't_lo': self.window[0],
            't_hi': self.window[1],
            'axis': self.axis.value,
            'slope': self.slope,
            'stderr': self.stderr,
            'points': self.points,
        }


def _abscissa(times: np.ndarray, axis: SlopeAxis) -> np.ndarray:
    return np.log(times) if axis == SlopeAxis.loglog else times


def fit_values(times: Sequence[float], values: Sequence[float], window: Tuple[float, float], axis: SlopeAxis) -> SlopeFit:
    """Least-squares slope of ln(value) against t (semilog) or ln t (loglog)"""
    t_ = np.asarray(times, dtype=float)
    v_ = np.asarray(values, dtype=float)
    selected = (t_ >= window[0]) & (t_ <= window[1])
    if np.any(v_[selected] <= 0):
        raise FitError('Values in the fit window must be positive', window)
    selected &= v_ > PRECISION_FLOOR
    if np.count_nonzero(selected) < MIN_FIT_POINTS:
        raise FitError(f'At least {MIN_FIT_POINTS} points above {PRECISION_FLOOR:.0e} are required', window)
    result = linregress(_abscissa(t_[selected], axis), np.log(v_[selected]))
    return SlopeFit(window=window, axis=axis, slope=float(result.slope), stderr=float(result.stderr), points=int(np.count_nonzero(selected)))


def fit_slope(series: DecaySeries, window: Tuple[float, float], axis: SlopeAxis, quantity: str = 'S') -> SlopeFit:
    return fit_values(series.times, series.values(quantity), window, axis)


def segment_costs(x: np.ndarray, y: np.ndarray, min_points: int = MIN_FIT_POINTS) -> np.ndarray:
    """Residual sum of squares of the least-squares line through points i..j-1, at [i, j]

    Built from prefix sums; segments shorter than `min_points` cost infinity.
    """
    x_ = x - x.mean()
    y_ = y - y.mean()
    prefix = [np.concatenate([[0.0], np.cumsum(values)]) for values in (np.ones_like(x_), x_, y_, x_ * x_, x_ * y_, y_ * y_)]
    n, sx, sy, sxx, sxy, syy = (p[None, :] - p[:, None] for p in prefix)
    with np.errstate(divide='ignore', invalid='ignore'):
        vxx = sxx - sx * sx / n
        vxy = sxy - sx * sy / n
        vyy = syy - sy * sy / n
        cost = vyy - vxy * vxy / vxx
    cost = np.where(n >= min_points, np.maximum(cost, 0.0), np.inf)
    return cost


def detect_regimes(
    times: Sequence[float],
    values: Sequence[float],
    axis: SlopeAxis,
    tolerance: float = 0.05,
    min_points: int = MIN_FIT_POINTS,
) -> List[Tuple[float, float]]:
    """Windows of a piecewise-linear segmentation of ln(value) against the axis abscissa

    Optimal partitioning: the total residual sum of squares plus `min_points·tolerance²` per
    segment is minimized by dynamic programming, so a new change point has to remove more than
    a `tolerance`-sized residual over a minimal window.
    """
    t_ = np.asarray(times, dtype=float)
    v_ = np.asarray(values, dtype=float)
    usable = v_ > PRECISION_FLOOR
    t_, v_ = t_[usable], v_[usable]
    n = len(t_)
    if n < min_points:
        return []
    cost = segment_costs(_abscissa(t_, axis), np.log(v_), min_points)
    penalty = min_points * tolerance ** 2

    best = np.full(n + 1, np.inf)
    best[0] = 0.0
    previous = np.zeros(n + 1, dtype=int)
    for j in range(min_points, n + 1):
        candidates = best[: j - min_points + 1] + cost[: j - min_points + 1, j]
        i = int(np.argmin(candidates))
        best[j] = candidates[i] + penalty
        previous[j] = i
    if not np.isfinite(best[n]):
        return []

    windows: List[Tuple[float, float]] = []
    j = n
    while j > 0:
        i = previous[j]
        windows.append((float(t_[i]), float(t_[j - 1])))
        j = i
    windows.reverse()
    _logger.debug('Segmented %s points into %s regimes', n, len(windows))
    return windows


def auto_fits(series: DecaySeries, axis: SlopeAxis, quantity: str = 'S', tolerance: float = 0.05) -> List[SlopeFit]:
    values = series.values(quantity)
    return [fit_values(series.times, values, window, axis) for window in detect_regimes(series.times, values, axis, tolerance)]
