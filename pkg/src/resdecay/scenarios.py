"""Scenario runner: pole table, decay series, slope fits and invariant suites written to one directory"""
import json
import logging
from dataclasses import dataclass, field
from os.path import join
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from tabulate import tabulate

from resdecay.config import ScenarioConfig
from resdecay.enums import PropagatorForm, SlopeAxis, StateKind
from resdecay.exceptions import DataIntegrityError, FitError, InvariantsFailedError
from resdecay.observables import DecaySeries, SlopeFit, auto_fits, decay_series, fit_slope, fit_values, tracking_series
from resdecay.poles import PoleTable
from resdecay.two_particle import TwoParticleSystem, antisymmetric_power_coefficient, asymptotic_threshold, fit_power_coefficient
from resdecay.utils import FormattedLogger, render_csv, write

CROSSOVER_POINTS = 30
POWER_COEFFICIENT_TOLERANCE = 1e-3

_logger = logging.getLogger('resdecay.scenarios')


@dataclass
class CheckResult:
    suite: str
    passed: bool
    detail: str


@dataclass
class FitRecord:
    label: str
    fit: Optional[SlopeFit] = None
    error: Optional[str] = None

    def as_row(self) -> Tuple[Any, ...]:
        if self.fit is None:
            return (self.label, '', '', '', '', self.error)
        fit = self.fit
        return (self.label, fit.axis.value, f'{fit.window[0]:.4g}..{fit.window[1]:.4g}', f'{fit.slope:.6g}', f'{fit.stderr:.2e}', '')


@dataclass
class ScenarioReport:
    name: str
    path: str
    tau1: float
    files: List[str] = field(default_factory=list)
    fits: List[FitRecord] = field(default_factory=list)
    checks: List[CheckResult] = field(default_factory=list)
    values: Dict[str, Any] = field(default_factory=dict)

    @property
    def failed(self) -> List[Tuple[str, str]]:
        return [(c.suite, c.detail) for c in self.checks if not c.passed]

    def raise_for_failures(self) -> None:
        if self.failed:
            raise InvariantsFailedError(self.failed)

    def render(self) -> str:
        fits = tabulate([f.as_row() for f in self.fits], headers=['series', 'axis', 'window', 'slope', 'stderr', 'error'])
        checks = tabulate([(c.suite, 'pass' if c.passed else 'FAIL', c.detail) for c in self.checks], headers=['suite', 'status', 'detail'])
        values = tabulate(sorted(self.values.items()), headers=['value', ''])
        return f'Scenario `{self.name}`, τ₁ = {self.tau1:.6g}\n\n{fits}\n\n{values}\n\n{checks}\n'

    def as_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'tau1': self.tau1,
            'fits': [
                {'series': f.label, **(f.fit.as_dict() if f.fit else {}), **({'error': f.error} if f.error else {})} for f in self.fits
            ],
            'checks': [{'suite': c.suite, 'passed': c.passed, 'detail': c.detail} for c in self.checks],
            'values': self.values,
        }


def _meta(config: ScenarioConfig, system: TwoParticleSystem, **extra: Any) -> Dict[str, Any]:
    spec = system.spec
    return {
        'scenario': config.name,
        'strength': config.model.strength,
        'radius': config.model.radius,
        'poles': system.table.size,
        'kind': spec.kind.value,
        'alpha': spec.alpha,
        'beta': spec.beta,
        'tau1': system.table.tau1,
        **extra,
    }


def _fit_series(config: ScenarioConfig, series: DecaySeries, label: str) -> List[FitRecord]:
    records: List[FitRecord] = []
    if config.fit_windows:
        for window in config.fit_windows:
            absolute = (window.t_lo * series.tau1, window.t_hi * series.tau1)
            name = f'{label}:{window.quantity}'
            try:
                records.append(FitRecord(name, fit_slope(series, absolute, window.axis, window.quantity)))
            except FitError as e:
                records.append(FitRecord(name, error=e.msg))
        return records

    last_decade = (series.times[-1] / 10, series.times[-1])
    for quantity in ('S', 'P'):
        name = f'{label}:{quantity}'
        records.extend(FitRecord(name, fit) for fit in auto_fits(series, SlopeAxis.semilog, quantity))
        try:
            records.append(FitRecord(f'{name}:last_decade', fit_slope(series, last_decade, SlopeAxis.loglog, quantity)))
        except FitError as e:
            records.append(FitRecord(f'{name}:last_decade', error=e.msg))
    return records


def _single_threshold(system: TwoParticleSystem, r: float, times: np.ndarray, tolerance: float) -> Optional[float]:
    state = system.states[system.spec.alpha]
    threshold: Optional[float] = None
    for t in times:
        exact = complex(state.exact(r, t, tail_corrected=True))
        if abs(complex(state.asymptotic(r, t, 1)) - exact) <= tolerance * abs(exact):
            threshold = t if threshold is None else threshold
        else:
            threshold = None
    return threshold


def _crossover(config: ScenarioConfig, system: TwoParticleSystem, report: ScenarioReport) -> None:
    checks = config.checks
    tau1 = system.table.tau1
    if not system.table.size:
        report.checks.append(CheckResult('crossover', True, 'skipped, free model has no exact form'))
        return
    times = np.geomspace(1.0, checks.crossover_t_max, CROSSOVER_POINTS) * tau1
    r1, r2 = config.tracking.r1, config.tracking.r2
    if system.spec.kind == StateKind.single:
        threshold = _single_threshold(system, r1, times, checks.crossover_tolerance)
    else:
        threshold = asymptotic_threshold(system, r1, r2, times, checks.crossover_tolerance)
    if threshold is None:
        report.checks.append(CheckResult('crossover', False, f'no threshold up to {checks.crossover_t_max:g} τ₁'))
        return
    report.values['crossover_t_over_tau1'] = threshold / tau1
    report.checks.append(CheckResult('crossover', True, f'asymptotic within {checks.crossover_tolerance:g} beyond {threshold / tau1:.4g} τ₁'))


def _power_coefficient(config: ScenarioConfig, system: TwoParticleSystem, report: ScenarioReport) -> None:
    expected = antisymmetric_power_coefficient()
    fitted = fit_power_coefficient(system, config.tracking.r1, config.tracking.r2)
    deviation = abs(fitted - expected) / abs(expected)
    report.values['power_coefficient_fitted'] = f'{fitted:.10g}'
    report.values['power_coefficient_closed_form'] = f'{expected:.10g}'
    report.checks.append(CheckResult('power_coefficient', deviation <= POWER_COEFFICIENT_TOLERANCE, f'relative deviation {deviation:.2e}'))


def run_scenario(config: ScenarioConfig, overwrite: bool = True) -> ScenarioReport:
    logger = FormattedLogger('resdecay.scenarios', fmt=f'{config.name}: ' + '{}')
    config.verify_output()
    checks = config.checks
    path = config.output_path

    table = PoleTable.build(config.model.params)
    system = TwoParticleSystem.build(table, config.state.spec, switch_time=config.switch_time * table.tau1)
    report = ScenarioReport(name=config.name, path=path, tau1=table.tau1)
    logger.info('%s poles, τ₁ = %.6g', table.size, table.tau1)

    def emit(filename: str, content: str) -> None:
        target = join(path, filename)
        write(target, content, overwrite=overwrite)
        report.files.append(target)

    emit('poles.csv', table.to_csv())
    if table.size:
        emit('overlaps.csv', system.overlaps.to_csv())

    for form in config.forms:
        series = decay_series(system, config.grid.grid, form, config.variants, checks.probability_slack, check=False)
        emit(f'series_{form.value}.csv', series.to_csv(_meta(config, system, form=form.value)))
        if checks.ordering:
            try:
                series.check(checks.probability_slack)
                report.checks.append(CheckResult(f'ordering:{form.value}', True, f'{len(series)} rows'))
            except DataIntegrityError as e:
                report.checks.append(CheckResult(f'ordering:{form.value}', False, f'{e.msg} at t = {e.row.get("t_abs")}'))
        report.fits.extend(_fit_series(config, series, form.value))

    if checks.sum_rule:
        for s in system.spec.box_indices:
            if not table.size:
                report.checks.append(CheckResult(f'sum_rule:{s}', True, 'skipped, free model has no poles'))
                continue
            total = system.overlaps.sum_rule(s)
            defect = abs(total.real - 1)
            if abs(total.imag) > checks.sum_rule_tolerance:
                logger.warning('Sum rule for s=%s has imaginary part %.3e', s, total.imag)
            report.values[f'sum_rule_{s}'] = f'{total:.10g}'
            report.checks.append(CheckResult(f'sum_rule:{s}', defect <= checks.sum_rule_tolerance, f'defect {defect:.2e}'))

    if checks.crossover:
        _crossover(config, system, report)
    if system.spec.kind == StateKind.entangled_antisymmetric:
        _power_coefficient(config, system, report)

    tracking = config.tracking
    tracking_times = np.geomspace(tracking.t_min, tracking.t_max, tracking.points) * table.tau1
    magnitude = tracking_series(system, tracking.r1, tracking.r2, tracking_times)
    emit('tracking.csv', render_csv(['t_abs', 'abs_psi'], zip(tracking_times.tolist(), magnitude.tolist()), _meta(config, system, r1=tracking.r1, r2=tracking.r2)))
    try:
        report.fits.append(FitRecord('tracking:abs_psi', fit_values(tracking_times, magnitude, (tracking_times[0], tracking_times[-1]), SlopeAxis.loglog)))
    except FitError as e:
        report.fits.append(FitRecord('tracking:abs_psi', error=e.msg))

    emit('report.txt', report.render())
    emit('report.json', json.dumps(report.as_dict(), indent=2, sort_keys=True) + '\n')
    logger.info('Done, %s files written, %s failed suites', len(report.files), len(report.failed))
    return report


def validate_scenario(config: ScenarioConfig) -> List[str]:
    """Dry run: build pole and overlap tables, return diagnostics"""
    table = PoleTable.build(config.model.params)
    system = TwoParticleSystem.build(table, config.state.spec, switch_time=config.switch_time * table.tau1)
    diagnostics = [f'{table.size} poles, τ₁ = {table.tau1:.6g}']
    for s in system.spec.box_indices:
        if table.size:
            diagnostics.append(f'sum rule s={s}: {system.overlaps.sum_rule(s):.10g}')
    if table.size and PropagatorForm.split in config.forms and not table.verify_proper():
        diagnostics.append('split form requested but some poles are not proper')
    return diagnostics
