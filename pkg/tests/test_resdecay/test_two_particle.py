from unittest import TestCase

import numpy as np

from resdecay.enums import PropagatorForm, SlopeAxis, StateKind
from resdecay.exceptions import DomainError, InvalidStateError
from resdecay.observables import fit_values
from resdecay.test import cached_system
from resdecay.test.oracles import free_pair
from resdecay.two_particle import (
    InitialStateSpec,
    antisymmetric_power_coefficient,
    asymptotic_terms,
    asymptotic_threshold,
    evolve_pair,
    fit_power_coefficient,
    initial_wavefunction,
    psi_asymptotic,
    psi_asymptotic_generic,
    psi_exact,
    psi_exact_double_sum,
)

KINDS = [
    (StateKind.factorized_symmetric, 6, None),
    (StateKind.entangled_symmetric, 1, 6),
    (StateKind.entangled_antisymmetric, 1, 6),
]


class InitialStateSpecTest(TestCase):
    def test_invalid(self):
        with self.assertRaises(InvalidStateError):
            InitialStateSpec(StateKind.factorized_symmetric, 0)
        with self.assertRaises(InvalidStateError):
            InitialStateSpec(StateKind.entangled_symmetric, 1)
        with self.assertRaises(InvalidStateError):
            InitialStateSpec(StateKind.entangled_antisymmetric, 3, 3)
        with self.assertRaises(InvalidStateError):
            InitialStateSpec(StateKind.entangled_symmetric, 1, -2)

    def test_indices(self):
        self.assertEqual((6,), InitialStateSpec(StateKind.factorized_symmetric, 6).box_indices)
        self.assertEqual((1, 6), InitialStateSpec(StateKind.entangled_antisymmetric, 1, 6).box_indices)
        self.assertEqual(-1, InitialStateSpec(StateKind.entangled_antisymmetric, 1, 6).sign)

    def test_initial_wavefunction(self):
        spec = InitialStateSpec(StateKind.entangled_antisymmetric, 1, 2)
        self.assertAlmostEqual(0.0, initial_wavefunction(spec, 0.4, 0.4, 1.0), places=15)
        self.assertAlmostEqual(
            -initial_wavefunction(spec, 0.3, 0.8, 1.0),
            initial_wavefunction(spec, 0.8, 0.3, 1.0),
            places=15,
        )
        with self.assertRaises(InvalidStateError):
            initial_wavefunction(InitialStateSpec(StateKind.single, 1), 0.1, 0.2, 1.0)


class CoefficientsTest(TestCase):
    def test_antisymmetric_diagonal(self):
        system = cached_system(StateKind.entangled_antisymmetric, 1, 6)
        B = system.coefficients.B
        self.assertEqual(0.0, system.coefficients.diagonal_defect)
        np.testing.assert_allclose(B, -B.T, rtol=0, atol=1e-15)
        self.assertFalse(B.flags.writeable)
        self.assertEqual(0.0, system.extended_coefficients.diagonal_defect)
        self.assertEqual((41, 41), system.extended_coefficients.B.shape)

    def test_symmetric(self):
        B = cached_system(StateKind.entangled_symmetric, 1, 6).coefficients.B
        np.testing.assert_allclose(B, B.T, rtol=0, atol=1e-15)


class ExactFormTest(TestCase):
    def test_product_equals_double_sum(self):
        for kind, alpha, beta in KINDS:
            system = cached_system(kind, alpha, beta)
            tau1 = system.table.tau1
            for t in (0.5 * tau1, 2 * tau1, 10 * tau1):
                for r1, r2 in ((0.3, 0.6), (0.5, 0.25)):
                    product = psi_exact(system, r1, r2, t)
                    double_sum = psi_exact_double_sum(system, r1, r2, t)
                    self.assertLessEqual(abs(product - double_sum), 1e-9 * max(abs(double_sum), 1e-12), (kind, t))

    def test_exchange_symmetry(self):
        for kind, alpha, beta in KINDS:
            system = cached_system(kind, alpha, beta)
            t = 3 * system.table.tau1
            forward = psi_exact(system, 0.2, 0.7, t)
            backward = psi_exact(system, 0.7, 0.2, t)
            self.assertAlmostEqual(kind.parity * forward, backward, places=14)

    def test_vectorized(self):
        system = cached_system(StateKind.entangled_symmetric, 1, 6)
        r = np.linspace(0.1, 0.9, 5)
        values = psi_exact(system, r[:, None], r[None, :], system.table.tau1)
        self.assertEqual((5, 5), values.shape)
        self.assertAlmostEqual(psi_exact(system, r[1], r[3], system.table.tau1), values[1, 3], places=14)

    def test_outside(self):
        system = cached_system(StateKind.factorized_symmetric, 6)
        with self.assertRaises(DomainError):
            psi_exact(system, 1.5, 0.5, 1.0)
        with self.assertRaises(InvalidStateError):
            psi_exact(cached_system(StateKind.single, 1), 0.5, 0.5, 1.0)

    def test_initial_convergence(self):
        r = np.linspace(0.05, 0.95, 37)
        r1, r2 = r[:, None], r[None, :]
        for kind, alpha, beta in KINDS:
            errors = []
            for n_poles in (20, 40):
                system = cached_system(kind, alpha, beta, n_poles=n_poles)
                initial = initial_wavefunction(system.spec, r1, r2, system.table.params.radius)
                errors.append(float(np.max(np.abs(psi_exact(system, r1, r2, 0.0) - initial))))
            self.assertLess(errors[1], errors[0], kind)


class AsymptoticFormTest(TestCase):
    def test_free_limit_against_quadrature(self):
        t = 2000.0
        for kind in (StateKind.factorized_symmetric, StateKind.entangled_symmetric, StateKind.entangled_antisymmetric):
            beta = None if kind == StateKind.factorized_symmetric else 2
            system = cached_system(kind, 1, beta, strength=0.0)
            expected = free_pair(kind, 1, beta or 1, 0.5, 0.25, t)
            value = psi_asymptotic(system, 0.5, 0.25, t)
            self.assertLessEqual(abs(value - expected), 0.02 * abs(expected), kind)

    def test_power_coefficient_closed_form(self):
        coefficient = antisymmetric_power_coefficient()
        self.assertAlmostEqual(-1j / (96 * np.pi), coefficient, places=15)

    def test_power_coefficient_from_generic_expansion(self):
        system = cached_system(StateKind.entangled_antisymmetric, 1, 6)
        expected = antisymmetric_power_coefficient()
        for r1, r2 in ((0.5, 0.25), (0.9, 0.3)):
            fitted = fit_power_coefficient(system, r1, r2)
            self.assertLessEqual(abs(fitted - expected), 1e-3 * abs(expected))
        with self.assertRaises(DomainError):
            fit_power_coefficient(system, 0.4, 0.4)
        with self.assertRaises(InvalidStateError):
            fit_power_coefficient(cached_system(StateKind.entangled_symmetric, 1, 6), 0.5, 0.25)

    def test_against_generic_expansion(self):
        for kind, alpha, beta in KINDS:
            system = cached_system(kind, alpha, beta)
            t = 1e4 * system.table.tau1
            closed = psi_asymptotic(system, 0.5, 0.25, t)
            generic = psi_asymptotic_generic(system, 0.5, 0.25, t)
            self.assertLessEqual(abs(closed - generic), 1e-2 * abs(generic), kind)

    def test_long_time_slopes(self):
        times = np.geomspace(1e3, 1e4, 20)
        for (kind, alpha, beta), slope in zip(KINDS, (-3.0, -3.0, -5.0)):
            system = cached_system(kind, alpha, beta)
            magnitude = np.array([abs(psi_asymptotic(system, 0.5, 0.25, t)) for t in times])
            fit = fit_values(times, magnitude, (times[0], times[-1]), SlopeAxis.loglog)
            self.assertAlmostEqual(slope, fit.slope, places=6, msg=kind)

    def test_free_limit_slopes(self):
        times = np.geomspace(1e3, 1e4, 20)
        cases = (
            (StateKind.factorized_symmetric, None, -3.0),
            (StateKind.entangled_symmetric, 2, -3.0),
            (StateKind.entangled_antisymmetric, 2, -5.0),
        )
        for kind, beta, slope in cases:
            system = cached_system(kind, 1, beta, strength=0.0)
            magnitude = np.array([abs(psi_asymptotic(system, 0.5, 0.25, t)) for t in times])
            fit = fit_values(times, magnitude, (times[0], times[-1]), SlopeAxis.loglog)
            self.assertAlmostEqual(slope, fit.slope, delta=0.1, msg=kind)

    def test_exact_slope_factorized(self):
        system = cached_system(StateKind.factorized_symmetric, 6)
        times = np.geomspace(200, 1000, 12) * system.table.tau1
        magnitude = np.array([abs(psi_exact(system, 0.5, 0.25, t, tail_corrected=True)) for t in times])
        fit = fit_values(times, magnitude, (times[0], times[-1]), SlopeAxis.loglog)
        self.assertAlmostEqual(-3.0, fit.slope, delta=0.05)

    def test_terms(self):
        system = cached_system(StateKind.factorized_symmetric, 6)
        tau1 = system.table.tau1
        early = asymptotic_terms(system, 0.5, 0.25, tau1)
        self.assertGreater(abs(early.exponential), abs(early.power))
        late = asymptotic_terms(system, 0.5, 0.25, 200 * tau1)
        self.assertGreater(abs(late.power), 1e6 * abs(late.exponential))
        self.assertEqual(late.exponential + late.power + late.mixed, late.total)
        with self.assertRaises(DomainError):
            asymptotic_terms(system, 0.5, 0.25, 0.0)


class EvolvePairTest(TestCase):
    def test_auto_switch(self):
        system = cached_system(StateKind.entangled_symmetric, 1, 6)
        early, form = evolve_pair(system, 0.5, 0.25, system.switch_time / 2)
        self.assertEqual(PropagatorForm.exact, form)
        self.assertEqual(psi_exact(system, 0.5, 0.25, system.switch_time / 2, tail_corrected=True), early)
        late, form = evolve_pair(system, 0.5, 0.25, system.switch_time * 2)
        self.assertEqual(PropagatorForm.asymptotic, form)
        self.assertEqual(psi_asymptotic(system, 0.5, 0.25, system.switch_time * 2), late)

    def test_threshold(self):
        system = cached_system(StateKind.factorized_symmetric, 6)
        tau1 = system.table.tau1
        threshold = asymptotic_threshold(system, 0.5, 0.25, np.geomspace(1, 400, 30) * tau1)
        self.assertIsNotNone(threshold)
        self.assertGreater(threshold, tau1)
