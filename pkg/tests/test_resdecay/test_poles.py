import math
from unittest import TestCase

import numpy as np

from resdecay.exceptions import DomainError
from resdecay.poles import (
    ModelParams,
    PoleTable,
    count_zeros,
    normalization_residual,
    pole_residual,
    residual_tolerance,
    search_rectangle,
)
from resdecay.test import cached_table


class ModelParamsTest(TestCase):
    def test_invalid(self):
        with self.assertRaises(DomainError):
            ModelParams(strength=-1.0)
        with self.assertRaises(DomainError):
            ModelParams(strength=6.0, radius=0.0)
        with self.assertRaises(DomainError):
            ModelParams(strength=6.0, n_poles=0)

    def test_h1(self):
        self.assertEqual(49.0, ModelParams(strength=6.0).h1)
        self.assertTrue(ModelParams(strength=0.0).free)


class PoleTableTest(TestCase):
    def setUp(self) -> None:
        self.table = cached_table(6.0, 1.0, 20)
        self.params = self.table.params

    def test_residuals(self):
        for pole in self.table.poles:
            self.assertLessEqual(abs(pole_residual(pole.kappa, self.params)), residual_tolerance(self.params, pole.kappa), pole)

    def test_strips(self):
        self.assertEqual(20, self.table.size)
        for n, pole in enumerate(self.table.poles, start=1):
            self.assertEqual(n, pole.index)
            self.assertLess(abs(pole.kappa.real / math.pi - n), 0.5)
            self.assertLess(pole.kappa.imag, 0)

    def test_argument_principle(self):
        rectangle = search_rectangle(self.table.poles, self.params)
        self.assertEqual(20, count_zeros(self.params, rectangle))

    def test_mirror(self):
        n = self.table.size
        np.testing.assert_array_equal(self.table.kappa[n:], -np.conj(self.table.kappa[:n]))
        np.testing.assert_array_equal(self.table.amplitude[n:], -np.conj(self.table.amplitude[:n]))
        np.testing.assert_array_equal(self.table.indices[n:], -self.table.indices[:n])
        self.assertEqual(-3, self.table.pole(-3).index)
        self.assertEqual(-self.table.pole(3).kappa.conjugate(), self.table.pole(-3).kappa)

    def test_normalization(self):
        for state in self.table.states:
            self.assertLessEqual(normalization_residual(state, self.params.radius), 1e-12)
            self.assertGreater(state.amplitude.real, 0)

    def test_lifetimes(self):
        lifetimes = [pole.lifetime for pole in self.table.poles]
        self.assertEqual(self.table.pole(1).lifetime, self.table.tau1)
        self.assertEqual(max(lifetimes), self.table.tau1)
        self.assertGreater(self.table.tau1, 0.3)
        self.assertLess(self.table.tau1, 0.7)
        self.assertTrue(all(pole.width > 0 for pole in self.table.poles))

    def test_values(self):
        r = np.array([0.0, 0.2, 0.5, 1.0])
        values = self.table.values(r)
        self.assertEqual((40, 4), values.shape)
        np.testing.assert_allclose(values[20:], np.conj(values[:20]), rtol=1e-13, atol=1e-14)
        np.testing.assert_array_equal(np.zeros(40), values[:, 0])
        self.assertAlmostEqual(self.table.states[0].value(0.5, 1.0), values[0, 2], places=14)

    def test_out_of_range(self):
        with self.assertRaises(DomainError):
            self.table.values(1.5)
        with self.assertRaises(DomainError):
            self.table.states[0].value(-0.1, 1.0)
        with self.assertRaises(DomainError):
            self.table.pole(21)

    def test_csv(self):
        lines = self.table.to_csv().splitlines()
        self.assertEqual('# strength: 6.0', lines[0])
        self.assertEqual('p,re_kappa,im_kappa,energy,width,lifetime,re_amplitude,im_amplitude', lines[3])
        self.assertEqual(24, len(lines))
        self.assertEqual(self.table.to_csv(), cached_table(6.0, 1.0, 20).to_csv())


class WeakBarrierTest(TestCase):
    def test_solves(self):
        table = cached_table(2.0, 1.0, 5)
        self.assertEqual(5, table.size)
        for pole in table.poles:
            self.assertLessEqual(abs(pole_residual(pole.kappa, table.params)), residual_tolerance(table.params, pole.kappa))
        self.assertTrue(all(a.real > b.real for a, b in zip(table.proper_kappa[1:], table.proper_kappa[:-1])))


class ManyPolesTest(TestCase):
    def test_eighty_poles(self):
        table = cached_table(6.0, 1.0, 80)
        self.assertEqual(80, table.size)
        for pole in table.poles:
            self.assertLessEqual(abs(pole_residual(pole.kappa, table.params)), residual_tolerance(table.params, pole.kappa))
        self.assertLess(residual_tolerance(table.params), residual_tolerance(table.params, table.poles[-1].kappa))
        self.assertTrue(table.verify_proper())


class FreeModelTest(TestCase):
    def test_empty(self):
        table = PoleTable.build(ModelParams(strength=0.0))
        self.assertEqual(0, table.size)
        self.assertEqual(1.0, table.tau1)
        self.assertEqual((0,), table.kappa.shape)
        self.assertTrue(table.verify_proper())
