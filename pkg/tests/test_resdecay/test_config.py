import os
from os.path import dirname, join
from tempfile import TemporaryDirectory
from unittest import TestCase
from unittest.mock import patch

from resdecay.config import (
    ChecksConfig,
    FitWindowConfig,
    GridConfig,
    ModelConfig,
    ScenarioConfig,
    StateConfig,
    builtin_scenarios,
    resolve_scenario,
)
from resdecay.enums import ExponentialVariant, PropagatorForm, SlopeAxis, StateKind
from resdecay.exceptions import ConfigurationError


class ConfigTest(TestCase):
    def setUp(self) -> None:
        self.path = join(dirname(__file__), 'scenario.yml')

    def test_load(self):
        config = ScenarioConfig.load([self.path])

        self.assertEqual('fixture', config.name)
        self.assertEqual(10, config.model.poles)
        self.assertEqual(6.0, config.model.params.strength)
        self.assertEqual(StateKind.entangled_antisymmetric, config.state.kind)
        self.assertEqual(-1, config.state.spec.sign)
        self.assertEqual([PropagatorForm.exact, PropagatorForm.asymptotic], config.forms)
        self.assertEqual([ExponentialVariant.poles], config.variants)
        self.assertEqual(20, len(config.grid.grid.relative()))
        self.assertEqual(2, len(config.fit_windows))
        self.assertEqual(SlopeAxis.semilog, config.fit_windows[0].axis)
        self.assertEqual('P', config.fit_windows[1].quantity)
        self.assertFalse(config.checks.crossover)
        self.assertTrue(config.checks.sum_rule)
        self.assertEqual(1e-2, config.checks.probability_slack)
        self.assertEqual({'RESDECAY_TEST_SCENARIO': 'fixture'}, config._environment)

    def test_environment_substitution(self):
        with patch.dict(os.environ, {'RESDECAY_TEST_SCENARIO': 'patched'}):
            config = ScenarioConfig.load([self.path])
        self.assertEqual('patched', config.name)

    def test_missing_variable(self):
        with TemporaryDirectory() as tmp:
            path = join(tmp, 'scenario.yml')
            with open(path, 'w') as file:
                file.write('name: ${RESDECAY_TEST_UNSET:-}\n')
            with patch.dict(os.environ, clear=False) as environ:
                environ.pop('RESDECAY_TEST_UNSET', None)
                with self.assertRaises(ConfigurationError):
                    ScenarioConfig.load([path])

    def test_merge(self):
        with TemporaryDirectory() as tmp:
            path = join(tmp, 'override.yml')
            with open(path, 'w') as file:
                file.write('model:\n  strength: 2\n')
            config = ScenarioConfig.load([self.path, path])
        self.assertEqual(2.0, config.model.strength)
        self.assertEqual(20, config.model.poles)

    def test_invalid_files(self):
        with self.assertRaises(ConfigurationError):
            ScenarioConfig.load([join(dirname(__file__), 'missing.yml')])
        with TemporaryDirectory() as tmp:
            path = join(tmp, 'scenario.yml')
            with open(path, 'w') as file:
                file.write('name: broken\nunknown_field: 1\n')
            with self.assertRaises(ConfigurationError):
                ScenarioConfig.load([path])
            with open(path, 'w') as file:
                file.write('name: broken\nstate:\n  kind: bogus\n')
            with self.assertRaises(ConfigurationError):
                ScenarioConfig.load([path])

    def test_validators(self):
        with self.assertRaises(ConfigurationError):
            ModelConfig(strength=-1.0)
        with self.assertRaises(ConfigurationError):
            ModelConfig(radius=0.0)
        with self.assertRaises(ConfigurationError):
            ModelConfig(poles=0)
        with self.assertRaises(ConfigurationError):
            StateConfig(kind=StateKind.entangled_symmetric, alpha=1)
        with self.assertRaises(ConfigurationError):
            StateConfig(kind=StateKind.entangled_antisymmetric, alpha=2, beta=2)
        with self.assertRaises(ConfigurationError):
            GridConfig(t_min=0.0)
        with self.assertRaises(ConfigurationError):
            GridConfig(times=[2.0, 1.0])
        with self.assertRaises(ConfigurationError):
            FitWindowConfig(t_lo=5.0, t_hi=1.0)
        with self.assertRaises(ConfigurationError):
            FitWindowConfig(t_lo=1.0, t_hi=5.0, quantity='Q')
        with self.assertRaises(ConfigurationError):
            ScenarioConfig(name='x', fits='manual')
        with self.assertRaises(ConfigurationError):
            ScenarioConfig(name='x', forms=[])
        with self.assertRaises(ConfigurationError):
            ScenarioConfig(name='x', switch_time=0.0)

    def test_defaults(self):
        checks = ChecksConfig()
        self.assertEqual(5e-3, checks.probability_slack)
        self.assertEqual(2e-3, checks.sum_rule_tolerance)
        config = ScenarioConfig(name='x')
        self.assertEqual(StateKind.factorized_symmetric, config.state.kind)
        self.assertEqual([PropagatorForm.auto], config.forms)
        self.assertEqual((), config.fit_windows)

    def test_output_path(self):
        with patch.dict(os.environ, {'RESDECAY_OUTPUT': '/tmp/resdecay'}):
            self.assertEqual('/tmp/resdecay/x', ScenarioConfig(name='x').output_path)
            self.assertEqual('out/x', ScenarioConfig(name='x', output='out').output_path)
            self.assertEqual('/tmp/resdecay/single', ScenarioConfig.load_builtin('single').output_path)
        with patch.dict(os.environ, clear=False) as environ:
            environ.pop('RESDECAY_OUTPUT', None)
            self.assertEqual('output/x', ScenarioConfig(name='x').output_path)

    def test_output_not_writable(self):
        with TemporaryDirectory() as tmp:
            blocker = join(tmp, 'blocker')
            with open(blocker, 'w') as file:
                file.write('not a directory\n')
            ScenarioConfig(name='x', output=join(tmp, 'fresh', 'nested')).verify_output()
            with self.assertRaises(ConfigurationError):
                ScenarioConfig(name='x', output=blocker).verify_output()

            path = join(tmp, 'scenario.yml')
            with open(path, 'w') as file:
                file.write(f'name: blocked\noutput: {blocker}\n')
            with self.assertRaises(ConfigurationError):
                ScenarioConfig.load([path])

    def test_with_overrides(self):
        config = ScenarioConfig.load([self.path])
        overridden = config.with_overrides(strength=2.0, poles=5, alpha=None, grid=GridConfig(t_min=1.0, t_max=10.0, points=5))
        self.assertEqual(2.0, overridden.model.strength)
        self.assertEqual(5, overridden.model.poles)
        self.assertEqual(1, overridden.state.alpha)
        self.assertEqual(5, overridden.grid.points)
        self.assertEqual(10, config.model.poles)

        swapped = config.with_overrides(kind=StateKind.entangled_symmetric, beta=6)
        self.assertEqual(StateKind.entangled_symmetric, swapped.state.kind)
        self.assertEqual(6, swapped.state.beta)

        with self.assertRaises(ConfigurationError):
            config.with_overrides(beta=1)
        with self.assertRaises(ConfigurationError):
            config.with_overrides(strength=-1.0)


class BuiltinScenariosTest(TestCase):
    def test_list(self):
        self.assertEqual(['fig1', 'fig2', 'fig3', 'free', 'free_antisymmetric', 'single'], builtin_scenarios())

    def test_load_all(self):
        for name in builtin_scenarios():
            config = ScenarioConfig.load_builtin(name)
            self.assertEqual(name, config.name)

        fig1 = ScenarioConfig.load_builtin('fig1')
        self.assertEqual((StateKind.factorized_symmetric, 6), (fig1.state.kind, fig1.state.alpha))
        self.assertEqual([ExponentialVariant.poles, ExponentialVariant.poles_mixed], fig1.variants)
        fig3 = ScenarioConfig.load_builtin('fig3')
        self.assertEqual((1, 6), fig3.state.spec.box_indices)
        self.assertTrue(fig3.checks.crossover)
        self.assertEqual(0.0, ScenarioConfig.load_builtin('free').model.strength)

    def test_resolve(self):
        self.assertEqual('fig2', resolve_scenario('fig2').name)
        self.assertEqual('fixture', resolve_scenario(join(dirname(__file__), 'scenario.yml')).name)
        with self.assertRaises(ConfigurationError):
            resolve_scenario('fig4')
