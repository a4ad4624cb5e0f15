import subprocess
import sys
from os.path import exists, join
from tempfile import TemporaryDirectory
from typing import List
from unittest import TestCase


class CLITest(TestCase):
    def setUp(self) -> None:
        self._tmp = TemporaryDirectory()
        self.workdir = self._tmp.name

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def run_resdecay(self, *args: str) -> subprocess.CompletedProcess:
        command: List[str] = [sys.executable, '-m', 'resdecay', '-l', 'warning.yml', *args]
        return subprocess.run(command, cwd=self.workdir, capture_output=True, text=True)

    def test_list(self):
        result = self.run_resdecay('list')
        self.assertEqual(0, result.returncode, result.stdout)
        for name in ('fig1', 'fig2', 'fig3', 'free', 'free_antisymmetric', 'single'):
            self.assertIn(name, result.stdout)

    def test_poles(self):
        path = join(self.workdir, 'poles.csv')
        result = self.run_resdecay('poles', '--poles', '5', '--out', path)
        self.assertEqual(0, result.returncode, result.stdout)
        self.assertIn('lifetime', result.stdout)
        with open(path) as file:
            lines = file.read().splitlines()
        self.assertEqual('p,re_kappa,im_kappa,energy,width,lifetime,re_amplitude,im_amplitude', lines[3])
        self.assertEqual(4 + 5, len(lines))

    def test_validate(self):
        result = self.run_resdecay('validate', 'fig1')
        self.assertEqual(0, result.returncode, result.stdout)
        self.assertIn('fig1: OK', result.stdout)
        self.assertIn('20 poles', result.stdout)

        path = join(self.workdir, 'bad.yml')
        with open(path, 'w') as file:
            file.write('name: bad\nmodel:\n  strength: -1\n')
        result = self.run_resdecay('validate', path)
        self.assertEqual(1, result.returncode)
        self.assertIn('ConfigurationError', result.stdout)

    def test_run_free(self):
        result = self.run_resdecay('run', 'free', '--grid', '10:1000:6', '--out', self.workdir)
        self.assertEqual(0, result.returncode, result.stdout)
        self.assertIn('Scenario `free`', result.stdout)
        for filename in ('poles.csv', 'series_asymptotic.csv', 'tracking.csv', 'report.txt', 'report.json'):
            self.assertTrue(exists(join(self.workdir, 'free', filename)), filename)

    def test_bad_grid(self):
        result = self.run_resdecay('run', 'free', '--grid', '10:1000')
        self.assertEqual(1, result.returncode)
