"""Complex error (Faddeyeva) function and the Moshinsky function built on it.

`scipy.special.wofz` wraps the Faddeeva package (Johnson), which switches between a
continued fraction for large |z| (|x| + |y| > 8 roughly), Algorithm 916 (Zaghloul and Ali)
for moderate arguments and Taylor expansions near the real and imaginary axes. Its
stated relative accuracy is ~1e-13 in the upper half plane. In the lower half plane
the function grows like 2·exp(-z²), so it is evaluated there through the reflection
w(z) = 2·exp(-z²) - w(-z) with the exponent split into modulus and phase.
"""
import cmath
import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.special import wofz

from resdecay.exceptions import DomainError

ComplexLike = Union[complex, np.ndarray]
RealLike = Union[float, np.ndarray]

_logger = logging.getLogger('resdecay.special_functions')

_phase = cmath.exp(-1j * cmath.pi / 4)


def _unwrap(value: np.ndarray) -> ComplexLike:
    if value.ndim == 0:
        return complex(value)
    return value


def _exp_neg_square(z: np.ndarray) -> np.ndarray:
    """exp(-z²) with modulus and phase computed separately"""
    exponent = -(z * z)
    with np.errstate(over='ignore', invalid='ignore'):
        modulus = np.exp(exponent.real)
        return modulus * (np.cos(exponent.imag) + 1j * np.sin(exponent.imag))


def faddeyeva(z: ComplexLike) -> ComplexLike:
    """w(z) = exp(-z²)·erfc(-iz), scalar or elementwise over an array"""
    z_ = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z_)):
        raise DomainError(f'Faddeyeva function argument must be finite, got `{z}`')

    upper = z_.imag >= 0
    w = wofz(np.where(upper, z_, -z_))
    if not np.all(upper):
        w = np.where(upper, w, 2 * _exp_neg_square(z_) - w)
    return _unwrap(w)


@dataclass(frozen=True)
class MoshinskyArgument:
    """z = -exp(-iπ/4)·κ·t^½"""

    kappa: complex
    t: float
    z: complex

    @classmethod
    def create(cls, kappa: complex, t: float) -> 'MoshinskyArgument':
        if t < 0:
            raise DomainError(f'Time must be non-negative, got `{t}`')
        return cls(kappa=complex(kappa), t=float(t), z=-_phase * complex(kappa) * cmath.sqrt(t))

    def is_consistent(self) -> bool:
        expected = -_phase * self.kappa * cmath.sqrt(self.t)
        return abs(expected - self.z) <= 4 * np.finfo(float).eps * max(abs(expected), 1.0)


def moshinsky_argument(kappa: ComplexLike, t: RealLike) -> ComplexLike:
    t_ = np.asarray(t, dtype=float)
    if np.any(t_ < 0):
        raise DomainError(f'Time must be non-negative, got `{t}`')
    return _unwrap(-_phase * np.asarray(kappa, dtype=complex) * np.sqrt(t_))


def moshinsky(kappa: ComplexLike, t: RealLike) -> ComplexLike:
    """M(z) = ½·w(iz), broadcasting over `kappa` and `t`"""
    z = np.asarray(moshinsky_argument(kappa, t))
    zeta = 1j * z
    upper = zeta.imag >= 0
    w = wofz(np.where(upper, zeta, -zeta))
    if np.all(upper):
        return _unwrap(0.5 * w)
    # NOTE: exp(-ζ²) = exp(-iκ²t) here; for decaying poles it is the e^{-iℰt}e^{-Γt/2} pole term
    return _unwrap(np.where(upper, 0.5 * w, _exp_neg_square(zeta) - 0.5 * w))


def moshinsky_split(kappa: ComplexLike, t: RealLike) -> Tuple[ComplexLike, ComplexLike]:
    """Pair (exp(-iκ²t), -M(-z)) whose sum is M(z), without forming the difference"""
    z = np.asarray(moshinsky_argument(kappa, t))
    exponential = _exp_neg_square(1j * z)
    reflected = -0.5 * np.asarray(faddeyeva(-1j * z))
    return _unwrap(exponential), _unwrap(reflected)
