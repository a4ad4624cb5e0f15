"""Infinite-box initial states and closed-form overlaps with resonant states"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Tuple

import numpy as np

from resdecay.exceptions import DomainError
from resdecay.poles import PoleTable
from resdecay.special_functions import RealLike
from resdecay.utils import render_csv

# NOTE: below this |x|·a the series of sin(xa)/(2x) is used; truncation error < (xa)^6/5040·a
SINGULARITY_GUARD = 1e-4

_logger = logging.getLogger('resdecay.overlaps')


@dataclass(frozen=True)
class BoxState:
    """ψ_s(y) = √(2/a)·sin(sπy/a)"""

    s: int
    radius: float

    def __post_init__(self) -> None:
        if self.s < 1:
            raise DomainError(f'Box quantum number must be positive, got `{self.s}`')

    @property
    def wavenumber(self) -> float:
        return self.s * math.pi / self.radius

    def value(self, y: RealLike):
        return box_state_value(self.s, y, self.radius)


def box_state_value(s: int, y: RealLike, radius: float):
    if s < 1:
        raise DomainError(f'Box quantum number must be positive, got `{s}`')
    y_ = np.asarray(y, dtype=float)
    if np.any(y_ < 0) or np.any(y_ > radius * (1 + 1e-12)):
        raise DomainError(f'Box states are defined on [0, {radius}] only')
    value = math.sqrt(2 / radius) * np.sin(s * math.pi * y_ / radius)
    return float(value) if value.ndim == 0 else value


def box_moment(s: int, power: int, radius: float) -> float:
    """∫₀ᵃ yⁿ ψ_s(y) dy by the integration-by-parts recursion

    Iₙ = -aⁿ(-1)ˢ/k - n(n-1)/k²·Iₙ₋₂ with I₀ = (1 - (-1)ˢ)/k, I₁ = -a(-1)ˢ/k.
    """
    if s < 1 or power < 0:
        raise DomainError(f'Invalid moment arguments s={s}, n={power}')
    k = s * math.pi / radius
    sign = -1.0 if s % 2 else 1.0
    previous, current = (1 - sign) / k, -radius * sign / k
    if power == 0:
        return math.sqrt(2 / radius) * previous
    for n in range(2, power + 1):
        previous, current = current, -(radius ** n) * sign / k - n * (n - 1) / k ** 2 * previous
    return math.sqrt(2 / radius) * current


def moment_D(s: int, radius: float) -> float:
    return box_moment(s, 1, radius)


def moment_G(s: int, radius: float) -> float:
    return box_moment(s, 3, radius)


def half_sinc(x, radius: float):
    """sin(x·a)/(2x), with the removable singularity at x = 0"""
    x_ = np.asarray(x, dtype=complex)
    small = np.abs(x_) * radius < SINGULARITY_GUARD
    safe = np.where(small, 1.0, x_)
    xa2 = (x_ * radius) ** 2
    series = radius / 2 * (1 - xa2 / 6 + xa2 * xa2 / 120)
    value = np.where(small, series, np.sin(safe * radius) / (2 * safe))
    return complex(value) if value.ndim == 0 else value


def overlap_vector(table: PoleTable, s: int) -> np.ndarray:
    """C_{n,s} = ∫₀ᵃ u_n ψ_s for every state of the full set"""
    radius = table.params.radius
    k = BoxState(s, radius).wavenumber
    kappa = table.kappa
    return table.amplitude * math.sqrt(2 / radius) * (half_sinc(kappa - k, radius) - half_sinc(kappa + k, radius))


def overlap_C(table: PoleTable, n: int, s: int) -> complex:
    position = _position(table, n)
    return complex(overlap_vector(table, s)[position])


def overlap_matrix(table: PoleTable) -> np.ndarray:
    """U_{ij} = ∫₀ᵃ u_i u_j over the full set; the diagonal is a/2 - sin(2κa)/(4κ) times A²"""
    kappa_i = table.kappa[:, None]
    kappa_j = table.kappa[None, :]
    radius = table.params.radius
    amplitudes = table.amplitude[:, None] * table.amplitude[None, :]
    return amplitudes * (half_sinc(kappa_i - kappa_j, radius) - half_sinc(kappa_i + kappa_j, radius))


def overlap_U(table: PoleTable, p: int, q: int) -> complex:
    return complex(overlap_matrix(table)[_position(table, p), _position(table, q)])


def conjugate_overlap_matrix(table: PoleTable) -> np.ndarray:
    """W_{ij} = ∫₀ᵃ u_i u_j* = U_{i,-j}"""
    return overlap_matrix(table)[:, table.mirror_positions]


def linear_moment_vector(table: PoleTable) -> np.ndarray:
    """ρ_j = ∫₀ᵃ r·u_j(r) dr over the full set"""
    radius = table.params.radius
    kappa = table.kappa
    return table.amplitude * (np.sin(kappa * radius) / kappa ** 2 - radius * np.cos(kappa * radius) / kappa)


def projection_matrix(table: PoleTable, size: int) -> np.ndarray:
    """C_{n,p} for box states n = 1..size, one row per box state"""
    if not table.size:
        return np.zeros((size, 0), dtype=complex)
    return np.array([overlap_vector(table, n) for n in range(1, size + 1)])


def sum_rule(table: PoleTable, s: int) -> complex:
    """Σ_{n=1}^{N} C_{n,s}·C̄_{n,s}; C̄ = C for real box states"""
    c = overlap_vector(table, s)[: table.size]
    return complex(np.sum(c * c))


def sum_rule_defect(table: PoleTable, s: int) -> float:
    total = sum_rule(table, s)
    _logger.debug('Sum rule for s=%s, N=%s: %s', s, table.size, total)
    return abs(total.real - 1)


def _position(table: PoleTable, index: int) -> int:
    matches = np.nonzero(table.indices == index)[0]
    if not len(matches):
        raise DomainError(f'State `{index}` is not in the table of {table.size} poles')
    return int(matches[0])


@dataclass(frozen=True)
class OverlapSet:
    """Every overlap an expansion over `table` needs, computed once"""

    table: PoleTable
    C: Dict[int, np.ndarray] = field(repr=False)
    D: Dict[int, float]
    G: Dict[int, float]
    U: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)
    projection: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, table: PoleTable, box_indices: Iterable[int]) -> 'OverlapSet':
        radius = table.params.radius
        indices = sorted(set(box_indices))
        C = {s: overlap_vector(table, s) for s in indices}
        U = overlap_matrix(table)
        rho = linear_moment_vector(table)
        projection = projection_matrix(table, max([table.size, *indices]))
        for array in (*C.values(), U, rho, projection):
            array.setflags(write=False)
        _logger.info('Built overlaps for box states %s over %s poles', indices, table.size)
        return cls(
            table=table,
            C=C,
            D={s: moment_D(s, radius) for s in indices},
            G={s: moment_G(s, radius) for s in indices},
            U=U,
            rho=rho,
            projection=projection,
        )

    @property
    def W(self) -> np.ndarray:
        return self.U[:, self.table.mirror_positions]

    def extended_C(self, s: int) -> np.ndarray:
        """Overlaps of ψ_s with the basis (u_1..u_{-N}, r), the last entry being D_s"""
        return np.append(self.C[s], self.D[s])

    @property
    def extended_W(self) -> np.ndarray:
        """∫ b_i b_j* over the basis (u_1..u_{-N}, r)"""
        radius = self.table.params.radius
        return np.block(
            [
                [self.W, self.rho[:, None]],
                [np.conj(self.rho)[None, :], np.full((1, 1), radius ** 3 / 3)],
            ]
        )

    @property
    def extended_projection(self) -> np.ndarray:
        """Overlaps of the box states n = 1..K with the basis (u_1..u_{-N}, r)"""
        radius = self.table.params.radius
        moments = [moment_D(n, radius) for n in range(1, self.projection.shape[0] + 1)]
        return np.column_stack([self.projection, moments])

    def c(self, n: int, s: int) -> complex:
        return complex(self.C[s][_position(self.table, n)])

    def sum_rule(self, s: int) -> complex:
        c = self.C[s][: self.table.size]
        return complex(np.sum(c * c))

    def to_csv(self) -> str:
        header = ['p', 's', 're_C', 'im_C']
        rows: Tuple = tuple(
            (int(index), s, complex(value).real, complex(value).imag)
            for s, vector in self.C.items()
            for index, value in zip(self.table.indices, vector)
        )
        return render_csv(header, rows, {'D': self.D, 'G': self.G})
