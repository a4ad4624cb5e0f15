import logging
from contextlib import contextmanager
from functools import lru_cache
from typing import Iterator, Optional
from unittest.mock import patch

from resdecay.enums import StateKind
from resdecay.poles import ModelParams, PoleTable
from resdecay.two_particle import InitialStateSpec, TwoParticleSystem

logging.basicConfig(level=logging.ERROR)


@lru_cache(maxsize=None)
def cached_table(strength: float = 6.0, radius: float = 1.0, n_poles: int = 20) -> PoleTable:
    """Pole tables are immutable, so test cases share them"""
    return PoleTable.build(ModelParams(strength=strength, radius=radius, n_poles=n_poles))


@lru_cache(maxsize=None)
def cached_system(
    kind: StateKind,
    alpha: int,
    beta: Optional[int] = None,
    strength: float = 6.0,
    n_poles: int = 20,
) -> TwoParticleSystem:
    spec = InitialStateSpec(kind=kind, alpha=alpha, beta=beta)
    return TwoParticleSystem.build(cached_table(strength, 1.0, n_poles), spec)


@contextmanager
def with_quadrature_order(order: int) -> Iterator[None]:
    """Override the Gauss-Legendre order used for asymptotic-form observables"""
    with patch('resdecay.observables.QUADRATURE_ORDER', order):
        yield
