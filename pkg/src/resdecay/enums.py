from enum import Enum


class StateKind(Enum):
    factorized_symmetric = 'factorized_symmetric'
    entangled_symmetric = 'entangled_symmetric'
    entangled_antisymmetric = 'entangled_antisymmetric'
    single = 'single'

    @property
    def parity(self) -> int:
        """Exchange parity of the two-particle state, +1 or -1"""
        return -1 if self == StateKind.entangled_antisymmetric else 1

    @property
    def entangled(self) -> bool:
        return self in (StateKind.entangled_symmetric, StateKind.entangled_antisymmetric)


class PropagatorForm(Enum):
    exact = 'exact'
    split = 'split'
    asymptotic = 'asymptotic'
    auto = 'auto'


class SlopeAxis(Enum):
    semilog = 'semilog'
    loglog = 'loglog'


class ExponentialVariant(Enum):
    """What the "purely exponential" curves of the short-time insets include"""

    poles = 'poles'
    poles_mixed = 'poles_mixed'
