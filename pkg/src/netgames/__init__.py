"""Game-theoretic tools for networked decision makers.

Modules: ``game`` (strategic-form games and predicates), ``solvers``
(equilibrium and bargaining searches), ``dynamics`` (learning rules),
``scenarios`` (worked-example games), ``coalition`` (TU games, core,
Shapley), ``formation`` (merge-and-split) and ``harness`` (CLI and I/O).
"""

from .errors import (
    CapabilityError,
    CapacityError,
    ContractError,
    DegenerateChannelError,
    DisagreementError,
    GameError,
    LPError,
    NoEquilibriumError,
    ShapeError,
    UndefinedRatioError,
    ValidationError,
)
from .game import ContinuousGame, FiniteGame, JointDistribution, MixedProfile, PotentialCertificate

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "CapacityError",
    "ContinuousGame",
    "ContractError",
    "DegenerateChannelError",
    "DisagreementError",
    "FiniteGame",
    "GameError",
    "JointDistribution",
    "LPError",
    "MixedProfile",
    "NoEquilibriumError",
    "PotentialCertificate",
    "ShapeError",
    "UndefinedRatioError",
    "ValidationError",
]
