"""Measure-preserving systems, shrinking targets and orbit statistics."""
from .errors import ConfigError, ContractViolation, NoDataError
from .systems import (
    CAT_MAP,
    CircleRotation,
    ExpandingMap,
    IntervalExchange,
    Point,
    ToralAutomorphism,
    TorusRotation,
    ball_measure,
    dist,
    orbit,
    random_point,
)
from .targets import Explicit, Geometric, InverseF, PowerLaw, TargetSequence
from .waiting import Exceeded, exponent_scan, waiting_time

__all__ = [
    "CAT_MAP",
    "CircleRotation",
    "ConfigError",
    "ContractViolation",
    "Exceeded",
    "ExpandingMap",
    "Explicit",
    "Geometric",
    "IntervalExchange",
    "InverseF",
    "NoDataError",
    "Point",
    "PowerLaw",
    "TargetSequence",
    "ToralAutomorphism",
    "TorusRotation",
    "ball_measure",
    "dist",
    "exponent_scan",
    "orbit",
    "random_point",
    "waiting_time",
]
