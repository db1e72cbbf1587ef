"""Contraction certificates and reachable tubes from mixed Jacobians."""
from .errors import (BlowupError, CapacityError, DivergenceError, DomainError,
                     PreconditionError, ReachFailure, ShapeError)
from .interval import Interval, IntervalMatrix, IntervalVector
from .vfield import VectorField, load_system, parse_system

__version__ = "0.1.0"
