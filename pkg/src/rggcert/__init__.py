"""Certify metric-measure properties of random epsilon-graphs on closed manifolds."""

from .errors import (
    CertError,
    ConfigError,
    DegreeError,
    DisconnectedGraphError,
    DomainError,
    FrameError,
    GraphConstructionError,
    InternalConsistencyError,
    OutOfInjectivityError,
    PreconditionError,
)
from .geograph import EpsilonGraph, build_epsilon_graph
from .manifolds import CATALOG, Circle, FlatTorus, ManifoldModel, Sphere2, make_model

__version__ = "0.1.0"
