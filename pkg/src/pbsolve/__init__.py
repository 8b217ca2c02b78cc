"""Exact pseudo-Boolean solver toolkit."""

__version__ = "0.1.0"

from .opb import Instance, PbConstraint, parse, write_opb  # noqa: F401
from .model import EngineProblem, linearize, oracle_solve  # noqa: F401
