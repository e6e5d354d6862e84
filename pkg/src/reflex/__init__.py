"""Autonomous units that negotiate a social group over a pulse channel and decide with reflexive game theory."""

from .algebra import ActionSet, UniversalSet, parse_expr
from .rgt import Frustration, Interval, RelationshipGraph, Relation

__all__ = ["ActionSet", "UniversalSet", "parse_expr", "Frustration", "Interval", "RelationshipGraph", "Relation"]
__version__ = "0.1.0"
