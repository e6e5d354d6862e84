"""Reflexive game theory engine.

Relationship graph -> polynomial -> stratification tree -> folded diagonal form
-> per-subject decision equation ``x = A x + B ~x`` -> solution interval.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .algebra import (
    ActionSet,
    Complement,
    Const,
    Expr,
    Join,
    Meet,
    UniversalSet,
    Var,
    all_elements,
    evaluate,
    join_all,
    meet_all,
)


class NotDecomposable(ValueError):
    """The relationship graph has no polynomial form."""


class Relation(enum.Enum):
    ALLIANCE = "alliance"
    CONFLICT = "conflict"


def _pair(u: str, v: str) -> frozenset:
    return frozenset((u, v))


@dataclass(frozen=True)
class RelationshipGraph:
    subjects: tuple[str, ...]
    relations: Mapping[frozenset, Relation]

    def __post_init__(self):
        subjects = tuple(self.subjects)
        object.__setattr__(self, "subjects", subjects)
        if len(subjects) < 2:
            raise ValueError("a relationship graph needs at least two subjects")
        if len(set(subjects)) != len(subjects):
            raise ValueError(f"duplicate subjects in {subjects}")
        rel = {}
        for key, value in dict(self.relations).items():
            key = frozenset(key)
            if len(key) != 2 or not key <= set(subjects):
                raise ValueError(f"bad pair {sorted(key)}")
            rel[key] = Relation(value)
        missing = [(u, v) for u, v in itertools.combinations(subjects, 2) if _pair(u, v) not in rel]
        if missing:
            raise ValueError(f"unlabeled pairs: {missing}")
        object.__setattr__(self, "relations", rel)

    @classmethod
    def from_pairs(cls, subjects: Sequence[str], pairs: Mapping[tuple[str, str], Relation | str]):
        return cls(tuple(subjects), {_pair(u, v): Relation(r) for (u, v), r in pairs.items()})

    def relation(self, u: str, v: str) -> Relation:
        return self.relations[_pair(u, v)]

    def __hash__(self):
        return hash((self.subjects, frozenset(self.relations.items())))


def _components(nodes: list[str], graph: RelationshipGraph, kind: Relation) -> list[list[str]]:
    """Connected components of ``nodes`` using only edges labeled ``kind``."""
    seen: set[str] = set()
    comps = []
    for start in nodes:
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in nodes:
                if v not in seen and graph.relation(u, v) is kind:
                    seen.add(v)
                    stack.append(v)
        comps.append(sorted(comp, key=nodes.index))
    comps.sort(key=lambda c: nodes.index(c[0]))
    return comps


def graph_to_polynomial(graph: RelationshipGraph) -> Expr:
    def build(nodes: list[str]) -> Expr:
        if len(nodes) == 1:
            return Var(nodes[0])
        # disconnected alliance graph: the parts are in conflict with each other
        parts = _components(nodes, graph, Relation.ALLIANCE)
        if len(parts) > 1:
            return join_all([build(p) for p in parts])
        parts = _components(nodes, graph, Relation.CONFLICT)
        if len(parts) > 1:
            return meet_all([build(p) for p in parts])
        raise NotDecomposable(f"graph is not decomposable: subjects {nodes} split under neither alliance nor conflict")

    return build(list(graph.subjects))


# --- stratification --------------------------------------------------------


class Combinator(enum.Enum):
    LEAF = "leaf"
    PRODUCT = "product"
    SUM = "sum"


@dataclass(frozen=True)
class StratNode:
    polynomial: Expr
    combinator: Combinator
    children: tuple["StratNode", ...] = ()

    def recombine(self) -> Expr:
        """Children joined back under the node's operation."""
        if self.combinator is Combinator.LEAF:
            return self.polynomial
        parts = [c.polynomial for c in self.children]
        return meet_all(parts) if self.combinator is Combinator.PRODUCT else join_all(parts)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


def _flatten(e: Expr, kind: type) -> list[Expr]:
    if isinstance(e, kind):
        return _flatten(e.left, kind) + _flatten(e.right, kind)
    return [e]


def stratify(poly: Expr) -> StratNode:
    if isinstance(poly, Var):
        return StratNode(poly, Combinator.LEAF)
    if isinstance(poly, Join):
        terms = _flatten(poly, Join)
        return StratNode(poly, Combinator.SUM, tuple(stratify(t) for t in terms))
    if isinstance(poly, Meet):
        terms = _flatten(poly, Meet)
        return StratNode(poly, Combinator.PRODUCT, tuple(stratify(t) for t in terms))
    raise ValueError(f"not a polynomial (constants and complements are not allowed): {poly}")


def exp_expr(p: Expr, w: Expr) -> Expr:
    return Join(p, Complement(w))


def fold_diagonal(tree: StratNode) -> Expr:
    if tree.combinator is Combinator.LEAF:
        return tree.polynomial
    folded = [fold_diagonal(c) for c in tree.children]
    exponent = meet_all(folded) if tree.combinator is Combinator.PRODUCT else join_all(folded)
    return exp_expr(tree.polynomial, exponent)


def decision_formula(graph: RelationshipGraph) -> Expr:
    """Graph to folded diagonal form in one go."""
    return fold_diagonal(stratify(graph_to_polynomial(graph)))


# --- decision equations ----------------------------------------------------


@dataclass(frozen=True)
class CanonicalCoefficients:
    A: ActionSet
    B: ActionSet
    subject: str


@dataclass(frozen=True)
class Interval:
    lower: ActionSet
    upper: ActionSet

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"empty interval [{self.lower}, {self.upper}]")

    @property
    def is_point(self) -> bool:
        return self.lower == self.upper

    def __str__(self):
        if self.is_point:
            return str(self.lower)
        return f"[{self.lower}, {self.upper}]"


@dataclass(frozen=True)
class Frustration:
    def __str__(self):
        return "frustration"


DecisionResult = Interval | Frustration
FRUSTRATION = Frustration()


def canonical_coefficients(
    folded: Expr, subject: str, influences: Mapping[str, ActionSet], universe: UniversalSet
) -> CanonicalCoefficients:
    """Shannon split of ``folded`` on ``subject``: A at subject=1, B at subject=0."""
    env = {k: v for k, v in influences.items() if k != subject}
    a = evaluate(folded, {**env, subject: universe.full()})
    b = evaluate(folded, {**env, subject: universe.empty()})
    return CanonicalCoefficients(a, b, subject)


def canonical_expressions(folded: Expr, subject: str, universe: UniversalSet) -> tuple[Expr, Expr]:
    """Symbolic A and B: ``folded`` with the subject replaced by the constants 1 and 0."""

    def subst(e: Expr, value: ActionSet) -> Expr:
        if isinstance(e, Var):
            return Const(value) if e.name == subject else e
        if isinstance(e, Const):
            return e
        if isinstance(e, Complement):
            return Complement(subst(e.operand, value))
        return type(e)(subst(e.left, value), subst(e.right, value))

    return subst(folded, universe.full()), subst(folded, universe.empty())


def solve_decision(c: CanonicalCoefficients) -> DecisionResult:
    if c.B <= c.A:
        return Interval(c.B, c.A)
    return FRUSTRATION


def interval_members(result: DecisionResult) -> list[ActionSet]:
    if not isinstance(result, Interval):
        raise ValueError("a frustrated subject has no alternatives")
    return [s for s in all_elements(result.lower.universe) if result.lower <= s <= result.upper]


class InfluenceMatrix:
    """Off-diagonal influences; ``m[row, col]`` is what ``row`` exerts on ``col``.

    The diagonal holds the subject's own variable and has no stored value.
    """

    def __init__(self, subjects: Sequence[str], cells: Mapping[tuple[str, str], ActionSet] | None = None):
        self.subjects = tuple(subjects)
        self._cells: dict[tuple[str, str], ActionSet] = {}
        for key, value in (cells or {}).items():
            self[key] = value

    def _check(self, key):
        row, col = key
        if row not in self.subjects or col not in self.subjects:
            raise KeyError(f"unknown subject in {key}")
        if row == col:
            raise KeyError(f"diagonal cell {key} holds the subject variable, not a value")

    def __getitem__(self, key: tuple[str, str]) -> ActionSet:
        self._check(key)
        try:
            return self._cells[key]
        except KeyError:
            raise KeyError(f"influence {key[0]}->{key[1]} not set") from None

    def __setitem__(self, key: tuple[str, str], value: ActionSet) -> None:
        self._check(key)
        self._cells[key] = value

    def __eq__(self, other):
        return isinstance(other, InfluenceMatrix) and (self.subjects, self._cells) == (
            other.subjects,
            other._cells,
        )

    def cells(self) -> dict[tuple[str, str], ActionSet]:
        return dict(self._cells)

    def missing(self) -> list[tuple[str, str]]:
        return [
            (r, c) for r in self.subjects for c in self.subjects if r != c and (r, c) not in self._cells
        ]

    def is_complete(self) -> bool:
        return not self.missing()

    def column(self, subject: str) -> dict[str, ActionSet]:
        return {r: self[r, subject] for r in self.subjects if r != subject}


def forward_task(folded: Expr, matrix: InfluenceMatrix, universe: UniversalSet) -> dict[str, DecisionResult]:
    missing = matrix.missing()
    if missing:
        raise ValueError(f"influence matrix incomplete, missing {missing}")
    return {
        s: solve_decision(canonical_coefficients(folded, s, matrix.column(s), universe))
        for s in matrix.subjects
    }


def inverse_task(
    folded: Expr,
    controlled: str,
    target: ActionSet,
    subjects: Sequence[str],
    universe: UniversalSet,
) -> list[dict[str, ActionSet]]:
    """All joint influences that pin ``controlled`` to exactly ``target``.

    A joint influence qualifies when both coefficients equal the target, so the
    decision interval collapses to the single point ``target``.  Results are in
    grid order (binary counting, first subject slowest).
    """
    others = [s for s in subjects if s != controlled]
    if not others:
        raise ValueError("inverse task needs at least one influencing subject")
    out = []
    for values in itertools.product(all_elements(universe), repeat=len(others)):
        env = dict(zip(others, values))
        c = canonical_coefficients(folded, controlled, env, universe)
        if c.A == target and c.B == target:
            out.append(env)
    return out


def preference_key(s: ActionSet) -> tuple[int, int]:
    """Larger sets first, then binary-counting order: 1, {alpha}, {beta}, 0 at n = 2."""
    return (-len(s), s.mask)


def first_strategy(solutions: Iterable[Mapping[str, ActionSet]], order: Sequence[str]):
    """Lexicographically first joint influence under ``preference_key``."""
    ranked = sorted(solutions, key=lambda sol: [preference_key(sol[s]) for s in order])
    return ranked[0] if ranked else None
