"""Boolean algebra of action subsets and an expression language over subject variables.

Sets are stored as bitmasks over the universe's action order; bit ``i`` set means
``actions[i]`` is a member.  The full set prints as ``1`` and the empty set as ``0``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

MAX_ACTIONS = 16


class AlgebraMismatch(ValueError):
    """Operands belong to different universal sets."""


class UnboundVariable(LookupError):
    def __init__(self, subject: str):
        super().__init__(f"no assignment for subject {subject!r}")
        self.subject = subject


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class UniversalSet:
    actions: tuple[str, ...]

    def __post_init__(self):
        actions = tuple(self.actions)
        object.__setattr__(self, "actions", actions)
        if not 1 <= len(actions) <= MAX_ACTIONS:
            raise ValueError(f"universe needs 1..{MAX_ACTIONS} actions, got {len(actions)}")
        if any(not isinstance(a, str) or not a for a in actions):
            raise ValueError("action names must be non-empty strings")
        if len(set(actions)) != len(actions):
            raise ValueError(f"duplicate action names in {actions}")

    @property
    def size(self) -> int:
        return len(self.actions)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.actions)) - 1

    def full(self) -> "ActionSet":
        return ActionSet(self, self.full_mask)

    def empty(self) -> "ActionSet":
        return ActionSet(self, 0)

    def of(self, names: Iterable[str]) -> "ActionSet":
        mask = 0
        for name in names:
            try:
                mask |= 1 << self.actions.index(name)
            except ValueError:
                raise ValueError(f"{name!r} is not an action of {self.actions}") from None
        return ActionSet(self, mask)

    def parse_set(self, text: str) -> "ActionSet":
        """Parse ``1``, ``0``, ``{}`` or ``{alpha,beta}``."""
        text = text.strip()
        if text == "1":
            return self.full()
        if text == "0":
            return self.empty()
        if not (text.startswith("{") and text.endswith("}")):
            raise ParseError(f"bad set literal {text!r}")
        body = text[1:-1].strip()
        names = [n.strip() for n in body.split(",")] if body else []
        if any(not n for n in names):
            raise ParseError(f"bad set literal {text!r}")
        try:
            return self.of(names)
        except ValueError as exc:
            raise ParseError(str(exc)) from None


@dataclass(frozen=True)
class ActionSet:
    universe: UniversalSet
    mask: int

    def __post_init__(self):
        if self.mask < 0 or self.mask > self.universe.full_mask:
            raise ValueError(f"mask {self.mask} outside universe of size {self.universe.size}")

    @property
    def members(self) -> tuple[str, ...]:
        return tuple(a for i, a in enumerate(self.universe.actions) if self.mask >> i & 1)

    def issubset(self, other: "ActionSet") -> bool:
        _check_same(self, other)
        return self.mask & ~other.mask == 0

    def __le__(self, other: "ActionSet") -> bool:
        return self.issubset(other)

    def __ge__(self, other: "ActionSet") -> bool:
        return other.issubset(self)

    def __and__(self, other: "ActionSet") -> "ActionSet":
        return meet(self, other)

    def __or__(self, other: "ActionSet") -> "ActionSet":
        return join(self, other)

    def __invert__(self) -> "ActionSet":
        return complement(self)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __str__(self) -> str:
        if self.mask == self.universe.full_mask:
            return "1"
        if self.mask == 0:
            return "0"
        return "{" + ",".join(self.members) + "}"

    def __repr__(self) -> str:
        return f"ActionSet({self})"


def _check_same(a: ActionSet, b: ActionSet) -> None:
    if a.universe != b.universe:
        raise AlgebraMismatch(f"{a.universe.actions} vs {b.universe.actions}")


def meet(a: ActionSet, b: ActionSet) -> ActionSet:
    _check_same(a, b)
    return ActionSet(a.universe, a.mask & b.mask)


def join(a: ActionSet, b: ActionSet) -> ActionSet:
    _check_same(a, b)
    return ActionSet(a.universe, a.mask | b.mask)


def complement(a: ActionSet) -> ActionSet:
    return ActionSet(a.universe, a.universe.full_mask & ~a.mask)


def exp_op(p: ActionSet, w: ActionSet) -> ActionSet:
    """The exponential ``P^W = P + ~W`` (set implication W -> P)."""
    return join(p, complement(w))


def all_elements(universe: UniversalSet) -> list[ActionSet]:
    """Every subset, ordered by binary counting over the action order."""
    return [ActionSet(universe, m) for m in range(universe.full_mask + 1)]


# --- expressions -----------------------------------------------------------


class Expr:
    def __mul__(self, other: "Expr") -> "Expr":
        return Meet(self, other)

    def __add__(self, other: "Expr") -> "Expr":
        return Join(self, other)

    def __invert__(self) -> "Expr":
        return Complement(self)

    def __str__(self) -> str:
        return format_expr(self)


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    value: ActionSet


@dataclass(frozen=True)
class Meet(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Join(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Complement(Expr):
    operand: Expr


def meet_all(terms: Sequence[Expr]) -> Expr:
    out = terms[0]
    for t in terms[1:]:
        out = Meet(out, t)
    return out


def join_all(terms: Sequence[Expr]) -> Expr:
    out = terms[0]
    for t in terms[1:]:
        out = Join(out, t)
    return out


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Complement):
        return variables(e.operand)
    return variables(e.left) | variables(e.right)


def evaluate(e: Expr, assignment: Mapping[str, ActionSet]) -> ActionSet:
    if isinstance(e, Var):
        try:
            return assignment[e.name]
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Meet):
        return meet(evaluate(e.left, assignment), evaluate(e.right, assignment))
    if isinstance(e, Join):
        return join(evaluate(e.left, assignment), evaluate(e.right, assignment))
    if isinstance(e, Complement):
        return complement(evaluate(e.operand, assignment))
    raise TypeError(f"not an expression: {e!r}")


def equivalent(e1: Expr, e2: Expr, subjects: Sequence[str], universe: UniversalSet) -> bool:
    """True iff both expressions agree on the whole (2^n)^k assignment grid."""
    subjects = list(subjects)
    elements = all_elements(universe)
    for values in itertools.product(elements, repeat=len(subjects)):
        env = dict(zip(subjects, values))
        if evaluate(e1, env) != evaluate(e2, env):
            return False
    return True


def format_expr(e: Expr) -> str:
    # single-letter variable products are written by juxtaposition, as in "ab + c"
    def fmt(node: Expr, parent: str) -> str:
        if isinstance(node, Var):
            return node.name
        if isinstance(node, Const):
            return str(node.value)
        if isinstance(node, Complement):
            inner = fmt(node.operand, "not")
            return "~" + inner
        if isinstance(node, Join):
            s = f"{fmt(node.left, 'join')} + {fmt(node.right, 'join')}"
            return f"({s})" if parent in ("meet", "not") else s
        if isinstance(node, Meet):
            left, right = fmt(node.left, "meet"), fmt(node.right, "meet")
            short = all(isinstance(x, Var) and len(x.name) == 1 for x in _factors(node))
            s = left + right if short else f"{left}*{right}"
            return f"({s})" if parent == "not" else s
        raise TypeError(f"not an expression: {node!r}")

    return fmt(e, "top")


def _factors(e: Expr) -> list[Expr]:
    if isinstance(e, Meet):
        return _factors(e.left) + _factors(e.right)
    return [e]


# --- parsing ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\{[^}]*\})|([A-Za-z_][A-Za-z0-9_]*)|([01])|(.))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        setlit, ident, digit, other = m.groups()
        if setlit:
            tokens.append(("set", setlit))
        elif ident:
            tokens.append(("ident", ident))
        elif digit:
            tokens.append(("set", digit))
        elif other in "+*~()":
            tokens.append((other, other))
        else:
            raise ParseError(f"unexpected character {other!r} in {text!r}")
        pos = m.end()
    return tokens


def _split_ident(ident: str, subjects: Sequence[str] | None) -> list[str]:
    if subjects is None:
        return list(ident)
    if ident in subjects:
        return [ident]
    # greedy longest-prefix split, e.g. "bc" -> ["b", "c"]
    names = sorted(subjects, key=len, reverse=True)
    out, rest = [], ident
    while rest:
        for name in names:
            if rest.startswith(name):
                out.append(name)
                rest = rest[len(name):]
                break
        else:
            raise ParseError(f"unknown subject in {ident!r}; declared: {list(subjects)}")
    return out


def parse_expr(text: str, universe: UniversalSet, subjects: Sequence[str] | None = None) -> Expr:
    """Parse ``ab + c``, ``a*~b``, ``(a+b){alpha}`` and similar.

    Without ``subjects`` every letter of an identifier is its own variable.
    """
    tokens = _tokenize(text)
    pos = 0

    def peek():
        return tokens[pos][0] if pos < len(tokens) else None

    def take(kind):
        nonlocal pos
        if peek() != kind:
            raise ParseError(f"expected {kind!r} in {text!r}")
        pos += 1
        return tokens[pos - 1][1]

    def parse_sum():
        terms = [parse_product()]
        while peek() == "+":
            take("+")
            terms.append(parse_product())
        return join_all(terms)

    def parse_product():
        factors = [parse_factor()]
        while peek() in ("*", "~", "(", "set", "ident", "var"):
            if peek() == "*":
                take("*")
            factors.append(parse_factor())
        return meet_all(factors)

    def parse_factor():
        kind = peek()
        if kind == "~":
            take("~")
            return Complement(parse_factor())
        if kind == "(":
            take("(")
            inner = parse_sum()
            take(")")
            return inner
        if kind == "set":
            return Const(universe.parse_set(take("set")))
        if kind == "ident":
            first, *rest = _split_ident(take("ident"), subjects)
            tokens[pos:pos] = [("var", n) for n in rest]
            return Var(first)
        if kind == "var":
            return Var(take("var"))
        raise ParseError(f"unexpected end or token in {text!r}")

    if not tokens:
        raise ParseError("empty expression")
    result = parse_sum()
    if pos != len(tokens):
        raise ParseError(f"trailing input in {text!r}")
    return result
