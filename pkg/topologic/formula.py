from __future__ import annotations

import functools
import random
import re
from dataclasses import dataclass
from typing import Any, Iterable, NamedTuple, Sequence

RESERVED = frozenset(("K", "L", "top", "bot"))
IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# Binding strength used by the printer; higher binds tighter
PREC_IFF = 1
PREC_IMP = 2
PREC_OR = 3
PREC_AND = 4
PREC_UNARY = 5


class Formula:
    """
    Base class for formulas of the bimodal language.

    Formulas are immutable values: they hash and compare structurally, and can
    be shared freely.
    """
    __slots__ = ()

    def desugar(self) -> Formula:
        """
        Rewrite derived connectives (|, ->, <->, L, <>) in terms of ~, &, K, []
        """
        return desugar(self)

    def atoms(self) -> frozenset[str]:
        return atoms(self)

    def depth(self) -> int:
        return depth(self)

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str

    def __post_init__(self):
        if not IDENTIFIER.match(self.name):
            raise ValueError(f"{self.name!r} is not a valid atom name")
        if self.name in RESERVED:
            raise ValueError(f"{self.name!r} is a reserved word")


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class K(Formula):
    """Knowledge: true throughout the current view"""
    arg: Formula


@dataclass(frozen=True)
class L(Formula):
    """Dual of K: true somewhere in the current view"""
    arg: Formula


@dataclass(frozen=True)
class Box(Formula):
    """Effort: true after every restriction of the view around the point"""
    arg: Formula


@dataclass(frozen=True)
class Dia(Formula):
    """Dual of Box: true after some restriction of the view around the point"""
    arg: Formula


TOP = Top()
BOT = Bot()


class SyntaxClass(NamedTuple):
    in_L_prime: bool
    in_L_double_prime: bool
    is_PNF: bool
    is_DNF: bool
    modal_depth: int


@functools.lru_cache(maxsize=8192)
def desugar(f: Formula) -> Formula:
    match f:
        case Atom() | Top() | Bot():
            return f
        case Not(a):
            return Not(desugar(a))
        case And(a, b):
            return And(desugar(a), desugar(b))
        case Or(a, b):
            return Not(And(Not(desugar(a)), Not(desugar(b))))
        case Implies(a, b):
            return Not(And(desugar(a), Not(desugar(b))))
        case Iff(a, b):
            da, db = desugar(a), desugar(b)
            return And(Not(And(da, Not(db))), Not(And(db, Not(da))))
        case K(a):
            return K(desugar(a))
        case L(a):
            return Not(K(Not(desugar(a))))
        case Box(a):
            return Box(desugar(a))
        case Dia(a):
            return Not(Box(Not(desugar(a))))
    raise TypeError(f"not a formula: {f!r}")


def children(f: Formula) -> tuple[Formula, ...]:
    match f:
        case Not(a) | K(a) | L(a) | Box(a) | Dia(a):
            return (a,)
        case And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b):
            return (a, b)
    return ()


def atoms(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset((f.name,))
    res: frozenset[str] = frozenset()
    for c in children(f):
        res |= atoms(c)
    return res


def depth(f: Formula) -> int:
    """
    Nesting depth of connectives: atoms, top and bot have depth 0
    """
    if not (sub := children(f)):
        return 0
    return 1 + max(depth(c) for c in sub)


def modal_depth(f: Formula) -> int:
    sub = children(f)
    inner = max((modal_depth(c) for c in sub), default=0)
    if isinstance(f, (K, L, Box, Dia)):
        return inner + 1
    return inner


def subformulas(f: Formula) -> tuple[Formula, ...]:
    """
    Return the subformulas of the desugared form of f, in post-order, each
    once. f itself (desugared) is the last element.
    """
    seen: dict[Formula, None] = {}

    def visit(g: Formula) -> None:
        for c in children(g):
            visit(c)
        seen.setdefault(g, None)

    visit(desugar(f))
    return tuple(seen)


def format_formula(f: Formula, prec: int = 0) -> str:
    """
    Render a formula in the concrete grammar, with the minimum amount of
    parentheses needed for it to parse back to the same tree
    """
    match f:
        case Atom(name):
            return name
        case Top():
            return "top"
        case Bot():
            return "bot"
        case Not(a):
            return "~" + format_formula(a, PREC_UNARY)
        case K(a):
            return "K " + format_formula(a, PREC_UNARY)
        case L(a):
            return "L " + format_formula(a, PREC_UNARY)
        case Box(a):
            return "[] " + format_formula(a, PREC_UNARY)
        case Dia(a):
            return "<> " + format_formula(a, PREC_UNARY)
        case Iff(a, b):
            mine = PREC_IFF
            text = f"{format_formula(a, PREC_IFF)} <-> {format_formula(b, PREC_IMP)}"
        case Implies(a, b):
            mine = PREC_IMP
            text = f"{format_formula(a, PREC_OR)} -> {format_formula(b, PREC_IMP)}"
        case Or(a, b):
            mine = PREC_OR
            text = f"{format_formula(a, PREC_OR)} | {format_formula(b, PREC_AND)}"
        case And(a, b):
            mine = PREC_AND
            text = f"{format_formula(a, PREC_AND)} & {format_formula(b, PREC_UNARY)}"
        case _:
            raise TypeError(f"not a formula: {f!r}")
    if mine < prec:
        return f"({text})"
    return text


def parse(text: str) -> Formula:
    from .parser import parse_formula
    return parse_formula(text)


def conj(items: Iterable[Formula]) -> Formula:
    res: Formula | None = None
    for item in items:
        res = item if res is None else And(res, item)
    return TOP if res is None else res


def disj(items: Iterable[Formula]) -> Formula:
    res: Formula | None = None
    for item in items:
        res = item if res is None else Or(res, item)
    return BOT if res is None else res


def conjuncts(f: Formula) -> list[Formula]:
    """
    Flatten a tree of And nodes
    """
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


def disjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, Or):
        return disjuncts(f.left) + disjuncts(f.right)
    return [f]


def in_l_prime(f: Formula) -> bool:
    """
    Check membership in the class generated from atoms by &, ~ and the compound
    prefix <> K (recognised on the sugared tree)
    """
    match f:
        case Atom() | Top() | Bot():
            return True
        case Not(a):
            return in_l_prime(a)
        case And(a, b):
            return in_l_prime(a) and in_l_prime(b)
        case Dia(K(a)):
            return in_l_prime(a)
    return False


def in_l_double_prime(f: Formula) -> bool:
    match f:
        case K(a) | L(a):
            return in_l_prime(a)
    return False


def is_pnf(f: Formula) -> bool:
    """
    Check for the prime normal form psi & K psi' & L psi_1 & ... & L psi_n,
    with every component in L'. Components equal to top may be omitted.
    """
    known = 0
    for c in conjuncts(f):
        match c:
            case K(a) if in_l_prime(a):
                known += 1
            case L(a) if in_l_prime(a):
                pass
            case _ if in_l_prime(c):
                pass
            case _:
                return False
    return known <= 1


def is_dnf(f: Formula) -> bool:
    return all(is_pnf(d) for d in disjuncts(f))


def classify(f: Formula) -> SyntaxClass:
    return SyntaxClass(
        in_L_prime=in_l_prime(f),
        in_L_double_prime=in_l_double_prime(f),
        is_PNF=is_pnf(f),
        is_DNF=is_dnf(f),
        modal_depth=modal_depth(f),
    )


def to_json(f: Formula) -> dict[str, Any]:
    match f:
        case Atom(name):
            return {"atom": name}
        case Top():
            return {"op": "top"}
        case Bot():
            return {"op": "bot"}
    return {"op": type(f).__name__.lower(), "args": [to_json(c) for c in children(f)]}


def l_prime_formulas(atom_names: Sequence[str], depth: int) -> list[Formula]:
    """
    Enumerate L' formulas up to the given number of nested constructors.

    Conjunctions only combine distinct formulas, in the order they were
    generated.
    """
    levels: list[list[Formula]] = [[Atom(a) for a in atom_names]]
    for _ in range(depth):
        below = [f for level in levels for f in level]
        newest = levels[-1]
        current: list[Formula] = []
        for f in newest:
            current.append(Not(f))
            current.append(Dia(K(f)))
        for i, f in enumerate(below):
            for g in below[i + 1:]:
                if f in newest or g in newest:
                    current.append(And(f, g))
        levels.append(current)
    return [f for level in levels for f in level]


def random_formula(rng: random.Random, atom_names: Sequence[str], depth: int) -> Formula:
    """
    Generate a random formula with all the connectives, of depth at most
    ``depth``
    """
    if depth == 0 or rng.random() < 0.2:
        roll = rng.random()
        if roll < 0.05:
            return TOP
        elif roll < 0.1:
            return BOT
        return Atom(rng.choice(atom_names))
    match rng.randrange(11):
        case 0:
            return Not(random_formula(rng, atom_names, depth - 1))
        case 1:
            return And(random_formula(rng, atom_names, depth - 1), random_formula(rng, atom_names, depth - 1))
        case 2:
            return Or(random_formula(rng, atom_names, depth - 1), random_formula(rng, atom_names, depth - 1))
        case 3:
            return Implies(random_formula(rng, atom_names, depth - 1), random_formula(rng, atom_names, depth - 1))
        case 4:
            return Iff(random_formula(rng, atom_names, depth - 1), random_formula(rng, atom_names, depth - 1))
        case 5 | 6:
            return K(random_formula(rng, atom_names, depth - 1))
        case 7:
            return L(random_formula(rng, atom_names, depth - 1))
        case 8 | 9:
            return Box(random_formula(rng, atom_names, depth - 1))
        case _:
            return Dia(random_formula(rng, atom_names, depth - 1))
