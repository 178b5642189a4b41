from __future__ import annotations

import logging
from typing import Mapping, NamedTuple

from .errors import InvariantViolation, PreconditionError
from .formula import And, Atom, Bot, Box, Dia, Formula, Iff, Implies, K, L, Not, Or, Top, parse
from .space import Model, SubsetSpace, World

log = logging.getLogger(__name__)

OPEN_CHAR = parse("A -> <> K A")
CLOSED_CHAR = parse("[] L A -> A")
DENSE_CHAR = parse("[] L A")
NOWHERE_DENSE_CHAR = parse("L <> K ~A")
BOUNDARY_CHAR = parse("[] (L A & L ~A)")


class Validity(NamedTuple):
    valid: bool
    counterexample: World | None = None


class Characterization(NamedTuple):
    """
    Topological properties of an atom's extension, computed on sets and by
    validity of the corresponding formula
    """
    open: bool
    closed: bool
    dense: bool
    nowhere_dense: bool
    open_formula: bool
    closed_formula: bool
    dense_formula: bool
    nowhere_dense_formula: bool


class Evaluator:
    """
    Compute the extension of formulas in a subset space under a valuation.

    The extension of a formula is a tuple indexed like ``space.masks``: for
    each open U, the bitmask of the points x in U such that (x, U) satisfies
    the formula. Results are memoized per formula.
    """

    def __init__(self, space: SubsetSpace, valuation: Mapping[str, int]):
        self.space = space
        self.valuation = valuation
        self.memo: dict[Formula, tuple[int, ...]] = {}

    @classmethod
    def for_model(cls, model: Model) -> Evaluator:
        return cls(model.space, model.valuation)

    def table(self, f: Formula) -> tuple[int, ...]:
        if (res := self.memo.get(f)) is None:
            res = self.memo[f] = self._compute(f)
        return res

    def _compute(self, f: Formula) -> tuple[int, ...]:
        masks = self.space.masks
        match f:
            case Atom(name):
                val = self.valuation.get(name, 0)
                return tuple(u & val for u in masks)
            case Top():
                return masks
            case Bot():
                return (0,) * len(masks)
            case Not(a):
                return tuple(u & ~e for u, e in zip(masks, self.table(a)))
            case And(a, b):
                return tuple(x & y for x, y in zip(self.table(a), self.table(b)))
            case Or(a, b):
                return tuple(x | y for x, y in zip(self.table(a), self.table(b)))
            case Implies(a, b):
                return tuple(u & (~x | y) for u, x, y in zip(masks, self.table(a), self.table(b)))
            case Iff(a, b):
                return tuple(u & ~(x ^ y) for u, x, y in zip(masks, self.table(a), self.table(b)))
            case K(a):
                return tuple(u if e == u else 0 for u, e in zip(masks, self.table(a)))
            case L(a):
                return tuple(u if e else 0 for u, e in zip(masks, self.table(a)))
            case Box(a):
                sub = self.table(a)
                res = []
                for u, down in zip(masks, self.space.down_indices):
                    failing = 0
                    for j in down:
                        failing |= masks[j] & ~sub[j]
                    res.append(u & ~failing)
                return tuple(res)
            case Dia(a):
                sub = self.table(a)
                res = []
                for u, down in zip(masks, self.space.down_indices):
                    reached = 0
                    for j in down:
                        reached |= sub[j]
                    res.append(u & reached)
                return tuple(res)
        raise TypeError(f"not a formula: {f!r}")

    def holds(self, point: int, open_mask: int, f: Formula) -> bool:
        return bool(self.table(f)[self.space.open_index[open_mask]] >> point & 1)

    def first_failure(self, f: Formula) -> tuple[int, int] | None:
        """
        Return the least (point index, open mask) where f fails, or None
        """
        table = self.table(f)
        space = self.space
        for i in range(len(space.points)):
            for m, ext in zip(space.masks, table):
                if m >> i & 1 and not ext >> i & 1:
                    return (i, m)
        return None

    def valid(self, f: Formula) -> bool:
        return all(e == u for u, e in zip(self.space.masks, self.table(f)))


def evaluate(model: Model, world: World, f: Formula) -> bool:
    """
    Check whether f holds at the given world of the model
    """
    world = model.space.world(world.point, world.open)
    return Evaluator.for_model(model).holds(
        model.space.index[world.point], model.space.mask(world.open), f)


def truth_set(model: Model, f: Formula) -> frozenset[World]:
    space = model.space
    table = Evaluator.for_model(model).table(f)
    return frozenset(World(space.points[i], space.members(m))
                     for i, m in space.world_masks() if table[space.open_index[m]] >> i & 1)


def valid_in_model(model: Model, f: Formula) -> Validity:
    """
    Check f at every world, returning the least failing world if any
    """
    failure = Evaluator.for_model(model).first_failure(f)
    if failure is None:
        return Validity(True)
    i, m = failure
    return Validity(False, World(model.space.points[i], model.space.members(m)))


def characterize(model: Model, atom: str) -> Characterization:
    """
    Compute whether the extension of an atom is open, closed, dense or nowhere
    dense, both set-theoretically and through the validity of the
    characterizing formulas, which must agree
    """
    space = model.space
    if not space.is_topology():
        raise PreconditionError("characterize needs a topological model")
    s = model.value(atom)
    interior = space.interior_mask(s)
    closure = space.closure_mask(s)

    ev = Evaluator(space, {"A": s})
    res = Characterization(
        open=interior == s,
        closed=closure == s,
        dense=closure == space.full,
        nowhere_dense=space.interior_mask(closure) == 0,
        open_formula=ev.valid(OPEN_CHAR),
        closed_formula=ev.valid(CLOSED_CHAR),
        dense_formula=ev.valid(DENSE_CHAR),
        nowhere_dense_formula=ev.valid(NOWHERE_DENSE_CHAR),
    )
    for name in ("open", "closed", "dense", "nowhere_dense"):
        if getattr(res, name) != getattr(res, name + "_formula"):
            raise InvariantViolation(
                f"{atom}: {name} is {getattr(res, name)} on sets but {getattr(res, name + '_formula')} by formula")
    return res


def boundary(model: Model, atom: str) -> frozenset[str]:
    """
    Return the boundary of the extension of an atom, cross-checked against the
    points x where [](L A & L ~A) holds at (x, X)
    """
    space = model.space
    s = model.value(atom)
    res = space.closure_mask(s) & space.closure_mask(space.full & ~s)
    ev = Evaluator(space, {"A": s})
    by_formula = ev.table(BOUNDARY_CHAR)[space.open_index[space.full]]
    if by_formula != res:
        raise InvariantViolation(
            f"{atom}: boundary {space.open_label(res)} differs from formula {space.open_label(by_formula)}")
    return space.members(res)
