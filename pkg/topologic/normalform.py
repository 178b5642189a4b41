from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .decide import TOPOLOGY, SearchBudget, Verdict, decide_valid
from .errors import BudgetExhausted, InvariantViolation, UsageError
from .formula import (BOT, TOP, And, Bot, Box, Dia, Formula, Iff, Implies, K, L, Not, Or, Top, conj, disj,
                      format_formula, in_l_prime)
from .semantics import evaluate
from .space import Model, SubsetSpace, World

log = logging.getLogger(__name__)

PERSISTENT = "persistent"
ANTI_PERSISTENT = "anti-persistent"
BI_PERSISTENT = "bi-persistent"
NOT_PERSISTENT = "none"


def l_not(f: Formula) -> Formula:
    match f:
        case Top():
            return BOT
        case Bot():
            return TOP
        case Not(a):
            return a
    return Not(f)


def l_and(a: Formula, b: Formula) -> Formula:
    if isinstance(a, Bot) or isinstance(b, Bot):
        return BOT
    if isinstance(a, Top):
        return b
    if isinstance(b, Top) or a == b:
        return a
    return And(a, b)


def l_or(items: Iterable[Formula]) -> Formula:
    """
    Disjunction written with ~ and & only, so that it stays in L'
    """
    res: Formula = BOT
    for item in items:
        if isinstance(res, Bot):
            res = item
        elif isinstance(item, Bot) or item == res:
            continue
        elif isinstance(item, Top) or isinstance(res, Top):
            res = TOP
        else:
            res = l_not(l_and(l_not(res), l_not(item)))
    return res


def l_dia_know(f: Formula) -> Formula:
    if isinstance(f, (Top, Bot)):
        return f
    return Dia(K(f))


def simplify(f: Formula) -> Formula:
    """
    Fold constants in an L' formula
    """
    match f:
        case Not(a):
            return l_not(simplify(a))
        case And(a, b):
            return l_and(simplify(a), simplify(b))
        case Dia(K(a)):
            return l_dia_know(simplify(a))
    return f


@dataclass(frozen=True)
class PnfBlock:
    """
    A conjunction base & K known & L possible_1 & ... with all components in
    L'
    """
    base: Formula = TOP
    known: Formula = TOP
    possibles: tuple[Formula, ...] = ()

    def __post_init__(self):
        for part in (self.base, self.known) + self.possibles:
            if not in_l_prime(part):
                raise InvariantViolation(f"{format_formula(part)} is not in L'")

    @property
    def is_false(self) -> bool:
        return isinstance(self.base, Bot) or isinstance(self.known, Bot) or any(
            isinstance(p, Bot) for p in self.possibles)

    @property
    def formula(self) -> Formula:
        parts: list[Formula] = []
        if not isinstance(self.base, Top):
            parts.append(self.base)
        if not isinstance(self.known, Top):
            parts.append(K(self.known))
        parts.extend(L(p) for p in self.possibles)
        return conj(parts)

    def simplified(self) -> PnfBlock:
        possibles: list[Formula] = []
        for p in self.possibles:
            p = simplify(p)
            if not isinstance(p, Top) and p not in possibles:
                possibles.append(p)
        return PnfBlock(simplify(self.base), simplify(self.known), tuple(possibles))


@dataclass(frozen=True)
class Dnf:
    blocks: tuple[PnfBlock, ...]
    trace: tuple[str, ...] = ()

    @property
    def formula(self) -> Formula:
        return disj(b.formula for b in self.blocks)


def render(dnf: Dnf) -> str:
    return format_formula(dnf.formula)


class DnfBuilder:
    """
    Rewrite formulas into disjunctions of prime normal form blocks.

    The rewriting is compositional: each connective is applied to the block
    lists of its arguments. Every step is recorded in ``trace``.
    """
    # Largest number of blocks allowed at any intermediate step
    MAX_BLOCKS = 512
    # K over more blocks than this would enumerate too many subsets
    MAX_KNOWLEDGE_SPLIT = 12

    def __init__(self, *, max_blocks: int | None = None):
        self.max_blocks = max_blocks or self.MAX_BLOCKS
        self.trace: list[str] = []

    def step(self, rule: str, f: Formula, blocks: list[PnfBlock]) -> list[PnfBlock]:
        blocks = self.normalize(blocks)
        self.trace.append(f"{rule}: {format_formula(f)} => {len(blocks)} block(s)")
        if len(blocks) > self.max_blocks:
            raise BudgetExhausted(f"{format_formula(f)} needs more than {self.max_blocks} blocks", trace=self.trace)
        return blocks

    def normalize(self, blocks: Iterable[PnfBlock]) -> list[PnfBlock]:
        """
        Simplify blocks, drop false ones, and merge blocks that only differ
        in their base
        """
        merged: dict[tuple[Formula, frozenset[Formula]], PnfBlock] = {}
        for b in blocks:
            b = b.simplified()
            if b.is_false:
                continue
            key = (b.known, frozenset(b.possibles))
            if (old := merged.get(key)) is not None:
                merged[key] = PnfBlock(l_or((old.base, b.base)), old.known, old.possibles)
            else:
                merged[key] = b
        return [b for b in merged.values() if not b.is_false]

    def build(self, f: Formula) -> list[PnfBlock]:
        if in_l_prime(f):
            return self.step("l-prime", f, [PnfBlock(f)])
        match f:
            case Not(a):
                res = [PnfBlock()]
                for b in self.build(a):
                    res = self.conjoin(res, self.negate_block(b), f)
                return self.step("negate-block", f, res)
            case And(a, b):
                return self.step("distribute", f, self.conjoin(self.build(a), self.build(b), f))
            case Or(a, b):
                return self.step("merge", f, self.build(a) + self.build(b))
            case Implies(a, b):
                return self.build(Or(Not(a), b))
            case Iff(a, b):
                return self.build(Or(And(a, b), And(Not(a), Not(b))))
            case K(a):
                return self.step("s5-split", f, self.know(self.build(a), f))
            case L(a):
                return self.step("l-block", f, [self.possible(b) for b in self.build(a)])
            case Dia(a):
                inner = self.build(a)
                rule = "lemma-main" if any(b.possibles for b in inner) else "lemma-damand"
                return self.step(rule, f, [self.dia_block(b) for b in inner])
            case Box(a):
                return self.build(Not(Dia(Not(a))))
        raise TypeError(f"not a formula: {f!r}")

    def conjoin(self, left: Sequence[PnfBlock], right: Sequence[PnfBlock], f: Formula) -> list[PnfBlock]:
        if len(left) * len(right) > self.max_blocks:
            raise BudgetExhausted(
                f"{format_formula(f)}: distributing {len(left)}×{len(right)} blocks", trace=self.trace)
        return self.normalize(
            PnfBlock(l_and(x.base, y.base), l_and(x.known, y.known), x.possibles + y.possibles)
            for x in left for y in right)

    def negate_block(self, b: PnfBlock) -> list[PnfBlock]:
        """
        ~(base & K known & L p1 & ...) = ~base | L ~known | K ~p1 | ...
        """
        res = [PnfBlock(l_not(b.base)), PnfBlock(possibles=(l_not(b.known),))]
        res.extend(PnfBlock(known=l_not(p)) for p in b.possibles)
        return self.normalize(res)

    def know(self, blocks: Sequence[PnfBlock], f: Formula) -> list[PnfBlock]:
        """
        K of a disjunction of blocks: for each nonempty set S of blocks whose
        K and L parts hold, K of the disjunction of their bases
        """
        if len(blocks) > self.MAX_KNOWLEDGE_SPLIT:
            raise BudgetExhausted(f"{format_formula(f)}: K over {len(blocks)} blocks", trace=self.trace)
        res: list[PnfBlock] = []
        for size in range(1, len(blocks) + 1):
            for subset in itertools.combinations(blocks, size):
                known: Formula = TOP
                possibles: list[Formula] = []
                for b in subset:
                    known = l_and(known, b.known)
                    possibles.extend(b.possibles)
                known = l_and(known, l_or(b.base for b in subset))
                res.append(PnfBlock(known=known, possibles=tuple(possibles)))
        return res

    def possible(self, b: PnfBlock) -> PnfBlock:
        """
        L (base & K known & L ps) = K known & L ps & L base
        """
        return PnfBlock(known=b.known, possibles=b.possibles + (b.base,))

    def dia_block(self, b: PnfBlock) -> PnfBlock:
        """
        <> (base & K known & L ps) = base & <>K known & L (<>K known & p) ...

        Bases and possibles are bi-persistent, so they move out of the <>;
        the possibles can be reached inside a common open when each of them
        lies in the interior of known.
        """
        dk = l_dia_know(b.known)
        return PnfBlock(l_and(b.base, dk), TOP, tuple(l_and(dk, p) for p in b.possibles))


DEFAULT_VERIFY_BUDGET = 3


def to_dnf(f: Formula, verify_budget: SearchBudget | None = None, *, max_blocks: int | None = None) -> Dnf:
    """
    Rewrite f into an equivalent disjunctive normal form.

    The result is checked to be equivalent to f with a bounded search for
    countermodels; a failed or incomplete check raises instead of returning
    an unverified result.
    """
    builder = DnfBuilder(max_blocks=max_blocks)
    blocks = builder.build(f) or [PnfBlock(BOT)]
    dnf = Dnf(tuple(blocks), tuple(builder.trace))

    budget = verify_budget or SearchBudget(DEFAULT_VERIFY_BUDGET)
    verdict = decide_valid(Iff(f, dnf.formula), budget)
    match verdict.status:
        case Verdict.VALID:
            log.debug("%s: %d block(s), verified (%s)", format_formula(f), len(blocks), verdict.caveat)
        case Verdict.BUDGET_EXHAUSTED:
            raise BudgetExhausted(f"{format_formula(f)}: equivalence check ran out of time", trace=builder.trace)
        case _:
            raise InvariantViolation(
                f"{format_formula(f)}: normal form {render(dnf)} is not equivalent"
                f" at {verdict.world.label if verdict.world else '?'}")
    return dnf


class Persistence(NamedTuple):
    kind: str
    persistent: bool
    anti_persistent: bool
    in_l_prime: bool


def persistence_class(f: Formula, budget: SearchBudget | None = None) -> Persistence:
    """
    Classify f by checking f -> []f, <>f -> f and <>f -> []f on all models
    within the budget
    """
    budget = budget or SearchBudget(DEFAULT_VERIFY_BUDGET)

    def valid(g: Formula) -> bool:
        verdict = decide_valid(g, budget)
        if verdict.status == Verdict.BUDGET_EXHAUSTED:
            raise BudgetExhausted(f"{format_formula(g)}: search ran out of time")
        return verdict.status == Verdict.VALID

    persistent = valid(Implies(f, Box(f)))
    anti_persistent = valid(Implies(Dia(f), f))
    if persistent and anti_persistent:
        kind = BI_PERSISTENT
    elif persistent:
        kind = PERSISTENT
    elif anti_persistent:
        kind = ANTI_PERSISTENT
    else:
        kind = NOT_PERSISTENT
    return Persistence(kind, persistent, anti_persistent, in_l_prime(f))


class DisjunctionCheck(NamedTuple):
    premise: Formula
    # First disjunct found valid within the budget
    valid_disjunct: int | None
    # Otherwise, a model where the premise fails at world
    countermodel: Model | None = None
    world: World | None = None


def join_countermodels(parts: Sequence[tuple[Model, World]]) -> tuple[Model, World]:
    """
    Put side by side the parts of each model visible from its world, under a
    common top open.

    Each world (y, U) keeps its truth values, since the opens below U are
    unchanged; bi-persistent formulas keep them at (y, top) too.
    """
    points: list[str] = []
    opens: list[frozenset[str]] = []
    valuation: dict[str, set[str]] = {}
    for i, (model, world) in enumerate(parts):
        space = model.space
        u = space.mask(world.open)

        def move(mask: int) -> frozenset[str]:
            return frozenset(f"{i}.{p}" for p in space.members(mask))

        points.extend(move(u))
        opens.extend(move(v) for v in space.down(u))
        for a, value in model.valuation.items():
            valuation.setdefault(a, set()).update(move(value & u))
    top = frozenset(points)
    space = SubsetSpace(points, [*opens, frozenset(), top]).close_under({"union", "intersection"})
    first = parts[0][1]
    return Model(space, valuation), World(f"0.{first.point}", top)


def check_disjunction_property(
        disjuncts: Sequence[Formula], budget: SearchBudget | None = None, *,
        premise: Formula | None = None) -> DisjunctionCheck:
    """
    Check the disjunction property on L′ formulas φ1 ... φn: if
    K φ1 | ... | K φn is valid then some φi is valid. With a premise φ, the
    stronger form: if K φ -> K φ1 | ... | K φn is valid then some
    K φ -> φi is valid.

    Each conclusion is tried within the budget; when none is valid their
    countermodels are joined into a model refuting the premise.
    """
    if not disjuncts:
        raise UsageError("the disjunction property needs at least one disjunct")
    budget = budget or SearchBudget(DEFAULT_VERIFY_BUDGET)
    if budget.space_class != TOPOLOGY:
        raise UsageError("the disjunction property is checked on topological models")
    for f in (*disjuncts, *(() if premise is None else (premise,))):
        if not in_l_prime(f):
            raise UsageError(f"{format_formula(f)} is not in L′")

    full_premise = disj(K(f) for f in disjuncts)
    if premise is not None:
        full_premise = Implies(K(premise), full_premise)

    parts: list[tuple[Model, World]] = []
    for i, f in enumerate(disjuncts):
        conclusion = f if premise is None else Implies(K(premise), f)
        verdict = decide_valid(conclusion, budget)
        match verdict.status:
            case Verdict.VALID:
                return DisjunctionCheck(full_premise, i)
            case Verdict.BUDGET_EXHAUSTED:
                raise BudgetExhausted(f"{format_formula(conclusion)}: search ran out of time")
        if verdict.model is None or verdict.world is None:
            raise InvariantViolation(f"{format_formula(conclusion)}: countermodel missing")
        parts.append((verdict.model, verdict.world))

    model, world = join_countermodels(parts)
    if evaluate(model, world, full_premise):
        raise InvariantViolation(f"{format_formula(full_premise)} holds on the joined countermodel")
    log.debug("%s: refuted on %d points", format_formula(full_premise), len(model.space.points))
    return DisjunctionCheck(full_premise, None, model, world)
