from __future__ import annotations

import concurrent.futures
import functools
import itertools
import logging
import time
from dataclasses import dataclass
from typing import Any, Iterator, NamedTuple, Sequence

from .errors import InvariantViolation, UsageError
from .formula import Formula, Not, format_formula
from .semantics import Evaluator, evaluate
from .space import Model, SubsetSpace, World, bits
from .splitting import finitize

log = logging.getLogger(__name__)

TOPOLOGY = "topology"
LATTICE = "lattice"
ANY_SUBSET = "any-subset-space"
SPACE_CLASSES = (TOPOLOGY, LATTICE, ANY_SUBSET)


class SearchBudget:
    """
    Limits of the bounded search: spaces of 1 to max_points points of the
    given class, optionally within a time limit
    """
    DEFAULT_MAX_POINTS = 4
    HARD_CAP = 6
    ANY_SUBSET_CAP = 3
    LATTICE_CAP = 5

    def __init__(
            self, max_points: int | None = None, space_class: str = TOPOLOGY, *,
            max_seconds: float | None = None, workers: int = 1, prune_isomorphic: bool = False):
        self.max_points = self.DEFAULT_MAX_POINTS if max_points is None else max_points
        self.space_class = space_class
        self.max_seconds = max_seconds
        self.workers = workers
        self.prune_isomorphic = prune_isomorphic
        if self.max_points < 1:
            raise UsageError("max_points must be at least 1")
        if space_class not in SPACE_CLASSES:
            raise UsageError(f"unknown space class {space_class!r}")
        check_cap(self.max_points, space_class)
        if workers < 1:
            raise UsageError("workers must be at least 1")

    def __repr__(self) -> str:
        return f"SearchBudget(max_points={self.max_points}, space_class={self.space_class!r})"


def check_cap(n: int, space_class: str) -> None:
    match space_class:
        case "topology":
            cap = SearchBudget.HARD_CAP
        case "lattice":
            cap = SearchBudget.LATTICE_CAP
        case "any-subset-space":
            cap = SearchBudget.ANY_SUBSET_CAP
        case _:
            raise UsageError(f"unknown space class {space_class!r}")
    if n > cap:
        raise UsageError(f"{space_class} enumeration is limited to {cap} points")


@functools.cache
def enumerate_preorders(n: int) -> tuple[tuple[int, ...], ...]:
    """
    Return all preorders on n points, each as a tuple of rows: row i is the
    bitmask of the points j with i <= j. Sorted by adjacency matrix, row-major.
    """
    if n == 0:
        return ((),)
    res: list[tuple[int, ...]] = []
    new = n - 1
    for prev in enumerate_preorders(n - 1):
        for down in range(1 << new):
            # Points below the new one must form a down-set
            if any(prev[k] >> j & 1 and not down >> k & 1 for j in bits(down) for k in range(new)):
                continue
            for up in range(1 << new):
                if any(prev[j] & ~up for j in bits(up)):
                    continue
                if any(prev[d] & up != up for d in bits(down)):
                    continue
                rows = [row | (1 << new if down >> i & 1 else 0) for i, row in enumerate(prev)]
                rows.append(up | 1 << new)
                res.append(tuple(rows))
    res.sort(key=lambda rows: tuple(tuple(row >> j & 1 for j in range(n)) for row in rows))
    return tuple(res)


def up_sets(rows: tuple[int, ...]) -> list[int]:
    n = len(rows)
    return [m for m in range(1 << n) if all(rows[i] & ~m == 0 for i in bits(m))]


def point_names(n: int) -> list[str]:
    return [f"p{i}" for i in range(n)]


def canonical_form(n: int, masks: tuple[int, ...]) -> tuple[int, ...]:
    """
    Least sorted mask tuple among all relabelings of the points
    """
    best: tuple[int, ...] | None = None
    for perm in itertools.permutations(range(n)):
        relabeled = []
        for m in masks:
            res = 0
            for i in bits(m):
                res |= 1 << perm[i]
            relabeled.append(res)
        candidate = tuple(sorted(relabeled))
        if best is None or candidate < best:
            best = candidate
    assert best is not None
    return best


def _raw_families(n: int, space_class: str) -> Iterator[list[int]]:
    full = (1 << n) - 1
    match space_class:
        case "topology":
            for rows in enumerate_preorders(n):
                yield up_sets(rows)
        case "lattice":
            for rows in enumerate_preorders(n):
                opens = up_sets(rows)
                yield opens
                without_empty = [m for m in opens if m]
                if all(a & b in without_empty for a in without_empty for b in without_empty):
                    yield without_empty
        case "any-subset-space":
            others = [m for m in range(full)]
            for selection in range(1 << len(others)):
                yield [others[i] for i in bits(selection)] + [full]


def enumerate_spaces(n: int, space_class: str = TOPOLOGY, *, prune_isomorphic: bool = False) -> Iterator[SubsetSpace]:
    """
    Generate the subset spaces of the given class on n points named p0, p1, ...

    Topologies are the up-set families of the preorders on the points; lattices
    add the topologies whose nonempty opens are still intersection-closed,
    with the empty set dropped.
    """
    if n < 1:
        raise UsageError("spaces need at least one point")
    check_cap(n, space_class)
    names = point_names(n)
    seen: set[tuple[int, ...]] = set()
    for family in _raw_families(n, space_class):
        if prune_isomorphic:
            key = canonical_form(n, tuple(family))
            if key in seen:
                continue
            seen.add(key)
        yield SubsetSpace(names, family)


def in_class(space: SubsetSpace, space_class: str) -> bool:
    match space_class:
        case "topology":
            return space.is_topology()
        case "lattice":
            return space.full in space.open_index and space.is_lattice()
        case _:
            return space.full in space.open_index


class Witness(NamedTuple):
    key: tuple[int, int, int, int, int]
    model: Model
    world: World


class ShardResult(NamedTuple):
    witness: Witness | None
    examined: int
    exhausted: bool
    # First (points, space index, valuation index) left unexamined at the deadline
    stopped_at: tuple[int, int, int] | None = None


def combine_shards(results: Sequence[ShardResult]) -> tuple[Witness | None, bool, bool]:
    """
    Merge the shard results for one space size into (witness, exhausted,
    canonical).

    The least witness found is returned. It is canonical only when every
    shard that ran out of time had already gone past it, so that no smaller
    candidate was left unexamined.
    """
    exhausted = any(r.exhausted for r in results)
    witnesses = [r.witness for r in results if r.witness is not None]
    if not witnesses:
        return None, exhausted, True
    best = min(witnesses, key=lambda w: w.key)
    canonical = all(r.stopped_at is not None and r.stopped_at > best.key[:3] for r in results if r.exhausted)
    return best, exhausted, canonical


def first_true(ev: Evaluator, f: Formula) -> tuple[int, int] | None:
    """
    Least (point index, open index) where f holds
    """
    table = ev.table(f)
    space = ev.space
    for i in range(len(space.points)):
        for j, (m, ext) in enumerate(zip(space.masks, table)):
            if m >> i & 1 and ext >> i & 1:
                return (i, j)
    return None


def search_shard(
        f: Formula, n: int, space_class: str, prune_isomorphic: bool,
        shard: int, shards: int, deadline: float | None) -> ShardResult:
    """
    Look for the canonically least world satisfying f among the spaces on n
    points whose position in the enumeration is congruent to shard
    """
    atoms = sorted(f.atoms())
    examined = 0
    for idx, space in enumerate(enumerate_spaces(n, space_class, prune_isomorphic=prune_isomorphic)):
        if idx % shards != shard:
            continue
        for vidx, values in enumerate(itertools.product(range(1 << n), repeat=len(atoms))):
            if deadline is not None and time.monotonic() > deadline:
                return ShardResult(None, examined, True, (n, idx, vidx))
            examined += 1
            valuation = dict(zip(atoms, values))
            found = first_true(Evaluator(space, valuation), f)
            if found is not None:
                i, j = found
                model = Model(space, valuation)
                world = World(space.points[i], space.members(space.masks[j]))
                return ShardResult(Witness((n, idx, vidx, i, j), model, world), examined, False)
    return ShardResult(None, examined, False)


@dataclass
class Verdict:
    SATISFIABLE = "satisfiable"
    UNSAT = "unsat-up-to-bound"
    VALID = "valid-up-to-bound"
    COUNTERMODEL = "countermodel"
    BUDGET_EXHAUSTED = "budget-exhausted"

    status: str
    formula: Formula
    models_examined: int
    max_points: int
    space_class: str
    model: Model | None = None
    world: World | None = None
    reduced: Model | None = None
    reduced_world: World | None = None
    # False when a sharded search ran out of time and may have skipped a smaller witness
    canonical: bool = True

    @property
    def caveat(self) -> str:
        return f"checked on {self.space_class} models with up to {self.max_points} points"

    def to_json(self) -> dict[str, Any]:
        res: dict[str, Any] = {
            "status": self.status,
            "formula": format_formula(self.formula),
            "models_examined": self.models_examined,
            "max_points": self.max_points,
            "class": self.space_class,
            "canonical": self.canonical,
        }
        if self.model is not None and self.world is not None:
            res["model"] = self.model.to_json()
            res["world"] = {"point": self.world.point, "open": sorted(self.world.open)}
        if self.reduced is not None and self.reduced_world is not None:
            res["reduced"] = self.reduced.to_json()
            res["reduced_world"] = {"point": self.reduced_world.point, "open": sorted(self.reduced_world.open)}
        return res


def _search(f: Formula, budget: SearchBudget) -> tuple[Witness | None, int, bool, bool]:
    deadline = None if budget.max_seconds is None else time.monotonic() + budget.max_seconds
    examined = 0
    for n in range(1, budget.max_points + 1):
        if budget.workers == 1:
            results = [search_shard(f, n, budget.space_class, budget.prune_isomorphic, 0, 1, deadline)]
        else:
            with concurrent.futures.ProcessPoolExecutor(max_workers=budget.workers) as pool:
                futures = [
                    pool.submit(search_shard, f, n, budget.space_class, budget.prune_isomorphic,
                                shard, budget.workers, deadline)
                    for shard in range(budget.workers)]
                results = [fut.result() for fut in futures]
        examined += sum(r.examined for r in results)
        witness, exhausted, canonical = combine_shards(results)
        if witness is not None:
            if not canonical:
                log.warning("%s: time ran out before all shards passed the witness found", format_formula(f))
            return witness, examined, False, canonical
        if exhausted:
            return None, examined, True, True
        log.debug("%s: nothing on %d points (%d models so far)", format_formula(f), n, examined)
    return None, examined, False, True


def decide_sat(phi: Formula, budget: SearchBudget | None = None) -> Verdict:
    """
    Search for a model and world satisfying phi, in canonical order
    """
    budget = budget or SearchBudget()
    witness, examined, exhausted, canonical = _search(phi, budget)
    common = dict(formula=phi, models_examined=examined, max_points=budget.max_points,
                  space_class=budget.space_class, canonical=canonical)
    if witness is not None:
        if not evaluate(witness.model, witness.world, phi):
            raise InvariantViolation(f"witness for {format_formula(phi)} does not replay")
        return Verdict(Verdict.SATISFIABLE, model=witness.model, world=witness.world, **common)
    if exhausted:
        return Verdict(Verdict.BUDGET_EXHAUSTED, **common)
    return Verdict(Verdict.UNSAT, **common)


def decide_valid(phi: Formula, budget: SearchBudget | None = None) -> Verdict:
    """
    Search for a countermodel to phi.

    Topological countermodels are also reduced with finitize; the reduced
    model is reported only if phi still fails at the image of the world and
    the reduced space is still in the searched class.
    """
    budget = budget or SearchBudget()
    negated = Not(phi)
    witness, examined, exhausted, canonical = _search(negated, budget)
    common = dict(formula=phi, models_examined=examined, max_points=budget.max_points,
                  space_class=budget.space_class, canonical=canonical)
    if witness is None:
        if exhausted:
            return Verdict(Verdict.BUDGET_EXHAUSTED, **common)
        return Verdict(Verdict.VALID, **common)

    if evaluate(witness.model, witness.world, phi):
        raise InvariantViolation(f"countermodel for {format_formula(phi)} does not replay")
    verdict = Verdict(Verdict.COUNTERMODEL, model=witness.model, world=witness.world, **common)
    if witness.model.space.is_topology():
        reduced = finitize(witness.model, negated)
        reduced_world = reduced.world_map[witness.world]
        if in_class(reduced.model.space, budget.space_class) and not evaluate(reduced.model, reduced_world, phi):
            verdict.reduced = reduced.model
            verdict.reduced_world = reduced_world
        else:
            log.debug("%s: reduced countermodel rejected", format_formula(phi))
    return verdict
