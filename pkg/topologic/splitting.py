from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple, Sequence

from .errors import InvariantViolation, PreconditionError
from .formula import Formula, children, format_formula, subformulas
from .semantics import Evaluator
from .space import Model, SubsetSpace, World, bits

log = logging.getLogger(__name__)


class Splitting:
    """
    A finite family of opens of a host space, closed under intersection.

    Its remainders partition the opens lying below some member of the family.
    Opens are handled as bitmasks of the host space.
    """

    def __init__(self, host: SubsetSpace, family: Iterable[int]):
        self.host = host
        self.family: tuple[int, ...] = tuple(sorted(set(family), key=host.mask_key))
        if not self.family:
            raise PreconditionError("a splitting needs at least one member")
        for u in self.family:
            if u not in host.open_index:
                raise PreconditionError(f"{host.open_label(u)} is not an open of the host space")
        for a in self.family:
            for b in self.family:
                if a & b not in self.family:
                    raise PreconditionError(
                        f"family is not closed under intersection: {host.open_label(a)} ∩ {host.open_label(b)}")

    def __repr__(self) -> str:
        return f"Splitting([{', '.join(self.host.open_label(u) for u in self.family)}])"

    def below(self) -> list[int]:
        """
        Return the host opens contained in some member of the family
        """
        below = {v for u in self.family for v in self.host.down(u)}
        return sorted(below, key=self.host.mask_key)

    def _check_member(self, u: int) -> None:
        if u not in self.family:
            raise PreconditionError(f"{self.host.open_label(u)} is not a member of the splitting")

    def remainder(self, u: int) -> frozenset[int]:
        """
        Opens below u that are not below any member that u is not below
        """
        self._check_member(u)
        others = [w for w in self.family if u & ~w]
        return frozenset(v for v in self.host.down(u) if all(v & ~w for w in others))

    def remainder_below(self, u: int) -> frozenset[int]:
        """
        Opens below u not below any member strictly contained in u. This
        coincides with remainder() for intersection-closed families.
        """
        self._check_member(u)
        smaller = [w for w in self.family if w != u and w & ~u == 0]
        return frozenset(v for v in self.host.down(u) if all(v & ~w for w in smaller))

    def representative(self, v: int) -> int:
        """
        Return the member whose remainder contains v: the least member
        containing it
        """
        res = self.host.full
        found = False
        for u in self.family:
            if v & ~u == 0:
                res &= u
                found = True
        if not found:
            raise PreconditionError(f"{self.host.open_label(v)} is not below the family")
        return res

    def classes(self) -> dict[int, frozenset[int]]:
        return {u: self.remainder(u) for u in self.family}

    def equiv_classes(self) -> list[frozenset[int]]:
        """
        Partition the opens below the family, computed both as remainders and
        as classes of opens contained in the same members; the two must agree
        """
        by_remainder = [self.remainder(u) for u in self.family]

        by_relation: dict[tuple[bool, ...], set[int]] = {}
        for v in self.below():
            signature = tuple(v & ~u == 0 for u in self.family)
            by_relation.setdefault(signature, set()).add(v)

        if set(by_remainder) != {frozenset(c) for c in by_relation.values()}:
            raise InvariantViolation(f"{self!r}: remainders do not match the containment classes")
        return by_remainder

    def is_partition(self) -> bool:
        seen: set[int] = set()
        for c in (self.remainder(u) for u in self.family):
            if seen & c:
                return False
            seen |= c
        return seen == set(self.below())

    def is_convex(self, cls: Iterable[int]) -> bool:
        """
        Check that any open between two members of cls is in cls
        """
        members = frozenset(cls)
        for v2 in self.host.masks:
            if v2 in members:
                continue
            has_lower = any(v1 & ~v2 == 0 for v1 in members)
            has_upper = any(v2 & ~v3 == 0 for v3 in members)
            if has_lower and has_upper:
                return False
        return True


def is_stable_for(model: Model, family_class: Iterable[int], f: Formula, evaluator: Evaluator | None = None) -> bool:
    """
    Check that, for every point, f has the same truth value at all the opens
    of the class containing that point
    """
    ev = evaluator or Evaluator.for_model(model)
    space = model.space
    table = ev.table(f)
    values: dict[int, bool] = {}
    for v in family_class:
        ext = table[space.open_index[v]]
        for i in bits(v):
            value = bool(ext >> i & 1)
            if values.setdefault(i, value) != value:
                return False
    return True


def unstable_witness(model: Model, split: Splitting, f: Formula, ev: Evaluator) -> int | None:
    """
    Find an open to add to the splitting so that it separates worlds where f
    has a different truth value: the largest open in some class where f
    differs, at some point, from its value at the class representative.
    """
    space = model.space
    table = ev.table(f)
    for u, cls in split.classes().items():
        ref = table[space.open_index[u]]
        # Opens from largest to smallest
        for v in sorted(cls, key=space.mask_key, reverse=True):
            if v == u or not v:
                continue
            if (table[space.open_index[v]] ^ ref) & v:
                return v
    return None


@dataclass
class StableSplittingSet:
    model: Model
    formula: Formula
    splittings: dict[Formula, Splitting] = field(default_factory=dict)

    @property
    def family(self) -> tuple[int, ...]:
        return self.splittings[self.formula].family

    def check(self) -> None:
        """
        Verify the properties of the construction, raising InvariantViolation
        if any fails
        """
        space = self.model.space
        ev = Evaluator.for_model(self.model)
        for psi, split in self.splittings.items():
            if space.full not in split.family:
                raise InvariantViolation(f"{format_formula(psi)}: the full set is not in the family")
            for c in children(psi):
                if not set(self.splittings[c].family) <= set(split.family):
                    raise InvariantViolation(f"{format_formula(psi)}: family does not include its subformulas'")
            for sub in subformulas(psi):
                for cls in split.classes().values():
                    if not is_stable_for(self.model, cls, sub, ev):
                        raise InvariantViolation(
                            f"{format_formula(psi)}: a class is not stable for {format_formula(sub)}")

    def to_json(self) -> dict[str, Any]:
        space = self.model.space
        ev = Evaluator.for_model(self.model)
        split = self.splittings[self.formula]
        subs = subformulas(self.formula)
        definable = definable_sets(self.model)
        classes = []
        for u, cls in split.classes().items():
            classes.append({
                "representative": space.open_label(u),
                "members": [space.open_label(v) for v in sorted(cls, key=space.mask_key) if v],
                "stable": {format_formula(s): is_stable_for(self.model, cls, s, ev) for s in subs},
            })
        return {
            "formula": format_formula(self.formula),
            "family": [space.open_label(u) for u in split.family if u],
            "definable": all(u in definable for u in split.family),
            "classes": classes,
        }


def build_stable_splittings(model: Model, phi: Formula) -> StableSplittingSet:
    """
    Build, for every subformula of phi, a finite splitting whose remainder
    classes are stable for all its subformulas.

    Subformulas are processed bottom-up; each family starts from the union of
    the families of the immediate subformulas, and is refined by adding
    opens separating worlds where the subformula changes value, until every
    class is stable.
    """
    space = model.space
    if not space.is_topology():
        raise PreconditionError("stable splittings need a topological model")
    ev = Evaluator.for_model(model)
    res = StableSplittingSet(model, phi.desugar())
    for psi in subformulas(phi):
        base = {space.full}
        for c in children(psi):
            base.update(res.splittings[c].family)
        family = space.intersection_closure(base)
        while True:
            split = Splitting(space, family)
            witness = unstable_witness(model, split, psi, ev)
            if witness is None:
                break
            log.debug("%s: adding %s to the family", format_formula(psi), space.open_label(witness))
            family = space.intersection_closure(family + [witness])
        res.splittings[psi] = split
    log.debug("%s: family of %d opens", format_formula(res.formula), len(res.family))
    return res


def definable_sets(model: Model) -> frozenset[int]:
    """
    Sets of points obtained from the atoms by complement, intersection and
    interior: the sets defined by formulas built from atoms with ~, & and <> K
    """
    space = model.space
    found = {space.full, 0} | set(model.valuation.values())
    pending = list(found)
    while pending:
        a = pending.pop()
        new = [space.full & ~a, space.interior_mask(a)]
        new.extend(a & b for b in list(found))
        for c in new:
            if c not in found:
                found.add(c)
                pending.append(c)
    return frozenset(found)


class BasisReport(NamedTuple):
    model: Model
    formulas: tuple[Formula, ...]
    worlds_checked: int


def restrict_to_basis(model: Model, basis: Iterable[int], formulas: Sequence[Formula] = ()) -> BasisReport:
    """
    Build the model over a union-closed basis of the topology, and check that
    truth at basis worlds and validity of the given formulas are the same in
    both models
    """
    space = model.space
    basis = set(basis)
    if not space.is_topology():
        raise PreconditionError("restrict_to_basis needs a topological model")
    if unknown := [b for b in basis if b not in space.open_index]:
        raise PreconditionError(f"{space.open_label(unknown[0])} is not an open")
    for a in basis:
        for b in basis:
            if a | b not in basis:
                raise PreconditionError("the basis is not closed under union")
    for u in space.masks:
        covered = 0
        for b in basis:
            if b & ~u == 0:
                covered |= b
        if covered != u:
            raise PreconditionError(f"{space.open_label(u)} is not a union of basis members")

    reduced = model.with_space(space.with_opens(basis))
    full_ev = Evaluator.for_model(model)
    reduced_ev = Evaluator.for_model(reduced)
    checked = 0
    for f in formulas:
        full_table = full_ev.table(f)
        reduced_table = reduced_ev.table(f)
        for u in reduced.space.masks:
            if full_table[space.open_index[u]] != reduced_table[reduced.space.open_index[u]]:
                raise InvariantViolation(
                    f"{format_formula(f)}: truth differs at {space.open_label(u)} after restricting to the basis")
            checked += u.bit_count()
        if full_ev.valid(f) != reduced_ev.valid(f):
            raise InvariantViolation(f"{format_formula(f)}: validity differs after restricting to the basis")
    return BasisReport(reduced, tuple(formulas), checked)


def basis_witness(host: SubsetSpace, basis: Iterable[int], family: Iterable[int]) -> dict[tuple[int, int], int]:
    """
    For each member V of the family and each point index x in V, find a basis
    member U in the remainder of V with x in U and U contained in V
    """
    split = Splitting(host, family)
    basis = sorted(set(basis), key=host.mask_key)
    res: dict[tuple[int, int], int] = {}
    for v in split.family:
        rem = split.remainder(v)
        for x in bits(v):
            for u in basis:
                if u in rem and u >> x & 1 and u & ~v == 0:
                    res[(v, x)] = u
                    break
            else:
                raise InvariantViolation(f"no basis member witnesses {host.points[x]} in {host.open_label(v)}")
    return res


class Quotient(NamedTuple):
    model: Model
    world_map: dict[World, World]
    point_map: dict[str, str]


def quotient_points(model: Model) -> Quotient:
    """
    Merge points that belong to the same opens and satisfy the same atoms.

    Merged points are named x1, x2, ... in the order of their first member.
    """
    space = model.space
    valuation = list(model.valuation.values())
    signatures: dict[tuple[bool, ...], int] = {}
    point_class: list[int] = []
    for i in range(len(space.points)):
        sig = tuple(bool(m >> i & 1) for m in space.masks) + tuple(bool(a >> i & 1) for a in valuation)
        point_class.append(signatures.setdefault(sig, len(signatures)))

    names = [f"x{n + 1}" for n in range(len(signatures))]

    def image(mask: int) -> list[str]:
        return [names[point_class[i]] for i in bits(mask)]

    new_space = SubsetSpace(names, (image(m) for m in space.masks), require_full=space.full in space.open_index)
    new_model = Model(new_space, {k: image(v) for k, v in model.valuation.items()})
    point_map = {p: names[point_class[i]] for i, p in enumerate(space.points)}
    world_map = {
        World(space.points[i], space.members(m)): World(names[point_class[i]], frozenset(image(m)))
        for i, m in space.world_masks()
    }
    return Quotient(new_model, world_map, point_map)


class Finitized(NamedTuple):
    model: Model
    world_map: dict[World, World]
    splittings: StableSplittingSet


def finitize(model: Model, phi: Formula) -> Finitized:
    """
    Shrink a topological model to one whose size depends only on phi, keeping
    the truth of phi and its subformulas at corresponding worlds.

    The opens are replaced by the family of a stable splitting for phi, each
    world moving to the representative of its class, then indistinguishable
    points are merged.
    """
    space = model.space
    restricted = model.restrict(phi.atoms())
    splittings = build_stable_splittings(restricted, phi)
    family = list(splittings.family)
    opens = family + ([0] if space.has_empty else [])
    split = splittings.splittings[splittings.formula]

    reduced = Model(space.with_opens(opens), restricted.valuation)
    quotient = quotient_points(reduced)

    if len(quotient.model.space.masks) > len(family) + 1:
        raise InvariantViolation("finitized model has more opens than the splitting family")
    if len(quotient.model.space.points) > 2 ** (len(phi.atoms()) + len(family)):
        raise InvariantViolation("finitized model has more points than its bound")

    world_map: dict[World, World] = {}
    for i, m in space.world_masks():
        rep = split.representative(m)
        middle = World(space.points[i], space.members(rep))
        world_map[World(space.points[i], space.members(m))] = quotient.world_map[middle]
    log.info("finitize: %d points, %d opens -> %d points, %d opens",
             len(space.points), len(space.masks), len(quotient.model.space.points), len(quotient.model.space.masks))
    return Finitized(quotient.model, world_map, splittings)
