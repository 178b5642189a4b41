from __future__ import annotations

import functools
import json
import logging
from pathlib import Path
from typing import IO, Any, Iterable, Iterator, Mapping, NamedTuple

from .errors import InvalidWorld, ModelError, PreconditionError, UsageError
from .formula import Atom

log = logging.getLogger(__name__)

OPERATIONS = frozenset(("union", "intersection"))


class World(NamedTuple):
    """
    A point together with the open describing the current view of it
    """
    point: str
    open: frozenset[str]

    @property
    def label(self) -> str:
        return f"{self.point}@{format_set(self.open)}"


def format_set(points: Iterable[str]) -> str:
    return "{" + ",".join(sorted(points)) + "}"


def bits(mask: int) -> Iterator[int]:
    """
    Iterate the indices of the bits set in mask, lowest first
    """
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class SubsetSpace:
    """
    A finite set of points with a family of subsets ("opens") over it.

    Points are kept sorted, and subsets are stored as integer bitmasks over the
    point order. Opens are kept in canonical order: by size, then by the
    sorted indices of their points, so the empty set comes first and the full
    set last.
    """

    def __init__(self, points: Iterable[str], opens: Iterable[Iterable[str] | int], *, require_full: bool = True):
        self.points: tuple[str, ...] = tuple(sorted(set(points)))
        if not self.points:
            raise ModelError("a space needs at least one point")
        self.index: dict[str, int] = {p: i for i, p in enumerate(self.points)}
        self.full: int = (1 << len(self.points)) - 1

        masks: set[int] = set()
        for o in opens:
            if isinstance(o, int):
                if o & ~self.full:
                    raise ModelError(f"open mask {o:#x} has bits outside the point set")
                masks.add(o)
            else:
                masks.add(self.mask(o))
        if require_full and self.full not in masks:
            raise ModelError("the full point set must be one of the opens")

        self.masks: tuple[int, ...] = tuple(sorted(masks, key=self.mask_key))
        self.open_index: dict[int, int] = {m: i for i, m in enumerate(self.masks)}

    def mask_key(self, mask: int) -> tuple[int, tuple[int, ...]]:
        return (mask.bit_count(), tuple(bits(mask)))

    def mask(self, points: Iterable[str]) -> int:
        res = 0
        for p in points:
            try:
                res |= 1 << self.index[p]
            except KeyError:
                raise ModelError(f"unknown point {p!r}") from None
        return res

    def members(self, mask: int) -> frozenset[str]:
        return frozenset(self.points[i] for i in bits(mask))

    def open_label(self, mask: int) -> str:
        return format_set(self.members(mask))

    @property
    def opens(self) -> tuple[frozenset[str], ...]:
        return tuple(self.members(m) for m in self.masks)

    @property
    def has_empty(self) -> bool:
        return 0 in self.open_index

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubsetSpace):
            return NotImplemented
        return self.points == other.points and self.masks == other.masks

    def __hash__(self) -> int:
        return hash((self.points, self.masks))

    def __repr__(self) -> str:
        return f"SubsetSpace({list(self.points)!r}, [{', '.join(self.open_label(m) for m in self.masks)}])"

    @functools.cached_property
    def down_indices(self) -> tuple[tuple[int, ...], ...]:
        """
        For each open (by index), the indices of the opens contained in it
        """
        return tuple(
            tuple(j for j, v in enumerate(self.masks) if v & ~u == 0)
            for u in self.masks
        )

    def down(self, u: int) -> list[int]:
        """
        Opens contained in u
        """
        return [v for v in self.masks if v & ~u == 0]

    def world_masks(self) -> list[tuple[int, int]]:
        """
        All (point index, open mask) pairs of the pointed product, in canonical
        world order
        """
        return [(i, m) for i in range(len(self.points)) for m in self.masks if m >> i & 1]

    def worlds(self) -> list[World]:
        return [World(self.points[i], self.members(m)) for i, m in self.world_masks()]

    def world(self, point: str, open: Iterable[str]) -> World:
        """
        Build a World, checking that it belongs to the pointed product
        """
        if point not in self.index:
            raise InvalidWorld(f"unknown point {point!r}")
        try:
            m = self.mask(open)
        except ModelError as e:
            raise InvalidWorld(str(e)) from e
        if m not in self.open_index:
            raise InvalidWorld(f"{self.open_label(m)} is not an open of the space")
        if not m >> self.index[point] & 1:
            raise InvalidWorld(f"point {point!r} is not in {self.open_label(m)}")
        return World(point, self.members(m))

    def is_intersection_closed(self) -> bool:
        return all(a & b in self.open_index for a in self.masks for b in self.masks)

    def is_union_closed(self) -> bool:
        return all(a | b in self.open_index for a in self.masks for b in self.masks)

    def is_lattice(self) -> bool:
        """
        Check closure under pairwise union and intersection
        """
        return self.is_intersection_closed() and self.is_union_closed()

    def is_topology(self) -> bool:
        return self.has_empty and self.full in self.open_index and self.is_lattice()

    def close_under(self, ops: Iterable[str], *, adjoin_empty: bool = False) -> SubsetSpace:
        """
        Return the least space containing these opens and closed under the
        given operations ("union", "intersection")
        """
        ops = frozenset(ops)
        if unknown := ops - OPERATIONS:
            raise UsageError(f"unknown closure operations: {', '.join(sorted(unknown))}")
        family = set(self.masks)
        if adjoin_empty:
            family.add(0)
        pending = list(family)
        while pending:
            a = pending.pop()
            for b in list(family):
                for c in self._combine(a, b, ops):
                    if c not in family:
                        family.add(c)
                        pending.append(c)
        return SubsetSpace(self.points, family, require_full=self.full in self.open_index)

    @staticmethod
    def _combine(a: int, b: int, ops: frozenset[str]) -> Iterator[int]:
        if "union" in ops:
            yield a | b
        if "intersection" in ops:
            yield a & b

    def intersection_closure(self, family: Iterable[int]) -> list[int]:
        """
        Close a family of masks under pairwise intersection, returning it in
        canonical order
        """
        res = set(family)
        pending = list(res)
        while pending:
            a = pending.pop()
            for b in list(res):
                if (c := a & b) not in res:
                    res.add(c)
                    pending.append(c)
        return sorted(res, key=self.mask_key)

    def _require_topology(self, what: str) -> None:
        if not self.is_topology():
            raise PreconditionError(f"{what} needs a topology, and {self!r} is not one")

    def interior_mask(self, s: int) -> int:
        self._require_topology("interior")
        res = 0
        for m in self.masks:
            if m & ~s == 0:
                res |= m
        return res

    def closure_mask(self, s: int) -> int:
        return self.full & ~self.interior_mask(self.full & ~s)

    def interior(self, s: Iterable[str]) -> frozenset[str]:
        return self.members(self.interior_mask(self.mask(s)))

    def closure(self, s: Iterable[str]) -> frozenset[str]:
        return self.members(self.closure_mask(self.mask(s)))

    def with_opens(self, masks: Iterable[int], *, require_full: bool = True) -> SubsetSpace:
        return SubsetSpace(self.points, masks, require_full=require_full)

    def to_json(self) -> dict[str, Any]:
        return {
            "points": list(self.points),
            "opens": [sorted(self.members(m)) for m in self.masks],
        }


class Model:
    """
    A subset space with an interpretation of atoms as sets of points.

    Atoms missing from the valuation denote the empty set.
    """

    def __init__(self, space: SubsetSpace, valuation: Mapping[str, Iterable[str] | int] | None = None):
        self.space = space
        self.valuation: dict[str, int] = {}
        for name, value in sorted((valuation or {}).items()):
            try:
                Atom(name)
            except ValueError as e:
                raise ModelError(f"invalid atom in valuation: {e}") from e
            if isinstance(value, int):
                if value & ~space.full:
                    raise ModelError(f"valuation of {name!r} has bits outside the point set")
                self.valuation[name] = value
            else:
                self.valuation[name] = space.mask(value)

    def value(self, atom: str) -> int:
        return self.valuation.get(atom, 0)

    def extension(self, atom: str) -> frozenset[str]:
        return self.space.members(self.value(atom))

    def restrict(self, atoms: Iterable[str]) -> Model:
        """
        Return a model interpreting only the given atoms
        """
        keep = frozenset(atoms)
        return Model(self.space, {k: v for k, v in self.valuation.items() if k in keep})

    def with_space(self, space: SubsetSpace) -> Model:
        if space.points != self.space.points:
            raise ModelError("the new space has a different point set")
        return Model(space, self.valuation)

    def worlds(self) -> list[World]:
        return self.space.worlds()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Model):
            return NotImplemented
        return self.space == other.space and self.valuation == other.valuation

    def __hash__(self) -> int:
        return hash((self.space, tuple(self.valuation.items())))

    def __repr__(self) -> str:
        vals = ", ".join(f"{k}={self.space.open_label(v)}" for k, v in self.valuation.items())
        return f"Model({self.space!r}, {{{vals}}})"

    def to_json(self) -> dict[str, Any]:
        res = self.space.to_json()
        res["valuation"] = {k: sorted(self.space.members(v)) for k, v in self.valuation.items()}
        return res

    @classmethod
    def from_json(cls, data: Any) -> Model:
        if not isinstance(data, dict):
            raise ModelError("a model must be a JSON object")
        for key in ("points", "opens"):
            if not isinstance(data.get(key), list):
                raise ModelError(f"model is missing the {key!r} list")
        valuation = data.get("valuation", {})
        if not isinstance(valuation, dict):
            raise ModelError("'valuation' must be an object mapping atoms to point lists")
        for o in data["opens"]:
            if not isinstance(o, list):
                raise ModelError("each open must be a list of point ids")
        for name, value in valuation.items():
            if not isinstance(value, list):
                raise ModelError(f"valuation of {name!r} must be a list of point ids")
        points = [str(p) for p in data["points"]]
        space = SubsetSpace(points, ([str(p) for p in o] for o in data["opens"]))
        return cls(space, {name: [str(p) for p in value] for name, value in valuation.items()})


def load_model(source: str | Path | IO[str]) -> Model:
    """
    Load a model from a JSON file (path or open file)
    """
    try:
        if isinstance(source, (str, Path)):
            with open(source) as fd:
                data = json.load(fd)
        else:
            data = json.load(source)
    except OSError as e:
        raise ModelError(f"cannot read model: {e}") from e
    except json.JSONDecodeError as e:
        raise ModelError(f"model file is not valid JSON: {e}") from e
    return Model.from_json(data)


def dump_model(model: Model, out: IO[str]) -> None:
    json.dump(model.to_json(), out, sort_keys=True, indent=2)
    out.write("\n")
