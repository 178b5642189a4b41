from __future__ import annotations

import itertools
import json
import logging
from pathlib import Path
from typing import IO, Any, Iterable, Mapping, NamedTuple, Sequence

import numpy
import scipy.sparse
import scipy.sparse.csgraph

from .errors import FrameError, InvariantViolation
from .formula import And, Atom, Bot, Box, Dia, Formula, Iff, Implies, K, L, Not, Or, Top
from .space import Model, SubsetSpace, World

log = logging.getLogger(__name__)

# Largest set of R1-predecessors whose subsets are enumerated by the
# intersection condition
INTERSECTION_CAP = 12

CONDITIONS = {
    1: "effort is reflexive and transitive",
    2: "knowledge is an equivalence",
    3: "effort;knowledge is contained in knowledge;effort",
    4: "ending points",
    5: "extensionality",
    6: "union",
    7: "intersection",
    8: "strongly generated",
}


def compose(a: numpy.ndarray, b: numpy.ndarray) -> numpy.ndarray:
    """
    Relational composition, left to right: x (a;b) z iff x a y and y b z
    """
    return (a.astype(numpy.int32) @ b.astype(numpy.int32)) > 0


class BimodalFrame:
    """
    A finite set of worlds with an effort relation (R1, interpreting []) and a
    knowledge relation (R2, interpreting K), stored as boolean matrices
    """

    def __init__(self, worlds: Sequence[str], r_effort: numpy.ndarray, r_knowledge: numpy.ndarray):
        self.worlds: tuple[str, ...] = tuple(worlds)
        if len(set(self.worlds)) != len(self.worlds):
            raise FrameError("duplicate world names")
        n = len(self.worlds)
        self.r_effort = numpy.asarray(r_effort, dtype=bool)
        self.r_knowledge = numpy.asarray(r_knowledge, dtype=bool)
        for name, rel in (("r_effort", self.r_effort), ("r_knowledge", self.r_knowledge)):
            if rel.shape != (n, n):
                raise FrameError(f"{name} has shape {rel.shape} for {n} worlds")
        self.index = {w: i for i, w in enumerate(self.worlds)}

    @classmethod
    def from_pairs(cls, worlds: Sequence[str], r_effort: Iterable[Sequence[str]],
                   r_knowledge: Iterable[Sequence[str]]) -> BimodalFrame:
        names = [str(w) for w in worlds]
        index = {w: i for i, w in enumerate(names)}
        n = len(names)
        rels = []
        for name, pairs in (("r_effort", r_effort), ("r_knowledge", r_knowledge)):
            rel = numpy.zeros((n, n), dtype=bool)
            for pair in pairs:
                if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                    raise FrameError(f"{name}: {pair!r} is not a pair")
                try:
                    rel[index[str(pair[0])], index[str(pair[1])]] = True
                except KeyError as e:
                    raise FrameError(f"{name}: unknown world {e.args[0]!r}") from None
            rels.append(rel)
        return cls(names, rels[0], rels[1])

    def __len__(self) -> int:
        return len(self.worlds)

    def pairs(self, rel: numpy.ndarray) -> list[list[str]]:
        return [[self.worlds[i], self.worlds[j]] for i, j in zip(*numpy.nonzero(rel))]

    def to_json(self) -> dict[str, Any]:
        return {
            "worlds": list(self.worlds),
            "r_effort": self.pairs(self.r_effort),
            "r_knowledge": self.pairs(self.r_knowledge),
        }

    @classmethod
    def from_json(cls, data: Any) -> BimodalFrame:
        if not isinstance(data, dict):
            raise FrameError("a frame must be a JSON object")
        for key in ("worlds", "r_effort", "r_knowledge"):
            if not isinstance(data.get(key), list):
                raise FrameError(f"frame is missing the {key!r} list")
        return cls.from_pairs(data["worlds"], data["r_effort"], data["r_knowledge"])

    def truth_set(self, f: Formula, valuation: Mapping[str, Iterable[str]]) -> frozenset[str]:
        """
        Evaluate f on the frame as a Kripke model: [] looks at effort
        successors, K at knowledge successors
        """
        vals = {}
        for name, worlds in valuation.items():
            vec = numpy.zeros(len(self.worlds), dtype=bool)
            for w in worlds:
                vec[self.index[w]] = True
            vals[name] = vec
        res = self._truth(f, vals)
        return frozenset(self.worlds[i] for i in numpy.nonzero(res)[0])

    def _truth(self, f: Formula, vals: Mapping[str, numpy.ndarray]) -> numpy.ndarray:
        n = len(self.worlds)
        match f:
            case Atom(name):
                return vals.get(name, numpy.zeros(n, dtype=bool))
            case Top():
                return numpy.ones(n, dtype=bool)
            case Bot():
                return numpy.zeros(n, dtype=bool)
            case Not(a):
                return ~self._truth(a, vals)
            case And(a, b):
                return self._truth(a, vals) & self._truth(b, vals)
            case Or(a, b):
                return self._truth(a, vals) | self._truth(b, vals)
            case Implies(a, b):
                return ~self._truth(a, vals) | self._truth(b, vals)
            case Iff(a, b):
                return self._truth(a, vals) == self._truth(b, vals)
            case Box(a):
                return self._necessary(self.r_effort, self._truth(a, vals))
            case K(a):
                return self._necessary(self.r_knowledge, self._truth(a, vals))
            case Dia(a):
                return ~self._necessary(self.r_effort, ~self._truth(a, vals))
            case L(a):
                return ~self._necessary(self.r_knowledge, ~self._truth(a, vals))
        raise TypeError(f"not a formula: {f!r}")

    @staticmethod
    def _necessary(rel: numpy.ndarray, vec: numpy.ndarray) -> numpy.ndarray:
        return ~(rel & ~vec[numpy.newaxis, :]).any(axis=1)


def load_frame(source: str | Path | IO[str]) -> BimodalFrame:
    try:
        if isinstance(source, (str, Path)):
            with open(source) as fd:
                data = json.load(fd)
        else:
            data = json.load(source)
    except OSError as e:
        raise FrameError(f"cannot read frame: {e}") from e
    except json.JSONDecodeError as e:
        raise FrameError(f"frame file is not valid JSON: {e}") from e
    return BimodalFrame.from_json(data)


def dump_frame(frame: BimodalFrame, out: IO[str]) -> None:
    json.dump(frame.to_json(), out, sort_keys=True, indent=2)
    out.write("\n")


class SubsetFrame(NamedTuple):
    frame: BimodalFrame
    worlds: list[World]

    def valuation(self, model: Model) -> dict[str, list[str]]:
        """
        Atom valuation on the frame induced by the model's valuation
        """
        return {
            atom: [w.label for w in self.worlds if w.point in model.extension(atom)]
            for atom in model.valuation
        }


def subset_frame(model: Model | SubsetSpace) -> SubsetFrame:
    """
    Build the frame of the pointed product: effort shrinks the open keeping
    the point, knowledge moves the point keeping the open
    """
    space = model.space if isinstance(model, Model) else model
    pairs = space.world_masks()
    worlds = [World(space.points[i], space.members(m)) for i, m in pairs]
    n = len(pairs)
    same_point = numpy.array([[i == j for j, _ in pairs] for i, _ in pairs], dtype=bool).reshape(n, n)
    same_open = numpy.array([[u == v for _, v in pairs] for _, u in pairs], dtype=bool).reshape(n, n)
    contained = numpy.array([[v & ~u == 0 for _, v in pairs] for _, u in pairs], dtype=bool).reshape(n, n)
    frame = BimodalFrame([w.label for w in worlds], same_point & contained, same_open)
    return SubsetFrame(frame, worlds)


class Condition(NamedTuple):
    number: int
    # None when the condition was not evaluated
    holds: bool | None
    witness: tuple[str, ...] | None = None

    @property
    def description(self) -> str:
        return CONDITIONS[self.number]


class ConditionReport(NamedTuple):
    conditions: dict[int, Condition]

    def holds(self, numbers: Iterable[int] = range(1, 9)) -> bool:
        return all(self.conditions[n].holds is True for n in numbers)

    def failed(self) -> list[Condition]:
        return [c for c in self.conditions.values() if c.holds is False]

    def not_evaluated(self) -> list[Condition]:
        return [c for c in self.conditions.values() if c.holds is None]

    def to_json(self) -> dict[str, Any]:
        return {
            str(n): {
                "description": c.description,
                "holds": c.holds,
                "witness": list(c.witness) if c.witness is not None else None,
            } for n, c in self.conditions.items()
        }


class ConditionChecker:
    """
    Evaluate the eight conditions characterizing subset frames of finite
    topologies. Failing conditions carry the first counterexample found, in
    world order.
    """
    INTERSECTION_CAP = INTERSECTION_CAP

    def __init__(self, frame: BimodalFrame):
        self.frame = frame
        self.r1 = frame.r_effort
        self.r2 = frame.r_knowledge
        self.r12 = compose(self.r1, self.r2)
        self.r21 = compose(self.r2, self.r1)
        self.n = len(frame)

    def names(self, *idx: int) -> tuple[str, ...]:
        return tuple(self.frame.worlds[i] for i in idx)

    def check(self) -> ConditionReport:
        res = {}
        for number in range(1, 9):
            holds, witness = getattr(self, f"condition{number}")()
            res[number] = Condition(number, holds, witness)
            log.debug("condition %d (%s): %s", number, CONDITIONS[number], holds)
        return ConditionReport(res)

    def _preorder_failure(self, rel: numpy.ndarray) -> tuple[int, ...] | None:
        diag = numpy.nonzero(~numpy.diag(rel))[0]
        if len(diag):
            return (int(diag[0]),)
        for a, b in zip(*numpy.nonzero(rel)):
            for c in numpy.nonzero(rel[b] & ~rel[a])[0]:
                return (int(a), int(b), int(c))
        return None

    def condition1(self) -> tuple[bool, tuple[str, ...] | None]:
        if (failure := self._preorder_failure(self.r1)) is not None:
            return False, self.names(*failure)
        return True, None

    def condition2(self) -> tuple[bool, tuple[str, ...] | None]:
        if (failure := self._preorder_failure(self.r2)) is not None:
            return False, self.names(*failure)
        asym = numpy.nonzero(self.r2 & ~self.r2.T)
        if len(asym[0]):
            return False, self.names(int(asym[0][0]), int(asym[1][0]))
        return True, None

    def condition3(self) -> tuple[bool, tuple[str, ...] | None]:
        bad = numpy.nonzero(self.r12 & ~self.r21)
        if len(bad[0]):
            s, u = int(bad[0][0]), int(bad[1][0])
            mid = int(numpy.nonzero(self.r1[s] & self.r2[:, u])[0][0])
            return False, self.names(s, mid, u)
        return True, None

    def condition4(self) -> tuple[bool, tuple[str, ...] | None]:
        for s in range(self.n):
            successors = self.r1[s]
            if not self.r1[successors].all(axis=0).any():
                return False, self.names(s)
        return True, None

    def condition5(self) -> tuple[bool, tuple[str, ...] | None]:
        meet = compose(self.r1, self.r1.T)
        reach = compose(meet, self.r2)
        # covers[s, s']: every knowledge-neighbour of s meets one of s'
        covers = ~compose(self.r2.T, ~reach)
        bad = meet & covers & covers.T & ~numpy.eye(self.n, dtype=bool)
        found = numpy.nonzero(bad)
        if len(found[0]):
            return False, self.names(int(found[0][0]), int(found[1][0]))
        return True, None

    def condition6(self) -> tuple[bool, tuple[str, ...] | None]:
        for s1 in range(self.n):
            for s2 in range(self.n):
                if not (self.r21[:, s1] & self.r21[:, s2]).any():
                    continue
                ok = self.r12[:, s1] | self.r12[:, s2]
                bad = (self.r2 & ~ok[:, numpy.newaxis]).any(axis=0)
                if bad.all():
                    return False, self.names(s1, s2)
        return True, None

    def condition7(self) -> tuple[bool | None, tuple[str, ...] | None]:
        families: set[tuple[int, ...]] = set()
        for s in range(self.n):
            pred = [int(i) for i in numpy.nonzero(self.r1[:, s])[0]]
            if len(pred) > self.INTERSECTION_CAP:
                log.info("intersection condition not evaluated: %d predecessors of %s",
                         len(pred), self.frame.worlds[s])
                return None, None
            for size in range(1, len(pred) + 1):
                families.update(itertools.combinations(pred, size))
        for family in sorted(families):
            cols = self.r2[:, list(family)]
            # t0 such that every member has a knowledge-neighbour below t0
            valid = (compose(cols.T, self.r1)).all(axis=0)
            if not valid.any():
                continue
            needed = cols.any(axis=1) & self.r1[:, valid].any(axis=1)
            if not self.r12[needed].all(axis=0).any():
                return False, self.names(*family)
        return True, None

    def condition8(self) -> tuple[bool, tuple[str, ...] | None]:
        if self.r21.all(axis=1).any():
            return True, None
        return False, None


def check_conditions(frame: BimodalFrame) -> ConditionReport:
    return ConditionChecker(frame).check()


class FrameSpace(NamedTuple):
    space: SubsetSpace
    world_map: dict[str, World]


def frame_to_space(frame: BimodalFrame) -> FrameSpace:
    """
    Rebuild a subset space from a frame satisfying conditions 1 to 7.

    Points are the ending points of the effort relation; each knowledge class
    becomes the set of ending points of its worlds. Without condition 8 the
    full point set may be missing from the opens.
    """
    report = check_conditions(frame)
    if not report.holds(range(1, 8)):
        raise FrameError("frame does not satisfy conditions 1 to 7: " + ", ".join(
            f"{c.number} ({c.description})" for c in report.failed() + report.not_evaluated()))
    r1 = frame.r_effort
    n = len(frame)

    ending = []
    for s in range(n):
        successors = r1[s]
        candidates = numpy.nonzero(successors & r1[successors].all(axis=0))[0]
        ending.append(int(candidates[0]))

    graph = scipy.sparse.csr_matrix(frame.r_knowledge.astype(numpy.int8))
    _, labels = scipy.sparse.csgraph.connected_components(graph, directed=False)

    points = sorted({frame.worlds[e] for e in ending})
    classes: dict[int, set[str]] = {}
    for s in range(n):
        classes.setdefault(int(labels[s]), set()).add(frame.worlds[ending[s]])
    space = SubsetSpace(points, classes.values(), require_full=report.conditions[8].holds is True)
    world_map = {
        frame.worlds[s]: World(frame.worlds[ending[s]], frozenset(classes[int(labels[s])]))
        for s in range(n)
    }

    rebuilt = subset_frame(space)
    rebuilt_index = {w: i for i, w in enumerate(rebuilt.worlds)}
    if len(set(world_map.values())) != n or set(world_map.values()) != set(rebuilt_index):
        raise InvariantViolation("rebuilt space has a different set of worlds")
    perm = numpy.array([rebuilt_index[world_map[w]] for w in frame.worlds])
    for name, rel, rebuilt_rel in (
            ("effort", frame.r_effort, rebuilt.frame.r_effort),
            ("knowledge", frame.r_knowledge, rebuilt.frame.r_knowledge)):
        if not (rebuilt_rel[numpy.ix_(perm, perm)] == rel).all():
            raise InvariantViolation(f"rebuilt space has a different {name} relation")
    return FrameSpace(space, world_map)
