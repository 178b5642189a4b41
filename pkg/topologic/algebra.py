from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import IO, Any, Mapping, NamedTuple, Sequence

import numpy

from .errors import AlgebraError
from .formula import And, Atom, Bot, Box, Dia, Formula, Iff, Implies, K, L, Not, Or, Top
from .frames import subset_frame
from .space import Model, World

log = logging.getLogger(__name__)

# Largest number of atoms of the carrier: 2**MAX_ATOMS elements
MAX_ATOMS = 12


class MonadicAlgebra:
    """
    The powerset algebra of ``atom_count`` atoms with an interior operator and
    a universal quantifier.

    Elements are integer bitmasks over the atoms; both operators are tables
    indexed by element.
    """

    def __init__(self, atom_count: int, interior: Sequence[int] | numpy.ndarray, forall: Sequence[int] | numpy.ndarray):
        if atom_count < 0:
            raise AlgebraError("atom count cannot be negative")
        if atom_count > MAX_ATOMS:
            raise AlgebraError(f"{atom_count} atoms is more than the supported {MAX_ATOMS}")
        self.atom_count = atom_count
        self.size = 1 << atom_count
        self.full = self.size - 1
        self.interior = self._table("interior", interior)
        self.forall = self._table("forall", forall)
        self.elements = numpy.arange(self.size, dtype=numpy.int64)

    def _table(self, name: str, values: Sequence[int] | numpy.ndarray) -> numpy.ndarray:
        table = numpy.asarray(values, dtype=numpy.int64)
        if table.shape != (self.size,):
            raise AlgebraError(f"{name} table has {table.size} entries instead of {self.size}")
        if ((table < 0) | (table > self.full)).any():
            raise AlgebraError(f"{name} table has values outside the carrier")
        return table

    def complement(self, x: numpy.ndarray | int) -> Any:
        return self.full ^ x

    def closure_table(self) -> numpy.ndarray:
        """
        C = -I-
        """
        return self.complement(self.interior[self.complement(self.elements)])

    def exists_table(self) -> numpy.ndarray:
        return self.complement(self.forall[self.complement(self.elements)])

    def fixed_elements(self) -> list[int]:
        """
        Elements fixed by both I and C: the values allowed for atoms
        """
        closure = self.closure_table()
        fixed = (self.interior == self.elements) & (closure == self.elements)
        return [int(x) for x in numpy.nonzero(fixed)[0]]

    def interior_laws(self) -> bool:
        i, e = self.interior, self.elements
        if i[self.full] != self.full:
            return False
        if (i & ~e).any():
            return False
        if (i[i] != i).any():
            return False
        for a in range(self.size):
            if (i[a & e] != (i[a] & i)).any():
                return False
        return True

    def forall_laws(self) -> bool:
        f, e = self.forall, self.elements
        if f[self.full] != self.full:
            return False
        if (f & ~e).any():
            return False
        for a in range(self.size):
            if (f[a | f] != (f[a] | f)).any():
                return False
        return True

    def to_json(self) -> dict[str, Any]:
        return {
            "atoms": self.atom_count,
            "interior": [int(x) for x in self.interior],
            "forall": [int(x) for x in self.forall],
        }

    @classmethod
    def from_json(cls, data: Any) -> MonadicAlgebra:
        if not isinstance(data, dict):
            raise AlgebraError("an algebra must be a JSON object")
        if not isinstance(data.get("atoms"), int):
            raise AlgebraError("'atoms' must be an integer")
        for key in ("interior", "forall"):
            if not isinstance(data.get(key), list) or not all(isinstance(x, int) for x in data[key]):
                raise AlgebraError(f"{key!r} must be a list of integers")
        return cls(data["atoms"], data["interior"], data["forall"])


def check_fma(alg: MonadicAlgebra) -> bool:
    """
    Check the interior and quantifier laws, and forall I a <= I forall a,
    the algebraic form of K [] phi -> [] K phi
    """
    if not alg.interior_laws():
        log.debug("interior laws fail")
        return False
    if not alg.forall_laws():
        log.debug("quantifier laws fail")
        return False
    i, f = alg.interior, alg.forall
    return not (f[i] & ~i[f]).any()


def check_gma(alg: MonadicAlgebra) -> bool:
    """
    Check the FMA laws, C I = I C, and the union inequality
    C(forall a & b) & exists C(forall a & c) <= C(forall C a & C b & exists C c).

    Both sides of the inequality distribute over joins in b and c, so it is
    checked for b and c ranging over the atoms and a over the whole carrier.
    """
    if not check_fma(alg):
        return False
    i, f = alg.interior, alg.forall
    c = alg.closure_table()
    ex = alg.exists_table()
    if (c[i] != i[c]).any():
        log.debug("C I and I C differ")
        return False
    fa = f
    forall_ca = f[c]
    for bi in range(alg.atom_count):
        b = 1 << bi
        for ci in range(alg.atom_count):
            cc = 1 << ci
            lhs = c[fa & b] & ex[c[fa & cc]]
            rhs = c[forall_ca & c[b] & ex[c[cc]]]
            if (lhs & ~rhs).any():
                log.debug("union inequality fails for b=%d c=%d", b, cc)
                return False
    return True


class ComplexAlgebra(NamedTuple):
    algebra: MonadicAlgebra
    worlds: list[World]

    def element(self, worlds: set[World] | frozenset[World]) -> int:
        return sum(1 << i for i, w in enumerate(self.worlds) if w in worlds)

    def world_set(self, element: int) -> frozenset[World]:
        return frozenset(w for i, w in enumerate(self.worlds) if element >> i & 1)


def _box_table(rel: numpy.ndarray, elements: numpy.ndarray) -> numpy.ndarray:
    """
    For each element a, the set of worlds all of whose successors are in a
    """
    res = numpy.zeros(len(elements), dtype=numpy.int64)
    for w in range(rel.shape[0]):
        successors = int(sum(1 << int(j) for j in numpy.nonzero(rel[w])[0]))
        res |= numpy.where((elements & successors) == successors, 1 << w, 0)
    return res


def complex_algebra(model: Model) -> ComplexAlgebra:
    """
    Build the algebra of all sets of worlds of a model, with I from effort
    and forall from knowledge
    """
    sf = subset_frame(model)
    n = len(sf.worlds)
    if n > MAX_ATOMS:
        raise AlgebraError(f"the model has {n} worlds, more than the supported {MAX_ATOMS}")
    elements = numpy.arange(1 << n, dtype=numpy.int64)
    interior = _box_table(sf.frame.r_effort, elements)
    forall = _box_table(sf.frame.r_knowledge, elements)
    return ComplexAlgebra(MonadicAlgebra(n, interior, forall), sf.worlds)


def natural_valuation(model: Model, worlds: Sequence[World]) -> dict[str, int]:
    """
    Map each atom to the set of worlds whose point is in its extension
    """
    return {
        atom: sum(1 << i for i, w in enumerate(worlds) if w.point in model.extension(atom))
        for atom in model.valuation
    }


def check_valuation(alg: MonadicAlgebra, valuation: Mapping[str, int]) -> None:
    fixed = set(alg.fixed_elements())
    for name, value in valuation.items():
        if value not in fixed:
            raise AlgebraError(f"value {value} of {name!r} is not fixed by interior and closure")


def alg_eval(alg: MonadicAlgebra, valuation: Mapping[str, int], f: Formula) -> int:
    """
    Evaluate f as an element of the algebra: [] is the interior, K is the
    universal quantifier
    """
    check_valuation(alg, valuation)
    closure = alg.closure_table()
    exists = alg.exists_table()

    def value(g: Formula) -> int:
        match g:
            case Atom(name):
                return valuation.get(name, 0)
            case Top():
                return alg.full
            case Bot():
                return 0
            case Not(a):
                return alg.complement(value(a))
            case And(a, b):
                return value(a) & value(b)
            case Or(a, b):
                return value(a) | value(b)
            case Implies(a, b):
                return alg.complement(value(a)) | value(b)
            case Iff(a, b):
                return alg.complement(value(a) ^ value(b))
            case Box(a):
                return int(alg.interior[value(a)])
            case Dia(a):
                return int(closure[value(a)])
            case K(a):
                return int(alg.forall[value(a)])
            case L(a):
                return int(exists[value(a)])
        raise TypeError(f"not a formula: {g!r}")

    return value(f)


def load_algebra(source: str | Path | IO[str]) -> MonadicAlgebra:
    try:
        if isinstance(source, (str, Path)):
            with open(source) as fd:
                data = json.load(fd)
        else:
            data = json.load(source)
    except OSError as e:
        raise AlgebraError(f"cannot read algebra: {e}") from e
    except json.JSONDecodeError as e:
        raise AlgebraError(f"algebra file is not valid JSON: {e}") from e
    return MonadicAlgebra.from_json(data)


def dump_algebra(alg: MonadicAlgebra, out: IO[str]) -> None:
    json.dump(alg.to_json(), out, sort_keys=True, indent=2)
    out.write("\n")
