from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import UsageError
from .formula import And, Atom, Dia, Formula, Implies, K, L, Not, Or, Iff, Box, Top, Bot, conj, parse
from .semantics import Evaluator
from .space import Model, World

log = logging.getLogger(__name__)

# Semantic conditions a model must meet before a scheme is checked on it
NEEDS_LATTICE = "lattice"
NEEDS_TOPOLOGY = "topology"

LEMMA_MAIN = re.compile(r"lemma-main\((\d+)\)\Z")


@dataclass(frozen=True)
class Scheme:
    """
    A formula template whose metavariables are replaced by formulas.

    ``atomic`` lists metavariables that only accept atoms; ``bipersistent``
    lists the ones whose substituted formula must be bi-persistent in the
    model being checked.
    """
    name: str
    template: Formula
    metavariables: tuple[str, ...]
    needs: frozenset[str] = frozenset()
    atomic: frozenset[str] = frozenset()
    bipersistent: frozenset[str] = frozenset()
    description: str = ""

    def instantiate(self, substitution: Mapping[str, Formula]) -> Formula:
        if missing := [m for m in self.metavariables if m not in substitution]:
            raise UsageError(f"{self.name}: no substitution for {', '.join(missing)}")
        for m in self.atomic:
            if not isinstance(substitution[m], Atom):
                raise UsageError(f"{self.name}: {m} must be replaced by an atom")
        return substitute(self.template, substitution)


SCHEMES: dict[str, Scheme] = {}


def register(scheme: Scheme) -> Scheme:
    SCHEMES[scheme.name] = scheme
    return scheme


def _scheme(name: str, text: str, *, needs: Iterable[str] = (), atomic: Iterable[str] = (),
            bipersistent: Iterable[str] = (), description: str = "") -> Scheme:
    template = parse(text)
    metavariables = tuple(sorted(template.atoms(), key=METAVARIABLE_ORDER.index))
    return register(Scheme(
        name=name, template=template, metavariables=metavariables, needs=frozenset(needs),
        atomic=frozenset(atomic), bipersistent=frozenset(bipersistent), description=description))


METAVARIABLE_ORDER = ["phi", "psi", "chi", "A"]

_scheme("axiom-1", "(phi -> (psi -> chi)) -> ((phi -> psi) -> (phi -> chi))",
        description="propositional tautology")
_scheme("axiom-2", "(A -> [] A) & (~A -> [] ~A)", atomic=("A",),
        description="atoms do not depend on the open")
_scheme("axiom-3", "[] (phi -> psi) -> ([] phi -> [] psi)")
_scheme("axiom-4", "[] phi -> phi")
_scheme("axiom-5", "[] phi -> [] [] phi")
_scheme("axiom-6", "K (phi -> psi) -> (K phi -> K psi)")
_scheme("axiom-7", "K phi -> phi")
_scheme("axiom-8", "K phi -> K K phi")
_scheme("axiom-9", "phi -> K L phi")
_scheme("axiom-10", "K [] phi -> [] K phi")
_scheme("axiom-11", "<> [] phi -> [] <> phi", needs=(NEEDS_LATTICE,))
_scheme("axiom-12", "<> (K phi & psi) & L <> (K phi & chi) -> <> (K <> phi & <> psi & L <> chi)",
        needs=(NEEDS_LATTICE,), description="union axiom")
_scheme("direct-mp", "<> [] phi & <> [] psi -> <> [] (phi & psi)", needs=(NEEDS_LATTICE,),
        description="equivalent form of axiom-11")
_scheme("lemma-damand", "<> (phi & psi) <-> <> phi & <> psi", bipersistent=("phi",))
_scheme("prop-boxdam", "[] <> phi -> <> [] phi", needs=(NEEDS_LATTICE,))
_scheme("open-char", "A -> <> K A", needs=(NEEDS_TOPOLOGY,), atomic=("A",))
_scheme("closed-char", "[] L A -> A", needs=(NEEDS_TOPOLOGY,), atomic=("A",))
_scheme("dense-char", "[] L A", needs=(NEEDS_TOPOLOGY,), atomic=("A",))
_scheme("nowhere-dense-char", "L <> K ~A", needs=(NEEDS_TOPOLOGY,), atomic=("A",))


def lemma_main(n: int) -> Scheme:
    """
    Build <>K phi & L(<>K phi & psi1) & ... -> <>(K phi & L psi1 & ...) for n
    conjuncts
    """
    if n < 1:
        raise UsageError("lemma-main needs n >= 1")
    phi = Atom("phi")
    psis = [Atom(f"psi{i}") for i in range(1, n + 1)]
    premise = conj([Dia(K(phi))] + [L(And(Dia(K(phi)), p)) for p in psis])
    conclusion = Dia(conj([K(phi)] + [L(p) for p in psis]))
    names = ("phi",) + tuple(p.name for p in psis)
    return Scheme(
        name=f"lemma-main({n})", template=Implies(premise, conclusion), metavariables=names,
        needs=frozenset((NEEDS_LATTICE,)), bipersistent=frozenset(names))


def get_scheme(name: str) -> Scheme:
    if mo := LEMMA_MAIN.match(name):
        return lemma_main(int(mo.group(1)))
    try:
        return SCHEMES[name]
    except KeyError:
        raise UsageError(f"unknown scheme {name!r}") from None


def substitute(f: Formula, substitution: Mapping[str, Formula]) -> Formula:
    match f:
        case Atom(name):
            return substitution.get(name, f)
        case Top() | Bot():
            return f
        case Not(a):
            return Not(substitute(a, substitution))
        case K(a):
            return K(substitute(a, substitution))
        case L(a):
            return L(substitute(a, substitution))
        case Box(a):
            return Box(substitute(a, substitution))
        case Dia(a):
            return Dia(substitute(a, substitution))
        case And(a, b):
            return And(substitute(a, substitution), substitute(b, substitution))
        case Or(a, b):
            return Or(substitute(a, substitution), substitute(b, substitution))
        case Implies(a, b):
            return Implies(substitute(a, substitution), substitute(b, substitution))
        case Iff(a, b):
            return Iff(substitute(a, substitution), substitute(b, substitution))
    raise TypeError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class SchemeInstance:
    name: str
    substitution: Mapping[str, Formula] = field(default_factory=dict)

    @property
    def scheme(self) -> Scheme:
        return get_scheme(self.name)

    @property
    def formula(self) -> Formula:
        return self.scheme.instantiate(self.substitution)

    def __str__(self) -> str:
        subst = ", ".join(f"{k} := {v}" for k, v in sorted(self.substitution.items()))
        return f"{self.name}[{subst}]"


class SchemeResult(NamedTuple):
    status: str
    world: World | None = None
    reason: str = ""

    VALID = "valid"
    INVALID = "invalid"
    PRECONDITION_FAILED = "precondition-failed"

    @property
    def valid(self) -> bool:
        return self.status == self.VALID


def unmet_precondition(model: Model, scheme: Scheme, substitution: Mapping[str, Formula]) -> str | None:
    """
    Return a description of the first precondition of the scheme that the
    model does not satisfy, or None
    """
    space = model.space
    if NEEDS_TOPOLOGY in scheme.needs and not space.is_topology():
        return "the space is not a topology"
    if NEEDS_LATTICE in scheme.needs and not space.is_lattice():
        return "the opens are not closed under union and intersection"
    ev = Evaluator.for_model(model)
    for m in sorted(scheme.bipersistent):
        f = substitution[m]
        if not ev.valid(Implies(Dia(f), Box(f))):
            return f"{m} := {f} is not bi-persistent in the model"
    return None


def check_scheme(model: Model, inst: SchemeInstance) -> SchemeResult:
    """
    Check an instance of a scheme on every world of a model.

    A model that does not satisfy the preconditions of the scheme gives a
    precondition-failed result rather than a verdict.
    """
    scheme = inst.scheme
    formula = scheme.instantiate(inst.substitution)
    if (reason := unmet_precondition(model, scheme, inst.substitution)) is not None:
        return SchemeResult(SchemeResult.PRECONDITION_FAILED, reason=reason)
    failure = Evaluator.for_model(model).first_failure(formula)
    if failure is None:
        return SchemeResult(SchemeResult.VALID)
    i, m = failure
    return SchemeResult(SchemeResult.INVALID, World(model.space.points[i], model.space.members(m)))


def substitutions(scheme: Scheme, pool: Sequence[Formula], atoms: Sequence[str]) -> Iterable[dict[str, Formula]]:
    """
    Enumerate the substitutions of a scheme drawing formulas from pool, and
    atoms for the metavariables that only accept atoms
    """
    choices = [
        [Atom(a) for a in atoms] if m in scheme.atomic else pool
        for m in scheme.metavariables
    ]
    for combo in itertools.product(*choices):
        yield dict(zip(scheme.metavariables, combo))


class Violation(NamedTuple):
    instance: SchemeInstance
    model: Model
    world: World


def sweep(models: Iterable[Model], names: Sequence[str], pool: Sequence[Formula]) -> list[Violation]:
    """
    Check every instance of the named schemes with substitutions from pool on
    every model, returning the instances that are not valid.

    Models that do not meet the precondition of a scheme are skipped for it.
    """
    schemes = [get_scheme(name) for name in names]
    violations: list[Violation] = []
    checked = 0
    for model in models:
        atoms = sorted(model.valuation) or ["A"]
        for scheme in schemes:
            for subst in substitutions(scheme, pool, atoms):
                inst = SchemeInstance(scheme.name, subst)
                res = check_scheme(model, inst)
                checked += 1
                if res.status == SchemeResult.INVALID:
                    log.warning("%s fails on %r at %s", inst, model, res.world.label)
                    violations.append(Violation(inst, model, res.world))
    log.info("sweep: %d instances checked, %d violations", checked, len(violations))
    return violations
