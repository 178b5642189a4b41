from __future__ import annotations

import itertools
import random
from typing import Iterator, Sequence

from topologic.decide import enumerate_spaces
from topologic.space import Model, SubsetSpace


def chain_model() -> Model:
    """
    Opens {}, {a}, {a, b}, with A true at a
    """
    return Model(SubsetSpace(["a", "b"], [[], ["a"], ["a", "b"]]), {"A": ["a"]})


def collapsed_model() -> Model:
    """
    The two point quotient of the half-open interval model
    """
    return Model(SubsetSpace(["x1", "x2"], [[], ["x1", "x2"]]), {"A": ["x1"]})


def interval_replica() -> Model:
    """
    Three points, only the trivial opens, A true at p0
    """
    return Model(SubsetSpace(["p0", "p1", "p2"], [[], ["p0", "p1", "p2"]]), {"A": ["p0"]})


def nested_chain(n: int) -> Model:
    """
    Points p0 … p(n-1) with opens the initial segments, A true at p0
    """
    points = [f"p{i}" for i in range(n)]
    return Model(SubsetSpace(points, [points[:i] for i in range(n + 1)]), {"A": ["p0"]})


def models(max_points: int, atoms: Sequence[str] = ("A",), space_class: str = "topology") -> Iterator[Model]:
    """
    Every model of the class up to max_points points, with all valuations of
    the given atoms
    """
    for n in range(1, max_points + 1):
        for space in enumerate_spaces(n, space_class):
            for values in itertools.product(range(1 << n), repeat=len(atoms)):
                yield Model(space, dict(zip(atoms, values)))


def random_models(rng: random.Random, count: int, points: int, atoms: Sequence[str] = ("A",),
                  space_class: str = "topology") -> list[Model]:
    spaces = list(enumerate_spaces(points, space_class))
    res = []
    for _ in range(count):
        space = rng.choice(spaces)
        res.append(Model(space, {a: rng.randrange(1 << points) for a in atoms}))
    return res
