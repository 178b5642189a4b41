from __future__ import annotations

import random
import unittest

from topologic.decide import enumerate_spaces
from topologic.errors import PreconditionError
from topologic.formula import parse, random_formula, subformulas
from topologic.semantics import Evaluator, evaluate
from topologic.space import Model, SubsetSpace
from topologic.splitting import (Splitting, basis_witness, build_stable_splittings, definable_sets, finitize,
                                 is_stable_for, quotient_points, restrict_to_basis)

from .utils import chain_model, collapsed_model, interval_replica, nested_chain, random_models

POWERSET_AB = SubsetSpace(["a", "b"], [[], ["a"], ["b"], ["a", "b"]])


def random_family(rng: random.Random, space: SubsetSpace) -> list[int]:
    family = rng.sample(space.masks, rng.randint(1, min(3, len(space.masks))))
    return space.intersection_closure(family)


class TestSplitting(unittest.TestCase):
    def test_remainders(self):
        split = Splitting(POWERSET_AB, [0b11, 0b01])
        self.assertEqual(split.remainder(0b11), {0b10, 0b11})
        self.assertEqual(split.remainder(0b01), {0b00, 0b01})
        self.assertEqual(split.representative(0b10), 0b11)
        self.assertEqual(split.representative(0b00), 0b01)

    def test_single_member(self):
        split = Splitting(POWERSET_AB, [0b11])
        self.assertEqual(split.remainder(0b11), frozenset(POWERSET_AB.masks))
        self.assertEqual(split.equiv_classes(), [frozenset(POWERSET_AB.masks)])

    def test_all_opens(self):
        split = Splitting(POWERSET_AB, POWERSET_AB.masks)
        for u in POWERSET_AB.masks:
            self.assertEqual(split.remainder(u), {u})

    def test_equiv_classes(self):
        split = Splitting(POWERSET_AB, [0b11, 0b01])
        self.assertEqual(set(split.equiv_classes()), {frozenset((0b10, 0b11)), frozenset((0b00, 0b01))})

    def test_preconditions(self):
        with self.assertRaises(PreconditionError):
            Splitting(POWERSET_AB, [0b01, 0b10])
        with self.assertRaises(PreconditionError):
            Splitting(chain_model().space, [0b10])
        with self.assertRaises(PreconditionError):
            Splitting(POWERSET_AB, [])
        with self.assertRaises(PreconditionError):
            Splitting(POWERSET_AB, [0b11]).remainder(0b01)

    def test_partition_laws(self):
        rng = random.Random(5)
        spaces = [s for n in range(1, 5) for s in enumerate_spaces(n)]
        for _ in range(500):
            space = rng.choice(spaces)
            split = Splitting(space, random_family(rng, space))
            self.assertTrue(split.is_partition(), split)
            classes = split.equiv_classes()
            for c in classes:
                self.assertTrue(split.is_convex(c), split)
            for u in split.family:
                self.assertEqual(split.remainder(u), split.remainder_below(u))


class TestStability(unittest.TestCase):
    def test_examples(self):
        model = chain_model()
        cls = [0b01, 0b11]
        self.assertTrue(is_stable_for(model, cls, parse("top")))
        self.assertFalse(is_stable_for(model, cls, parse("K A")))
        self.assertTrue(is_stable_for(model, cls, parse("A")))

    def test_build_examples(self):
        self.assertEqual(build_stable_splittings(chain_model(), parse("A")).family, (0b11,))
        self.assertEqual(build_stable_splittings(chain_model(), parse("K A")).family, (0b01, 0b11))
        self.assertEqual(build_stable_splittings(collapsed_model(), parse("[] L A -> A")).family, (0b11,))

    def test_not_topology(self):
        model = Model(SubsetSpace(["a", "b"], [["a"], ["a", "b"]]), {"A": ["a"]})
        with self.assertRaises(PreconditionError):
            build_stable_splittings(model, parse("K A"))

    def test_partition_theorem(self):
        rng = random.Random(6)
        for model in [m for n in range(1, 5) for m in random_models(rng, 50, n, ("A", "B"))]:
            phi = random_formula(rng, ["A", "B"], 3)
            res = build_stable_splittings(model, phi)
            res.check()

    def test_extension(self):
        rng = random.Random(7)
        for model in random_models(rng, 50, 4, ("A",)):
            phi = random_formula(rng, ["A"], 3)
            res = build_stable_splittings(model, phi)
            space = model.space
            below = Splitting(space, res.family).below()
            extended = Splitting(space, space.intersection_closure(list(res.family) + [rng.choice(below)]))
            ev = Evaluator.for_model(model)
            for cls in extended.classes().values():
                for sub in subformulas(phi):
                    self.assertTrue(is_stable_for(model, cls, sub, ev))

    def test_report(self):
        report = build_stable_splittings(chain_model(), parse("K A")).to_json()
        self.assertEqual(report["family"], ["{a}", "{a,b}"])
        self.assertEqual(report["classes"][0]["representative"], "{a}")
        self.assertEqual(report["classes"][0]["members"], ["{a}"])
        self.assertEqual(report["classes"][1]["members"], ["{a,b}"])
        self.assertTrue(report["definable"])

    def test_definable(self):
        self.assertEqual(definable_sets(chain_model()), {0b00, 0b01, 0b10, 0b11})


class TestBasis(unittest.TestCase):
    def test_discrete(self):
        model = Model(POWERSET_AB, {"A": ["a"]})
        report = restrict_to_basis(model, [0b01, 0b10, 0b11], [parse("A -> <> K A"), parse("[] L A"), parse("K A")])
        self.assertEqual(len(report.model.space.masks), 3)
        self.assertGreater(report.worlds_checked, 0)

    def test_identity(self):
        model = chain_model()
        report = restrict_to_basis(model, model.space.masks, [parse("<> K A")])
        self.assertEqual(report.model, model)

    def test_not_basis(self):
        model = Model(POWERSET_AB, {"A": ["a"]})
        with self.assertRaises(PreconditionError):
            restrict_to_basis(model, [0b01, 0b11])
        with self.assertRaises(PreconditionError):
            restrict_to_basis(model, [0b01, 0b10])

    def test_witness(self):
        res = basis_witness(POWERSET_AB, [0b01, 0b10, 0b11], [0b11, 0b01])
        self.assertEqual(res, {(0b11, 0): 0b11, (0b11, 1): 0b10, (0b01, 0): 0b01})

    def test_random_bases(self):
        rng = random.Random(8)
        spaces = [s for n in range(1, 5) for s in enumerate_spaces(n)]
        formulas = [parse(t) for t in ("A -> <> K A", "[] L A -> A", "L <> K ~A", "<> K A & L ~A")]
        accepted = rejected = 0
        for _ in range(200):
            space = rng.choice(spaces)
            model = Model(space, {"A": rng.randrange(1 << len(space.points))})
            basis = [m for m in space.masks if rng.random() < 0.8]
            # A finite union-closed basis must hold every nonempty open
            if all(m in basis for m in space.masks if m):
                report = restrict_to_basis(model, basis, formulas)
                self.assertEqual(set(report.model.space.masks), set(basis))
                basis_witness(space, basis, random_family(rng, space))
                accepted += 1
            else:
                with self.assertRaises(PreconditionError):
                    restrict_to_basis(model, basis, formulas)
                rejected += 1
        self.assertGreater(accepted, 0)
        self.assertGreater(rejected, 0)


class TestQuotient(unittest.TestCase):
    def test_interval(self):
        res = quotient_points(interval_replica())
        self.assertEqual(res.model.space.points, ("x1", "x2"))
        self.assertEqual(res.model.space.opens, (frozenset(), frozenset(("x1", "x2"))))
        self.assertEqual(res.model.extension("A"), frozenset(("x1",)))
        self.assertEqual(res.point_map, {"p0": "x1", "p1": "x2", "p2": "x2"})

    def test_no_collapse(self):
        res = quotient_points(nested_chain(3))
        self.assertEqual(len(res.model.space.points), 3)

    def test_single_point(self):
        model = Model(SubsetSpace(["a", "b", "c"], [[], ["a", "b", "c"]]))
        self.assertEqual(quotient_points(model).model.space.points, ("x1",))

    def test_soundness(self):
        rng = random.Random(9)
        for model in random_models(rng, 100, 4, ("A", "B")):
            res = quotient_points(model)
            phi = random_formula(rng, ["A", "B"], 3)
            for sub in subformulas(phi):
                for world, image in res.world_map.items():
                    self.assertEqual(evaluate(model, world, sub), evaluate(res.model, image, sub))


class TestFinitize(unittest.TestCase):
    def test_fixed_point(self):
        model = collapsed_model()
        self.assertEqual(finitize(model, parse("[] L A -> A")).model, model)

    def test_nested_chain(self):
        model = nested_chain(5)
        phi = parse("<> K A")
        res = finitize(model, phi)
        self.assertEqual(res.model.space.points, ("x1", "x2"))
        self.assertEqual(len(res.model.space.masks), 3)
        for world, image in res.world_map.items():
            self.assertEqual(evaluate(model, world, phi), evaluate(res.model, image, phi))

    def test_top(self):
        res = finitize(nested_chain(3), parse("top"))
        self.assertEqual(res.model.space.points, ("x1",))
        self.assertEqual(res.model.space.masks, (0, 1))

    def test_fidelity(self):
        rng = random.Random(10)
        for model in [m for n in range(1, 5) for m in random_models(rng, 50, n, ("A", "B"))]:
            phi = random_formula(rng, ["A", "B"], 3)
            res = finitize(model, phi)
            self.assertEqual(set(res.world_map), set(model.worlds()))
            for sub in subformulas(phi):
                for world, image in res.world_map.items():
                    self.assertEqual(evaluate(model, world, sub), evaluate(res.model, image, sub), sub)


if __name__ == "__main__":
    unittest.main()
