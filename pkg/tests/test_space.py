from __future__ import annotations

import io
import random
import unittest

from topologic.decide import enumerate_spaces
from topologic.errors import InvalidWorld, ModelError, PreconditionError, UsageError
from topologic.space import Model, SubsetSpace, World, load_model, dump_model

from .utils import chain_model


def opens(space: SubsetSpace) -> set[frozenset[str]]:
    return set(space.opens)


class TestSubsetSpace(unittest.TestCase):
    def test_canonical_order(self):
        space = SubsetSpace(["b", "a"], [["a", "b"], [], ["b"], ["a"]])
        self.assertEqual(space.points, ("a", "b"))
        self.assertEqual(space.masks, (0, 1, 2, 3))
        self.assertEqual(space.open_label(3), "{a,b}")

    def test_validation(self):
        with self.assertRaises(ModelError):
            SubsetSpace([], [[]])
        with self.assertRaises(ModelError):
            SubsetSpace(["a", "b"], [["a"]])
        with self.assertRaises(ModelError):
            SubsetSpace(["a"], [["a"], ["c"]])
        # Duplicates collapse
        self.assertEqual(len(SubsetSpace(["a"], [["a"], ["a"]]).masks), 1)

    def test_close_under(self):
        space = SubsetSpace(["a", "b"], [["a", "b"]])
        self.assertEqual(opens(space.close_under({"union", "intersection"})), {frozenset("ab")})
        self.assertEqual(
            opens(space.close_under({"union", "intersection"}, adjoin_empty=True)),
            {frozenset(), frozenset("ab")})

        space = SubsetSpace(["a", "b"], [["a"], ["b"], ["a", "b"]])
        self.assertIn(frozenset(), opens(space.close_under({"intersection"})))

        space = SubsetSpace(["a", "b", "c"], [["a"], ["b", "c"], ["a", "b", "c"]])
        self.assertEqual(
            opens(space.close_under({"union", "intersection"})),
            {frozenset(), frozenset("a"), frozenset("bc"), frozenset("abc")})

        with self.assertRaises(UsageError):
            space.close_under({"complement"})

    def test_close_under_random(self):
        rng = random.Random(5)
        for _ in range(60):
            n = rng.randint(1, 4)
            full = (1 << n) - 1
            family = {m for m in range(1, full) if rng.random() < 0.3} | {full}
            space = SubsetSpace([f"p{i}" for i in range(n)], family)
            for ops in ({"union"}, {"intersection"}, {"union", "intersection"}):
                for adjoin_empty in (False, True):
                    closed = space.close_under(ops, adjoin_empty=adjoin_empty)
                    self.assertLessEqual(set(space.masks), set(closed.masks))
                    self.assertEqual(closed.close_under(ops, adjoin_empty=adjoin_empty), closed)
                    for a in closed.masks:
                        for b in closed.masks:
                            if "union" in ops:
                                self.assertIn(a | b, closed.open_index)
                            if "intersection" in ops:
                                self.assertIn(a & b, closed.open_index)

    def test_is_topology(self):
        self.assertTrue(SubsetSpace(["a", "b"], [[], ["a"], ["a", "b"]]).is_topology())
        self.assertFalse(SubsetSpace(["a", "b"], [["a"], ["b"], ["a", "b"]]).is_topology())
        self.assertTrue(SubsetSpace(["a", "b", "c"], [[], ["a"], ["a", "b"], ["a", "b", "c"]]).is_topology())
        # Intersection closed without unions
        space = SubsetSpace(["a", "b", "c"], [[], ["a"], ["b"], ["a", "b", "c"]])
        self.assertTrue(space.is_intersection_closed())
        self.assertFalse(space.is_lattice())

    def test_interior_closure(self):
        space = SubsetSpace(["a", "b"], [[], ["a"], ["a", "b"]])
        self.assertEqual(space.interior(["a"]), frozenset("a"))
        self.assertEqual(space.interior(["b"]), frozenset())
        self.assertEqual(space.closure(["b"]), frozenset("b"))
        self.assertEqual(space.closure(["a"]), frozenset("ab"))
        with self.assertRaises(PreconditionError):
            SubsetSpace(["a", "b"], [["a"], ["a", "b"]]).interior(["a"])

    def test_interior_closure_laws(self):
        for n in range(1, 5):
            for space in enumerate_spaces(n):
                subsets = range(1 << n)
                inner = [space.interior_mask(s) for s in subsets]
                outer = [space.closure_mask(s) for s in subsets]
                for s in subsets:
                    self.assertEqual(inner[s] & ~s, 0)
                    self.assertEqual(s & ~outer[s], 0)
                    self.assertIn(inner[s], space.open_index)
                    self.assertEqual(inner[inner[s]], inner[s])
                    self.assertEqual(outer[outer[s]], outer[s])
                    for t in subsets:
                        self.assertEqual(inner[s & t], inner[s] & inner[t])
                        self.assertEqual(outer[s | t], outer[s] | outer[t])

    def test_intersection_closure(self):
        space = SubsetSpace(["a", "b", "c"], [[], ["a", "b"], ["b", "c"], ["b"], ["a", "b", "c"]])
        self.assertEqual(space.intersection_closure([0b011, 0b110]), [0b010, 0b011, 0b110])

    def test_worlds(self):
        space = chain_model().space
        self.assertEqual(
            [w.label for w in space.worlds()],
            ["a@{a}", "a@{a,b}", "b@{a,b}"])
        self.assertEqual(space.world("a", ["a"]), World("a", frozenset("a")))
        with self.assertRaises(InvalidWorld):
            space.world("b", ["a"])
        with self.assertRaises(InvalidWorld):
            space.world("a", ["b"])
        with self.assertRaises(InvalidWorld):
            space.world("c", ["a", "b"])
        self.assertEqual([space.open_label(m) for m in space.down(0b11)], ["{}", "{a}", "{a,b}"])


class TestModel(unittest.TestCase):
    def test_valuation(self):
        model = chain_model()
        self.assertEqual(model.extension("A"), frozenset("a"))
        self.assertEqual(model.extension("B"), frozenset())
        with self.assertRaises(ModelError):
            Model(model.space, {"K": ["a"]})
        with self.assertRaises(ModelError):
            Model(model.space, {"A": ["z"]})

    def test_restrict(self):
        model = Model(chain_model().space, {"A": ["a"], "B": ["b"]})
        self.assertEqual(list(model.restrict(["B"]).valuation), ["B"])

    def test_json(self):
        model = chain_model()
        out = io.StringIO()
        dump_model(model, out)
        self.assertEqual(load_model(io.StringIO(out.getvalue())), model)
        self.assertEqual(model.to_json(), {
            "points": ["a", "b"],
            "opens": [[], ["a"], ["a", "b"]],
            "valuation": {"A": ["a"]},
        })

    def test_bad_json(self):
        for text in ("[", "[]", '{"points": ["a"]}', '{"points": ["a"], "opens": [["a"]], "valuation": {"A": "a"}}',
                     '{"points": ["a", "b"], "opens": [["a"]]}'):
            with self.assertRaises(ModelError, msg=text):
                load_model(io.StringIO(text))
        with self.assertRaises(ModelError):
            load_model("/nonexistent/model.json")


if __name__ == "__main__":
    unittest.main()
