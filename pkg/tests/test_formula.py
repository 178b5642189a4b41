from __future__ import annotations

import random
import unittest

from topologic.errors import FormulaSyntaxError
from topologic.formula import (BOT, TOP, And, Atom, Box, Dia, Iff, Implies, K, L, Not, Or, classify, conj, desugar,
                               disj, format_formula, in_l_prime, is_dnf, is_pnf, l_prime_formulas, modal_depth,
                               parse, random_formula, subformulas, to_json)

A = Atom("A")
B = Atom("B")


class TestParse(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(parse("K A -> A"), Implies(K(A), A))
        self.assertEqual(parse("<> K p & L q"), And(Dia(K(Atom("p"))), L(Atom("q"))))
        self.assertEqual(parse("[] L I1 -> I1"), Implies(Box(L(Atom("I1"))), Atom("I1")))

    def test_precedence(self):
        self.assertEqual(parse("A & B | A"), Or(And(A, B), A))
        self.assertEqual(parse("A -> B -> A"), Implies(A, Implies(B, A)))
        self.assertEqual(parse("A <-> B <-> A"), Iff(Iff(A, B), A))
        self.assertEqual(parse("A | B -> A & B"), Implies(Or(A, B), And(A, B)))
        self.assertEqual(parse("~A & B"), And(Not(A), B))
        self.assertEqual(parse("~(A & B)"), Not(And(A, B)))
        self.assertEqual(parse("a & b & c"), And(And(Atom("a"), Atom("b")), Atom("c")))

    def test_constants(self):
        self.assertEqual(parse("top"), TOP)
        self.assertEqual(parse("bot -> top"), Implies(BOT, TOP))
        # Identifiers that only start with a reserved word are atoms
        self.assertEqual(parse("Kx & topic"), And(Atom("Kx"), Atom("topic")))

    def test_bytes(self):
        self.assertEqual(parse(b"K A"), K(A))

    def assertSyntaxError(self, text: str, kind: str, offset: int):
        with self.assertRaises(FormulaSyntaxError) as e:
            parse(text)
        self.assertEqual(e.exception.kind, kind)
        self.assertEqual(e.exception.offset, offset)

    def test_errors(self):
        self.assertSyntaxError("A $ B", "lexical", 2)
        self.assertSyntaxError("(A & B", "parenthesis", 0)
        self.assertSyntaxError("A & B)", "parenthesis", 5)
        self.assertSyntaxError("K -> A", "reserved", 0)
        self.assertSyntaxError("A & L", "reserved", 4)
        self.assertSyntaxError("A &", "syntax", 3)
        self.assertSyntaxError("", "syntax", 0)

    def test_byte_offsets(self):
        # "é" takes two bytes in UTF-8
        self.assertSyntaxError("é", "lexical", 0)
        self.assertSyntaxError("(é", "lexical", 1)
        self.assertSyntaxError("A & (B $", "lexical", 7)

    def test_atom_names(self):
        for name in ("K", "L", "top", "bot", "", "1a", "a-b"):
            with self.assertRaises(ValueError):
                Atom(name)


class TestPrint(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(str(Implies(K(A), A)), "K A -> A")
        self.assertEqual(str(And(Atom("a"), And(Atom("b"), Atom("c")))), "a & (b & c)")
        self.assertEqual(str(And(And(Atom("a"), Atom("b")), Atom("c"))), "a & b & c")
        self.assertEqual(str(Dia(K(A))), "<> K A")
        self.assertEqual(str(Not(Not(A))), "~~A")
        self.assertEqual(str(Box(Or(A, B))), "[] (A | B)")
        self.assertEqual(format_formula(Implies(Implies(A, B), A)), "(A -> B) -> A")

    def test_round_trip_random(self):
        rng = random.Random(1)
        for _ in range(200):
            f = random_formula(rng, ["A", "B"], 4)
            self.assertEqual(parse(format_formula(f)), f)


class TestStructure(unittest.TestCase):
    def test_desugar(self):
        self.assertEqual(desugar(Dia(K(A))), Not(Box(Not(K(A)))))
        self.assertEqual(desugar(L(A)), Not(K(Not(A))))
        self.assertEqual(desugar(Or(A, B)), Not(And(Not(A), Not(B))))
        self.assertEqual(desugar(Implies(A, B)), Not(And(A, Not(B))))

    def test_subformulas(self):
        self.assertEqual(subformulas(A), (A,))
        self.assertEqual(subformulas(K(And(A, B))), (A, B, And(A, B), K(And(A, B))))
        self.assertEqual(
            subformulas(Dia(K(A))),
            (A, K(A), Not(K(A)), Box(Not(K(A))), Not(Box(Not(K(A))))))
        # Shared subformulas appear once
        self.assertEqual(subformulas(And(A, A)), (A, And(A, A)))

    def test_atoms_depth(self):
        f = parse("K (A & <> B) | C")
        self.assertEqual(f.atoms(), frozenset(("A", "B", "C")))
        self.assertEqual(f.depth(), 4)
        self.assertEqual(modal_depth(f), 2)
        self.assertEqual(A.depth(), 0)

    def test_conj_disj(self):
        self.assertEqual(conj([]), TOP)
        self.assertEqual(disj([]), BOT)
        self.assertEqual(conj([A, B, A]), And(And(A, B), A))
        self.assertEqual(disj([A]), A)

    def test_to_json(self):
        self.assertEqual(to_json(K(A)), {"op": "k", "args": [{"atom": "A"}]})
        self.assertEqual(to_json(TOP), {"op": "top"})


class TestClassify(unittest.TestCase):
    def test_examples(self):
        self.assertTrue(classify(parse("A & ~B")).in_L_prime)
        self.assertTrue(classify(parse("<> K (A & <> K B)")).in_L_prime)
        c = classify(parse("K (<> K A)"))
        self.assertTrue(c.in_L_double_prime)
        self.assertFalse(c.in_L_prime)
        self.assertEqual(c.modal_depth, 3)
        self.assertEqual(classify(parse("A & ~B")).modal_depth, 0)

    def test_not_l_prime(self):
        for text in ("K A", "L A", "[] A", "<> A", "A | B", "<> L A", "K <> K A -> A"):
            self.assertFalse(in_l_prime(parse(text)), text)

    def test_closure(self):
        for f in l_prime_formulas(["A", "B"], 2):
            self.assertTrue(in_l_prime(f))
            self.assertTrue(classify(Not(f)).in_L_prime)
            self.assertTrue(classify(Dia(K(f))).in_L_prime)

    def test_pnf(self):
        self.assertTrue(is_pnf(parse("A & K B & L A & L ~B")))
        self.assertFalse(is_pnf(parse("K A & K B")))
        self.assertFalse(is_pnf(parse("K L A")))
        self.assertTrue(is_dnf(parse("K A | K B")))
        self.assertTrue(is_dnf(parse("A")))
        self.assertFalse(is_dnf(parse("K (A | B)")))


if __name__ == "__main__":
    unittest.main()
