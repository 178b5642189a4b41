from __future__ import annotations

import io
import json
import tempfile
import unittest
from pathlib import Path

from topologic.cli.topologic import run
from topologic.space import Model, dump_model, load_model

from .utils import chain_model, interval_replica, nested_chain


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.workdir = tempfile.TemporaryDirectory()
        self.addCleanup(self.workdir.cleanup)
        self.path = Path(self.workdir.name)

    def write_model(self, name: str, model: Model) -> str:
        path = self.path / name
        with path.open("w") as fd:
            dump_model(model, fd)
        return str(path)

    def write_text(self, name: str, text: str) -> str:
        path = self.path / name
        path.write_text(text)
        return str(path)

    def run_cli(self, *argv: str) -> tuple[int, str, str]:
        out = io.StringIO()
        err = io.StringIO()
        code = run(list(argv), out=out, err=err)
        return code, out.getvalue(), err.getvalue()


class TestFormulaCommands(CliTestCase):
    def test_parse(self):
        self.assertEqual(self.run_cli("parse", "K A->A"), (0, "K A -> A\n", ""))
        code, out, err = self.run_cli("parse", "--json", "--formula", "<> K A")
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(data["formula"], "<> K A")
        self.assertEqual(data["ast"]["op"], "dia")

    def test_parse_file(self):
        path = self.write_text("f.txt", "[] (A | B)\n")
        self.assertEqual(self.run_cli("parse", "--formula-file", path), (0, "[] (A | B)\n", ""))

    def test_syntax_error(self):
        code, out, err = self.run_cli("parse", "A &")
        self.assertEqual(code, 2)
        self.assertEqual(out, "")
        self.assertIn("syntax error at byte 3", err)

    def test_formula_given_twice(self):
        code, out, err = self.run_cli("parse", "A", "--formula", "B")
        self.assertEqual(code, 2)
        self.assertIn("only once", err)

    def test_missing_formula(self):
        self.assertEqual(self.run_cli("parse")[0], 2)

    def test_classify(self):
        code, out, err = self.run_cli("classify", "--json", "<> K A")
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(data["formula"], "<> K A")
        self.assertEqual(data["modal_depth"], 2)
        self.assertNotIn("persistence", data)

    def test_classify_atom(self):
        model = self.write_model("chain.json", chain_model())
        code, out, err = self.run_cli("classify", "--json", "--model", model, "--atom", "A")
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(data["boundary"], ["b"])
        self.assertEqual(data["atom"], "A")
        self.assertEqual(self.run_cli("classify", "--atom", "A")[0], 2)
        self.assertEqual(self.run_cli("classify")[0], 2)

    def test_dnf(self):
        code, out, err = self.run_cli("dnf", "--trace", "K A | K B")
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertTrue(all(line.startswith("# ") for line in lines[:-1]))
        self.assertEqual(lines[-1], "K A | K B")

    def test_dnf_too_many_blocks(self):
        self.assertEqual(self.run_cli("dnf", "--max-blocks", "1", "K A | K B | L A")[0], 4)


class TestModelCommands(CliTestCase):
    def test_valid(self):
        model = self.write_model("chain.json", chain_model())
        self.assertEqual(self.run_cli("valid", "--model", model, "K A -> A"), (0, "valid\n", ""))
        self.assertEqual(self.run_cli("valid", "--model", model, "A -> K A"), (1, "fails at a@{a,b}\n", ""))

    def test_check(self):
        model = self.write_model("chain.json", chain_model())
        self.assertEqual(
            self.run_cli("check", "--model", model, "--point", "a", "--open", "a", "K A"), (0, "true\n", ""))
        self.assertEqual(self.run_cli("check", "--model", model, "--point", "a", "K A"), (1, "false\n", ""))
        code, out, err = self.run_cli("check", "--model", model, "--point", "b", "--open", "a", "K A")
        self.assertEqual(code, 3)
        self.assertIn("not in", err)

    def test_bad_model(self):
        path = self.write_text("bad.json", "{")
        self.assertEqual(self.run_cli("valid", "--model", path, "A")[0], 3)
        path = self.write_text("notopen.json", json.dumps({"points": ["a"], "opens": [[]]}))
        self.assertEqual(self.run_cli("valid", "--model", path, "A")[0], 3)
        self.assertEqual(self.run_cli("valid", "--model", str(self.path / "missing.json"), "A")[0], 3)

    def test_split(self):
        model = self.write_model("chain.json", chain_model())
        code, out, err = self.run_cli("split", "--json", "--model", model, "<> K A")
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertIn("family", data)
        self.assertIn("classes", data)

    def test_quotient(self):
        model = self.write_model("interval.json", interval_replica())
        output = self.path / "quotient.json"
        code, out, err = self.run_cli("quotient", "--json", "--model", model, "--output", str(output))
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(data["model"]["points"], ["x1", "x2"])
        self.assertEqual(data["world_map"]["p1@{p0,p1,p2}"], "x2@{x1,x2}")
        self.assertEqual(load_model(output).space.points, ("x1", "x2"))

    def test_quotient_formula(self):
        model = self.write_model("chain5.json", nested_chain(5))
        code, out, err = self.run_cli("quotient", "--json", "--model", model, "--formula", "<> K A")
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(data["model"]["points"], ["x1", "x2"])
        self.assertEqual(len(data["model"]["opens"]), 3)

    def test_finitize(self):
        model = self.write_model("chain5.json", nested_chain(5))
        code, out, err = self.run_cli("finitize", "--model", model, "top")
        self.assertEqual(code, 0)
        self.assertIn("p4@{p0,p1,p2,p3,p4} -> x1@{x1}", out.splitlines())


class TestDecide(CliTestCase):
    def test_countermodel(self):
        output = self.path / "counter.json"
        code, out, err = self.run_cli("decide", "--valid", "--max-points", "3", "--output", str(output), "A -> K A")
        self.assertEqual(code, 1)
        self.assertTrue(out.startswith("countermodel"))
        model = load_model(output)
        self.assertEqual(len(model.space.points), 2)

    def test_valid(self):
        code, out, err = self.run_cli("decide", "--valid", "--max-points", "2", "K [] A -> [] K A")
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith("valid-up-to-bound"))

    def test_unsat(self):
        code, out, err = self.run_cli("decide", "--json", "--max-points", "2", "A & ~A")
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(out)["status"], "unsat-up-to-bound")

    def test_budget(self):
        code, out, err = self.run_cli("decide", "--max-seconds", "0", "--max-points", "3", "A & ~A")
        self.assertEqual(code, 4)
        self.assertTrue(out.startswith("budget-exhausted"))

    def test_bad_budget(self):
        self.assertEqual(self.run_cli("decide", "--max-points", "9", "A")[0], 2)


class TestFrameCommands(CliTestCase):
    def test_round_trip(self):
        model = self.write_model("chain.json", chain_model())
        code, frame_json, err = self.run_cli("frame", "export", "--model", model)
        self.assertEqual(code, 0)
        frame = self.write_text("frame.json", frame_json)

        code, out, err = self.run_cli("frame", "check", "--frame", frame)
        self.assertEqual(code, 0)
        self.assertEqual(len(out.splitlines()), 8)

        code, out, err = self.run_cli("frame", "to-space", "--json", "--frame", frame)
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(data["model"]["points"], ["a@{a}", "b@{a,b}"])
        self.assertEqual(data["world_map"]["a@{a,b}"], "a@{a}@{a@{a},b@{a,b}}")

    def test_failing_frame(self):
        frame = self.write_text("frame.json", json.dumps({
            "worlds": ["u", "v", "w"],
            "r_effort": [["u", "u"], ["v", "v"], ["w", "w"], ["u", "v"], ["v", "w"]],
            "r_knowledge": [["u", "u"], ["v", "v"], ["w", "w"]],
        }))
        code, out, err = self.run_cli("frame", "check", "--frame", frame)
        self.assertEqual(code, 1)
        self.assertIn("1. effort is reflexive and transitive: fails (u, v, w)", out.splitlines())
        self.assertEqual(self.run_cli("frame", "to-space", "--frame", frame)[0], 3)

    def test_malformed_pair(self):
        frame = self.write_text("frame.json", json.dumps({"worlds": ["a", "b"], "r_effort": [1], "r_knowledge": []}))
        code, out, err = self.run_cli("frame", "check", "--frame", frame)
        self.assertEqual(code, 3)
        self.assertIn("is not a pair", err)


class TestAlgebraCommands(CliTestCase):
    def test_from_model(self):
        model = self.write_model("chain.json", chain_model())
        code, alg_json, err = self.run_cli("algebra", "from-model", "--model", model)
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(alg_json)["interior"], [0, 1, 0, 3, 4, 5, 4, 7])
        alg = self.write_text("alg.json", alg_json)

        self.assertEqual(self.run_cli("algebra", "check", "--algebra", alg), (0, "fma: True\ngma: True\n", ""))

        valuation = self.write_text("val.json", json.dumps({"A": 3}))
        self.assertEqual(
            self.run_cli("algebra", "eval", "--algebra", alg, "--valuation", valuation, "K [] A -> [] K A"),
            (0, "7\n", ""))
        self.assertEqual(self.run_cli("algebra", "eval", "--algebra", alg, "--valuation", valuation, "A"),
                         (1, "3\n", ""))

        valuation = self.write_text("bad.json", json.dumps({"A": 2}))
        self.assertEqual(self.run_cli("algebra", "eval", "--algebra", alg, "--valuation", valuation, "A")[0], 3)

    def test_eval_model(self):
        model = self.write_model("chain.json", chain_model())
        self.assertEqual(self.run_cli("algebra", "eval", "--model", model, "A -> <> K A"), (0, "7\n", ""))
        self.assertEqual(self.run_cli("algebra", "eval", "--model", model, "A -> K A"), (1, "5\n", ""))
        self.assertEqual(self.run_cli("algebra", "eval", "A")[0], 2)

    def test_not_gma(self):
        alg = self.write_text("alg.json", json.dumps({"atoms": 1, "interior": [1, 1], "forall": [0, 1]}))
        self.assertEqual(self.run_cli("algebra", "check", "--algebra", alg), (1, "fma: False\ngma: False\n", ""))


if __name__ == "__main__":
    unittest.main()
