from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
from typing import IO, Any

from .. import algebra, decide, frames, normalform, semantics, space, splitting
from ..errors import AlgebraError, InvariantViolation, UsageError
from ..formula import Formula, classify, format_formula, to_json
from ..parser import parse_formula

log = logging.getLogger(__name__)

COMMANDS: dict[tuple[str, ...], type[Command]] = {}

GROUPS = {
    "frame": "bimodal frames: export, condition checks, reconstruction",
    "algebra": "monadic algebras: law checks, complex algebras, evaluation",
}


def register(cls: type[Command]) -> type[Command]:
    COMMANDS[(cls.GROUP, cls.NAME) if cls.GROUP else (cls.NAME,)] = cls
    return cls


def add_parsers(subparsers: Any) -> None:
    groups: dict[str, Any] = {}
    for command in COMMANDS.values():
        if command.GROUP:
            if command.GROUP not in groups:
                group = subparsers.add_parser(command.GROUP, help=GROUPS[command.GROUP])
                groups[command.GROUP] = group.add_subparsers(dest="action", required=True, metavar="action")
            target = groups[command.GROUP]
        else:
            target = subparsers
        parser = target.add_parser(command.NAME, help=command.HELP, description=command.__doc__)
        command.add_arguments(parser)
        parser.set_defaults(handler=command)


def parse_points(text: str | None) -> list[str] | None:
    """
    Parse a comma separated list of points; the empty string is the empty set
    """
    if text is None:
        return None
    return [p.strip() for p in text.split(",") if p.strip()]


class Command:
    """
    Base class for subcommands.

    ``run`` returns the exit code: 0 when the answer is yes, 1 when it is no.
    """
    NAME: str
    GROUP: str | None = None
    HELP: str = ""
    # Whether the command takes a formula
    FORMULA: bool = False
    FORMULA_REQUIRED: bool = True

    def __init__(self, args: argparse.Namespace, out: IO[str]):
        self.args = args
        self.out = out

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--json", action="store_true", help="machine readable output")
        if cls.FORMULA:
            parser.add_argument("formula", nargs="?", help="formula to work on")
            parser.add_argument("--formula", dest="formula_option", metavar="formula",
                                help="formula to work on, as an alternative to the positional argument")
            parser.add_argument("--formula-file", metavar="file", type=Path, help="read the formula from a file")

    @staticmethod
    def add_model_argument(parser: argparse.ArgumentParser, required: bool = True) -> None:
        parser.add_argument("--model", metavar="file", required=required, help="model file (JSON)")

    @staticmethod
    def add_budget_arguments(parser: argparse.ArgumentParser, default_points: int | None = None) -> None:
        parser.add_argument("--max-points", type=int, default=default_points, metavar="n",
                            help="largest number of points of the models searched")
        parser.add_argument("--class", dest="space_class", default=decide.TOPOLOGY, choices=decide.SPACE_CLASSES,
                            help="class of spaces searched (default: %(default)s)")
        parser.add_argument("--workers", type=int, default=1, metavar="n", help="number of worker processes")
        parser.add_argument("--max-seconds", type=float, metavar="sec", help="time limit of the search")

    def budget(self) -> decide.SearchBudget:
        return decide.SearchBudget(
            self.args.max_points, self.args.space_class,
            max_seconds=self.args.max_seconds, workers=self.args.workers)

    def formula(self) -> Formula | None:
        sources = [s for s in (self.args.formula, self.args.formula_option, self.args.formula_file) if s is not None]
        if len(sources) > 1:
            raise UsageError("give the formula only once")
        if not sources:
            if self.FORMULA_REQUIRED:
                raise UsageError("a formula is required")
            return None
        if self.args.formula_file is not None:
            try:
                return parse_formula(self.args.formula_file.read_bytes())
            except OSError as e:
                raise UsageError(f"cannot read formula: {e}") from e
        return parse_formula(sources[0])

    def model(self) -> space.Model:
        return space.load_model(self.args.model)

    def write_json(self, data: Any) -> None:
        json.dump(data, self.out, sort_keys=True, indent=2)
        self.out.write("\n")

    def print(self, *args: Any) -> None:
        print(*args, file=self.out)

    def run(self) -> int:
        raise NotImplementedError(f"{self.__class__.__name__}.run not implemented")


@register
class Parse(Command):
    """
    Parse a formula and print it back in canonical form
    """
    NAME = "parse"
    HELP = "parse and pretty-print a formula"
    FORMULA = True

    def run(self) -> int:
        f = self.formula()
        if self.args.json:
            self.write_json({"formula": format_formula(f), "ast": to_json(f)})
        else:
            self.print(format_formula(f))
        return 0


@register
class Check(Command):
    """
    Evaluate a formula at one world of a model
    """
    NAME = "check"
    HELP = "evaluate a formula at a world"
    FORMULA = True

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        cls.add_model_argument(parser)
        parser.add_argument("--point", required=True, help="point of the world")
        parser.add_argument("--open", metavar="p1,p2,…",
                            help="open of the world, as comma separated points (default: all points)")

    def run(self) -> int:
        f = self.formula()
        model = self.model()
        opens = parse_points(self.args.open)
        world = model.space.world(self.args.point, model.space.points if opens is None else opens)
        value = semantics.evaluate(model, world, f)
        if self.args.json:
            self.write_json({"formula": format_formula(f), "world": world.label, "value": value})
        else:
            self.print("true" if value else "false")
        return 0 if value else 1


@register
class Valid(Command):
    """
    Check whether a formula holds at every world of a model
    """
    NAME = "valid"
    HELP = "check validity of a formula in a model"
    FORMULA = True

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        cls.add_model_argument(parser)

    def run(self) -> int:
        f = self.formula()
        res = semantics.valid_in_model(self.model(), f)
        counterexample = res.counterexample.label if res.counterexample else None
        if self.args.json:
            self.write_json({"formula": format_formula(f), "valid": res.valid, "counterexample": counterexample})
        elif res.valid:
            self.print("valid")
        else:
            self.print(f"fails at {counterexample}")
        return 0 if res.valid else 1


@register
class Classify(Command):
    """
    Report the syntactic classes of a formula, its persistence class with
    --persistence, or with --model and --atom the topological properties of
    an atom's extension
    """
    NAME = "classify"
    HELP = "syntactic, persistence or topological classification"
    FORMULA = True
    FORMULA_REQUIRED = False

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--persistence", action="store_true",
                            help="also check persistence with a bounded search")
        cls.add_model_argument(parser, required=False)
        parser.add_argument("--atom", help="atom whose extension is characterized in --model")
        cls.add_budget_arguments(parser, default_points=normalform.DEFAULT_VERIFY_BUDGET)

    def run(self) -> int:
        f = self.formula()
        res: dict[str, Any] = {}
        if f is not None:
            res["formula"] = format_formula(f)
            res.update(classify(f)._asdict())
            if self.args.persistence:
                res["persistence"] = normalform.persistence_class(f, self.budget()).kind
        if self.args.atom is not None:
            if self.args.model is None:
                raise UsageError("--atom needs --model")
            model = self.model()
            res["atom"] = self.args.atom
            res.update({
                k: v for k, v in semantics.characterize(model, self.args.atom)._asdict().items()
                if not k.endswith("_formula")})
            res["boundary"] = sorted(semantics.boundary(model, self.args.atom))
        elif f is None:
            raise UsageError("give a formula, or --model and --atom")
        if self.args.json:
            self.write_json(res)
        else:
            for k, v in res.items():
                self.print(f"{k}: {v}")
        return 0


@register
class Normalize(Command):
    """
    Rewrite a formula into a disjunction of prime normal form blocks,
    verified equivalent with a bounded search
    """
    NAME = "dnf"
    HELP = "disjunctive normal form"
    FORMULA = True

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--trace", action="store_true", help="print the rewrite steps")
        parser.add_argument("--max-blocks", type=int, metavar="n", help="limit on the number of blocks")
        cls.add_budget_arguments(parser, default_points=normalform.DEFAULT_VERIFY_BUDGET)

    def run(self) -> int:
        f = self.formula()
        dnf = normalform.to_dnf(f, self.budget(), max_blocks=self.args.max_blocks)
        if self.args.json:
            res: dict[str, Any] = {
                "formula": format_formula(f),
                "dnf": normalform.render(dnf),
                "blocks": [format_formula(b.formula) for b in dnf.blocks],
            }
            if self.args.trace:
                res["trace"] = list(dnf.trace)
            self.write_json(res)
        else:
            if self.args.trace:
                for line in dnf.trace:
                    self.print(f"# {line}")
            self.print(normalform.render(dnf))
        return 0


@register
class Decide(Command):
    """
    Search all small models for a satisfying world or, with --valid, for a
    countermodel. Answers hold up to the searched bound.
    """
    NAME = "decide"
    HELP = "bounded satisfiability and validity"
    FORMULA = True

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--valid", action="store_true", help="decide validity instead of satisfiability")
        parser.add_argument("--output", metavar="file", type=Path, help="write the witness model to this file")
        cls.add_budget_arguments(parser)

    def run(self) -> int:
        f = self.formula()
        budget = self.budget()
        if self.args.valid:
            verdict = decide.decide_valid(f, budget)
        else:
            verdict = decide.decide_sat(f, budget)
        log.info("%s: %s after %d models", format_formula(f), verdict.status, verdict.models_examined)

        if self.args.output is not None and verdict.model is not None:
            with self.args.output.open("w") as fd:
                space.dump_model(verdict.model, fd)

        if self.args.json:
            self.write_json(verdict.to_json())
        else:
            self.print(f"{verdict.status} ({verdict.caveat})")
            if verdict.model is not None and verdict.world is not None:
                self.print(f"world: {verdict.world.label}")
                if not verdict.canonical:
                    self.print("note: time ran out, a smaller witness may exist")
                space.dump_model(verdict.model, self.out)

        match verdict.status:
            case decide.Verdict.SATISFIABLE | decide.Verdict.VALID:
                return 0
            case decide.Verdict.BUDGET_EXHAUSTED:
                return 4
            case _:
                return 1


@register
class Split(Command):
    """
    Build stable splittings for a formula on a topological model and report
    the remainder classes of its family
    """
    NAME = "split"
    HELP = "stable splittings of a formula"
    FORMULA = True

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        cls.add_model_argument(parser)

    def run(self) -> int:
        f = self.formula()
        res = splitting.build_stable_splittings(self.model(), f)
        res.check()
        report = res.to_json()
        if self.args.json:
            self.write_json(report)
        else:
            self.print(f"family: {' '.join(report['family'])}")
            for cls in report["classes"]:
                self.print(f"{cls['representative']}: {' '.join(cls['members'])}")
        return 0


class Reduce(Command):
    FORMULA = True

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        cls.add_model_argument(parser)
        parser.add_argument("--output", metavar="file", type=Path, help="write the reduced model to this file")

    def reduce(self, model: space.Model, f: Formula | None) -> tuple[space.Model, dict[space.World, space.World]]:
        if f is None:
            quotient = splitting.quotient_points(model)
            return quotient.model, quotient.world_map
        finitized = splitting.finitize(model, f)
        return finitized.model, finitized.world_map

    def check_fidelity(self, model: space.Model, reduced: space.Model,
                       world_map: dict[space.World, space.World], f: Formula | None) -> None:
        if f is None:
            return
        for world, image in world_map.items():
            if semantics.evaluate(model, world, f) != semantics.evaluate(reduced, image, f):
                raise InvariantViolation(f"{format_formula(f)} changes value between {world.label} and {image.label}")

    def run(self) -> int:
        f = self.formula()
        model = self.model()
        reduced, world_map = self.reduce(model, f)
        self.check_fidelity(model, reduced, world_map, f)
        if self.args.output is not None:
            with self.args.output.open("w") as fd:
                space.dump_model(reduced, fd)
        world_labels = {w.label: image.label for w, image in world_map.items()}
        if self.args.json:
            self.write_json({"model": reduced.to_json(), "world_map": world_labels})
        else:
            space.dump_model(reduced, self.out)
            for src, dst in world_labels.items():
                self.print(f"{src} -> {dst}")
        return 0


@register
class Quotient(Reduce):
    """
    Merge indistinguishable points of a model; with --formula, finitize the
    model for that formula first
    """
    NAME = "quotient"
    HELP = "quotient a model"
    FORMULA_REQUIRED = False


@register
class Finitize(Reduce):
    """
    Shrink a topological model to a finite one equivalent for a formula
    """
    NAME = "finitize"
    HELP = "finite model equivalent for a formula"


@register
class FrameExport(Command):
    """
    Write the subset frame of a model
    """
    GROUP = "frame"
    NAME = "export"
    HELP = "subset frame of a model"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        cls.add_model_argument(parser)

    def run(self) -> int:
        frames.dump_frame(frames.subset_frame(self.model()).frame, self.out)
        return 0


class FrameCommand(Command):
    GROUP = "frame"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--frame", metavar="file", required=True, help="frame file (JSON)")

    def frame(self) -> frames.BimodalFrame:
        return frames.load_frame(self.args.frame)


@register
class FrameCheck(FrameCommand):
    """
    Check the conditions characterizing subset frames of topologies
    """
    NAME = "check"
    HELP = "check the frame conditions"

    def run(self) -> int:
        report = frames.check_conditions(self.frame())
        if self.args.json:
            self.write_json(report.to_json())
        else:
            for c in report.conditions.values():
                match c.holds:
                    case True:
                        status = "holds"
                    case False:
                        status = "fails"
                    case _:
                        status = "not evaluated"
                witness = f" ({', '.join(c.witness)})" if c.witness else ""
                self.print(f"{c.number}. {c.description}: {status}{witness}")
        if report.failed():
            return 1
        if report.not_evaluated():
            return 4
        return 0


@register
class FrameToSpace(FrameCommand):
    """
    Rebuild the subset space whose subset frame is the given frame
    """
    NAME = "to-space"
    HELP = "rebuild a space from a frame"

    def run(self) -> int:
        res = frames.frame_to_space(self.frame())
        model = space.Model(res.space)
        world_labels = {name: w.label for name, w in res.world_map.items()}
        if self.args.json:
            self.write_json({"model": model.to_json(), "world_map": world_labels})
        else:
            space.dump_model(model, self.out)
            for src, dst in world_labels.items():
                self.print(f"{src} -> {dst}")
        return 0


@register
class AlgebraCheck(Command):
    """
    Check the monadic algebra laws
    """
    GROUP = "algebra"
    NAME = "check"
    HELP = "check the algebra laws"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--algebra", metavar="file", required=True, help="algebra file (JSON)")

    def run(self) -> int:
        alg = algebra.load_algebra(self.args.algebra)
        fma = algebra.check_fma(alg)
        gma = fma and algebra.check_gma(alg)
        if self.args.json:
            self.write_json({"fma": fma, "gma": gma})
        else:
            self.print(f"fma: {fma}")
            self.print(f"gma: {gma}")
        return 0 if gma else 1


@register
class AlgebraFromModel(Command):
    """
    Write the complex algebra of a model's subset frame
    """
    GROUP = "algebra"
    NAME = "from-model"
    HELP = "complex algebra of a model"

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        cls.add_model_argument(parser)

    def run(self) -> int:
        complex_alg = algebra.complex_algebra(self.model())
        algebra.dump_algebra(complex_alg.algebra, self.out)
        return 0


@register
class AlgebraEval(Command):
    """
    Evaluate a formula in an algebra. Atoms take their values from
    --valuation, or from --model using its complex algebra.
    """
    GROUP = "algebra"
    NAME = "eval"
    HELP = "evaluate a formula in an algebra"
    FORMULA = True

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--algebra", metavar="file", help="algebra file (JSON)")
        parser.add_argument("--valuation", metavar="file", type=Path,
                            help="JSON object mapping atoms to elements of the algebra")
        cls.add_model_argument(parser, required=False)

    def load_valuation(self) -> dict[str, int]:
        if self.args.valuation is None:
            return {}
        try:
            data = json.loads(self.args.valuation.read_text())
        except OSError as e:
            raise AlgebraError(f"cannot read valuation: {e}") from e
        except json.JSONDecodeError as e:
            raise AlgebraError(f"valuation file is not valid JSON: {e}") from e
        if not isinstance(data, dict) or not all(isinstance(v, int) for v in data.values()):
            raise AlgebraError("a valuation must map atom names to integers")
        return data

    def run(self) -> int:
        f = self.formula()
        if (self.args.algebra is None) == (self.args.model is None):
            raise UsageError("give exactly one of --algebra and --model")
        if self.args.model is not None:
            model = self.model()
            complex_alg = algebra.complex_algebra(model)
            alg = complex_alg.algebra
            valuation = algebra.natural_valuation(model, complex_alg.worlds)
            valuation.update(self.load_valuation())
        else:
            alg = algebra.load_algebra(self.args.algebra)
            valuation = self.load_valuation()
        value = algebra.alg_eval(alg, valuation, f)
        if self.args.json:
            self.write_json({"formula": format_formula(f), "value": value, "top": value == alg.full})
        else:
            self.print(value)
        return 0 if value == alg.full else 1
