from __future__ import annotations

import argparse
import logging
import sys
from typing import IO, Sequence

from .. import __version__
from ..errors import FormulaSyntaxError, TopologicError
from .commands import add_parsers

log = logging.getLogger(__name__)


class App:
    """
    Command line front-end: parse arguments, set up logging, run one command
    and turn errors into exit codes
    """

    def __init__(self, args: argparse.Namespace, *, out: IO[str] | None = None, err: IO[str] | None = None):
        self.args = args
        self.out = out or sys.stdout
        self.err = err or sys.stderr
        self.setup_logging()

    @classmethod
    def argparser(cls, name: str = "topologic", description: str | None = None) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog=name, description=description)
        parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        parser.add_argument("-v", "--verbose", action="store_true", help="verbose output")
        parser.add_argument("--debug", action="store_true", help="debug output")
        subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
        add_parsers(subparsers)
        return parser

    def setup_logging(self):
        FORMAT = "%(asctime)-15s %(levelname)s %(name)s %(message)s"
        if self.args.debug:
            level = logging.DEBUG
        elif self.args.verbose:
            level = logging.INFO
        else:
            level = logging.WARNING
        logging.basicConfig(level=level, stream=self.err, format=FORMAT, force=True)

    def __enter__(self) -> App:
        return self

    def __exit__(self, exc_type, exc_value, tb):
        self.out.flush()

    def main(self) -> int:
        command = self.args.handler(self.args, self.out)
        try:
            return command.run()
        except FormulaSyntaxError as e:
            print(f"{self.args.command}: {e}", file=self.err)
            if e.text:
                print(f"  {e.text}", file=self.err)
            return e.exit_code
        except TopologicError as e:
            log.debug("%s failed", self.args.command, exc_info=True)
            print(f"{self.args.command}: {e}", file=self.err)
            return e.exit_code


def run(argv: Sequence[str] | None = None, *, out: IO[str] | None = None, err: IO[str] | None = None) -> int:
    parser = App.argparser(description="Reason about knowledge and effort on subset spaces")
    args = parser.parse_args(argv)
    with App(args, out=out, err=err) as app:
        return app.main()


def main():
    return run()


if __name__ == "__main__":
    sys.exit(main())
