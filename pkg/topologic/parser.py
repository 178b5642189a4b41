from __future__ import annotations

import functools
import logging

from lark import Lark, Token, Transformer
from lark.exceptions import UnexpectedCharacters, UnexpectedInput

from .errors import FormulaSyntaxError
from .formula import BOT, TOP, And, Atom, Box, Dia, Formula, Iff, Implies, K, L, Not, Or

log = logging.getLogger(__name__)

GRAMMAR = r"""
?start: iff_expr

?iff_expr: imp_expr
    | iff_expr _IFF imp_expr -> iff

?imp_expr: or_expr
    | or_expr _IMP imp_expr -> implies

?or_expr: and_expr
    | or_expr _OR and_expr -> or_

?and_expr: unary
    | and_expr _AND unary -> and_

?unary: primary
    | _NOT unary -> not_
    | _BOX unary -> box
    | _DIA unary -> dia
    | _KNOW unary -> know
    | _POSS unary -> poss

?primary: IDENT -> atom
    | _TOP -> top
    | _BOT -> bot
    | _LPAR iff_expr _RPAR

_NOT: "~"
_BOX: "[]"
_DIA: "<>"
_KNOW: "K"
_POSS: "L"
_TOP: "top"
_BOT: "bot"
_AND: "&"
_OR: "|"
_IMP: "->"
_IFF: "<->"
_LPAR: "("
_RPAR: ")"
IDENT: /[A-Za-z_][A-Za-z0-9_]*/

%import common.WS
%ignore WS
"""

# Tokens after which a modal prefix cannot be followed by its operand
OPERAND_MISSING = frozenset(("_AND", "_OR", "_IMP", "_IFF", "_RPAR"))


class ToFormula(Transformer):
    """
    Turn the lark parse tree into Formula objects
    """

    def atom(self, items: list[Token]) -> Formula:
        return Atom(str(items[0]))

    def top(self, items) -> Formula:
        return TOP

    def bot(self, items) -> Formula:
        return BOT

    def not_(self, items: list[Formula]) -> Formula:
        return Not(items[0])

    def box(self, items: list[Formula]) -> Formula:
        return Box(items[0])

    def dia(self, items: list[Formula]) -> Formula:
        return Dia(items[0])

    def know(self, items: list[Formula]) -> Formula:
        return K(items[0])

    def poss(self, items: list[Formula]) -> Formula:
        return L(items[0])

    def and_(self, items: list[Formula]) -> Formula:
        return And(items[0], items[1])

    def or_(self, items: list[Formula]) -> Formula:
        return Or(items[0], items[1])

    def implies(self, items: list[Formula]) -> Formula:
        return Implies(items[0], items[1])

    def iff(self, items: list[Formula]) -> Formula:
        return Iff(items[0], items[1])


class FormulaParser:
    """
    Parser for the concrete formula grammar.

    Errors are reported as FormulaSyntaxError with a byte offset into the
    UTF-8 encoding of the input.
    """

    def __init__(self):
        self.lark = Lark(GRAMMAR, parser="lalr", lexer="basic")
        self.transformer = ToFormula()

    def parse(self, text: str | bytes) -> Formula:
        if isinstance(text, bytes):
            try:
                text = text.decode()
            except UnicodeDecodeError as e:
                raise FormulaSyntaxError("input is not valid UTF-8", kind="lexical", offset=e.start) from e

        tokens = self.tokenize(text)
        self.check_parentheses(text, tokens)
        self.check_reserved(text, tokens)

        try:
            tree = self.lark.parse(text)
        except UnexpectedInput as e:
            pos = e.pos_in_stream
            # Premature end of input is reported at the end of the text
            token = getattr(e, "token", None)
            if pos is None or pos < 0 or getattr(token, "type", None) == "$END":
                pos = len(text)
            raise FormulaSyntaxError(
                "unexpected input", kind="syntax", offset=self.byte_offset(text, pos), text=text
            ) from e
        return self.transformer.transform(tree)

    def tokenize(self, text: str) -> list[Token]:
        try:
            return list(self.lark.lex(text))
        except UnexpectedCharacters as e:
            raise FormulaSyntaxError(
                f"unexpected character {text[e.pos_in_stream]!r}",
                kind="lexical",
                offset=self.byte_offset(text, e.pos_in_stream),
                text=text,
            ) from e

    def check_parentheses(self, text: str, tokens: list[Token]) -> None:
        opened: list[Token] = []
        for tok in tokens:
            if tok.type == "_LPAR":
                opened.append(tok)
            elif tok.type == "_RPAR":
                if not opened:
                    raise FormulaSyntaxError(
                        "unmatched ')'", kind="parenthesis", offset=self.byte_offset(text, tok.start_pos), text=text
                    )
                opened.pop()
        if opened:
            raise FormulaSyntaxError(
                "unclosed '('", kind="parenthesis", offset=self.byte_offset(text, opened[-1].start_pos), text=text
            )

    def check_reserved(self, text: str, tokens: list[Token]) -> None:
        """
        Report K or L used where an atom would have to be, like in ``K -> A``
        """
        for tok, following in zip(tokens, tokens[1:] + [None]):
            if tok.type not in ("_KNOW", "_POSS"):
                continue
            if following is None or following.type in OPERAND_MISSING:
                raise FormulaSyntaxError(
                    f"reserved word {str(tok)!r} used as an atom",
                    kind="reserved",
                    offset=self.byte_offset(text, tok.start_pos),
                    text=text,
                )

    @staticmethod
    def byte_offset(text: str, pos: int) -> int:
        return len(text[:pos].encode())


@functools.cache
def get_parser() -> FormulaParser:
    return FormulaParser()


def parse_formula(text: str | bytes) -> Formula:
    return get_parser().parse(text)
