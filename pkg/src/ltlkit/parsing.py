"""Parsing and printing of the two surface syntaxes.

Infix syntax has precedence ``!`` (and the unary temporal operators) over
``U`` over ``&`` over ``|``, with ``U`` associating to the right and
parentheses overriding.  Prefix syntax is Polish notation with
space-separated tokens, e.g. ``F & | B Y F C``.

``X`` and ``R`` are recognised as operator names and rejected: the grammar
has no Next operator, and Release is internal to negation normal form.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formulas import And, Atom, Finally, Formula, Globally, Not, Or, Release, Until

SYNTAXES = ("infix", "prefix", "auto")

_UNSUPPORTED_OPS = {"X", "R"}
_PREFIX_BINARY = {"&": And, "|": Or, "U": Until}
_PREFIX_UNARY = {"!": Not, "F": Finally, "G": Globally}


class ParseError(ValueError):
    """Surface-syntax error, carrying a byte offset and the expected tokens."""

    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        detail = f"syntax error at byte {offset}: {message}"
        if expected:
            detail += " (expected " + ", ".join(sorted(expected)) + ")"
        super().__init__(detail)
        self.offset = offset
        self.expected = expected


class UnknownOperatorError(ParseError):
    """An operator token outside the grammar, such as X or R."""

    def __init__(self, token: str, offset: int):
        ParseError.__init__(
            self, f"operator {token!r} is not part of the grammar", offset
        )
        self.token = token


class InternalOperatorError(ValueError):
    """Raised when printing a formula containing the internal Release node."""


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident", "op", "lparen", "rparen", "end"
    text: str
    offset: int  # byte offset into the source


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def _is_ident_start(c: str) -> bool:
    # The atom grammar is ASCII-only; unicode letters are not identifiers.
    return "a" <= c <= "z" or "A" <= c <= "Z" or c == "_"


def _is_ident_char(c: str) -> bool:
    return _is_ident_start(c) or "0" <= c <= "9"


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        off = _byte_offset(text, i)
        if c == "(":
            tokens.append(_Token("lparen", c, off))
            i += 1
        elif c == ")":
            tokens.append(_Token("rparen", c, off))
            i += 1
        elif c in "&|!":
            tokens.append(_Token("op", c, off))
            i += 1
        elif _is_ident_start(c):
            j = i
            while j < n and _is_ident_char(text[j]):
                j += 1
            word = text[i:j]
            if word in _UNSUPPORTED_OPS:
                raise UnknownOperatorError(word, off)
            kind = "op" if word in ("F", "G", "U") else "ident"
            tokens.append(_Token(kind, word, off))
            i = j
        else:
            raise ParseError(f"unexpected character {c!r}", off)
    tokens.append(_Token("end", "", _byte_offset(text, n)))
    return tokens


class _InfixParser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self) -> Formula:
        f = self.parse_or()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(
                f"unexpected {tok.text!r} after a complete formula",
                tok.offset,
                frozenset({"'&'", "'|'", "'U'", "end of input"}),
            )
        return f

    def parse_or(self) -> Formula:
        f = self.parse_and()
        while self.peek().text == "|":
            self.advance()
            f = Or(f, self.parse_and())
        return f

    def parse_and(self) -> Formula:
        f = self.parse_until()
        while self.peek().text == "&":
            self.advance()
            f = And(f, self.parse_until())
        return f

    def parse_until(self) -> Formula:
        f = self.parse_unary()
        if self.peek().text == "U":
            self.advance()
            return Until(f, self.parse_until())
        return f

    def parse_unary(self) -> Formula:
        tok = self.peek()
        if tok.text == "!":
            self.advance()
            return Not(self.parse_unary())
        if tok.text == "F":
            self.advance()
            return Finally(self.parse_unary())
        if tok.text == "G":
            self.advance()
            return Globally(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Formula:
        tok = self.advance()
        if tok.kind == "ident":
            return Atom(tok.text)
        if tok.kind == "lparen":
            f = self.parse_or()
            closing = self.advance()
            if closing.kind != "rparen":
                raise ParseError(
                    f"unbalanced parenthesis, found {closing.text!r}",
                    closing.offset,
                    frozenset({"')'"}),
                )
            return f
        raise ParseError(
            "end of input" if tok.kind == "end" else f"unexpected {tok.text!r}",
            tok.offset,
            frozenset({"atom", "'('", "'!'", "'F'", "'G'"}),
        )


def _parse_prefix(tokens: list[_Token]) -> Formula:
    pos = 0

    def parse_one() -> Formula:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok.kind == "ident":
            return Atom(tok.text)
        if tok.kind == "op":
            ctor = _PREFIX_UNARY.get(tok.text)
            if ctor is not None:
                return ctor(parse_one())
            binary = _PREFIX_BINARY[tok.text]
            left = parse_one()
            return binary(left, parse_one())
        raise ParseError(
            "end of input" if tok.kind == "end" else f"unexpected {tok.text!r}",
            tok.offset,
            frozenset({"atom", "operator"}),
        )

    f = parse_one()
    trailing = tokens[pos]
    if trailing.kind != "end":
        raise ParseError(
            f"trailing token {trailing.text!r} after a complete formula",
            trailing.offset,
            frozenset({"end of input"}),
        )
    return f


def parse(text: str, syntax: str = "auto") -> Formula:
    """Parse a formula in the given surface syntax.

    With ``auto``, infix is tried first and prefix second; if both fail the
    infix error is reported.
    """
    if syntax not in SYNTAXES:
        raise ValueError(f"unknown syntax {syntax!r}, expected one of {SYNTAXES}")
    tokens = _tokenize(text)
    if syntax == "infix":
        return _InfixParser(tokens).parse()
    if syntax == "prefix":
        return _parse_prefix(tokens)
    try:
        return _InfixParser(tokens).parse()
    except ParseError as infix_error:
        try:
            return _parse_prefix(tokens)
        except ParseError:
            raise infix_error from None


# Precedence levels used for minimal parenthesisation.  F and G always
# wrap their operand in parentheses, which makes them self-delimiting.
_LEVEL_OR = 1
_LEVEL_AND = 2
_LEVEL_UNTIL = 3
_LEVEL_NOT = 4
_LEVEL_TIGHT = 5


def _level(f: Formula) -> int:
    if isinstance(f, Or):
        return _LEVEL_OR
    if isinstance(f, And):
        return _LEVEL_AND
    if isinstance(f, Until):
        return _LEVEL_UNTIL
    if isinstance(f, Not):
        return _LEVEL_NOT
    return _LEVEL_TIGHT


def _infix(f: Formula) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        inner = _infix(f.operand)
        if _level(f.operand) < _LEVEL_NOT:
            inner = f"({inner})"
        return "!" + inner
    if isinstance(f, Finally):
        return f"F({_infix(f.operand)})"
    if isinstance(f, Globally):
        return f"G({_infix(f.operand)})"
    if isinstance(f, Until):
        left = _infix(f.left)
        if _level(f.left) < _LEVEL_UNTIL or isinstance(f.left, Until):
            left = f"({left})"
        right = _infix(f.right)
        if _level(f.right) < _LEVEL_UNTIL:
            right = f"({right})"
        return f"{left} U {right}"
    if isinstance(f, And):
        left = _infix(f.left)
        if _level(f.left) < _LEVEL_AND:
            left = f"({left})"
        right = _infix(f.right)
        if _level(f.right) < _LEVEL_AND or isinstance(f.right, And):
            right = f"({right})"
        return f"{left} & {right}"
    if isinstance(f, Or):
        left = _infix(f.left)
        if _level(f.left) < _LEVEL_OR:
            left = f"({left})"
        right = _infix(f.right)
        if _level(f.right) < _LEVEL_OR or isinstance(f.right, Or):
            right = f"({right})"
        return f"{left} | {right}"
    if isinstance(f, Release):
        raise InternalOperatorError("Release has no surface syntax")
    raise TypeError(f"not a formula node: {f!r}")


def _prefix(f: Formula) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return "! " + _prefix(f.operand)
    if isinstance(f, Finally):
        return "F " + _prefix(f.operand)
    if isinstance(f, Globally):
        return "G " + _prefix(f.operand)
    if isinstance(f, And):
        return f"& {_prefix(f.left)} {_prefix(f.right)}"
    if isinstance(f, Or):
        return f"| {_prefix(f.left)} {_prefix(f.right)}"
    if isinstance(f, Until):
        return f"U {_prefix(f.left)} {_prefix(f.right)}"
    if isinstance(f, Release):
        raise InternalOperatorError("Release has no surface syntax")
    raise TypeError(f"not a formula node: {f!r}")


def print_formula(f: Formula, syntax: str = "infix") -> str:
    """Render f in the given surface syntax; inverse of parse."""
    if syntax == "infix":
        return _infix(f)
    if syntax == "prefix":
        return _prefix(f)
    raise ValueError(f"unknown syntax {syntax!r}, expected 'infix' or 'prefix'")
