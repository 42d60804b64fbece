"""
Recursive descent parser for harmonic map expressions.

Grammar (whitespace is ignored):

    harmonic := summand (('+'|'-') summand)*       top-level summands only
    summand  := 'conj' '(' expr ')' | term
    expr     := term (('+'|'-') term)*
    term     := unary (('*'|'/') unary)*
    unary    := ('+'|'-') unary | factor           '^' binds tighter than '-'
    factor   := base ('^' uint)?
    base     := number | number 'i' | 'i' | 'z' | '(' expr ')'
              | 'mobius' '[' expr ',' expr ';' expr ',' expr ']'

Top-level `conj(E)` summands are collected into the co-analytic part g, the
rest into h. Polynomial values are TaylorSeries truncated at the requested order.
"""
import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Union

import numpy as np

from analytic import AnalyticFn, MoebiusTransform, TaylorSeries, series_pow
from errors import ExprSyntaxError, HarmonicError, NestedConj, NonlinearDivision
from harmonic import HarmonicMap, assemble

logger = logging.getLogger(__name__)

MAX_DEPTH = 100

_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_]+")
_SYMBOLS = "+-*/^()[],;"


class TokenType(str, Enum):
    NUMBER = "number"
    IMAG = "imaginary number"
    NAME = "name"
    SYMBOL = "symbol"
    END = "end of input"


@dataclass(frozen=True)
class Token:
    type: TokenType
    text: str
    column: int

    def describe(self) -> str:
        return "end of input" if self.type is TokenType.END else repr(self.text)


def tokenize(text: str) -> List[Token]:
    """
    Split an expression into tokens with 1-based columns.

    Raises:
        ExprSyntaxError: a character that starts no token
    """
    tokens = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch in _SYMBOLS:
            tokens.append(Token(TokenType.SYMBOL, ch, pos + 1))
            pos += 1
            continue
        number = _NUMBER.match(text, pos)
        if number:
            end = number.end()
            if end < len(text) and text[end] == "i" and not (end + 1 < len(text) and text[end + 1].isalnum()):
                tokens.append(Token(TokenType.IMAG, text[pos:end], pos + 1))
                pos = end + 1
            else:
                tokens.append(Token(TokenType.NUMBER, text[pos:end], pos + 1))
                pos = end
            continue
        name = _NAME.match(text, pos)
        if name:
            tokens.append(Token(TokenType.NAME, name.group(), pos + 1))
            pos = name.end()
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", pos + 1, ["number", "'z'", "'('"])
    tokens.append(Token(TokenType.END, "", len(text) + 1))
    return tokens


Value = Union[TaylorSeries, MoebiusTransform]


class Parser:
    """One-shot parser over a token list; every value is built at `order`."""

    def __init__(self, text: str, order: int):
        if order < 1:
            raise ValueError("truncation order must be at least 1")
        self.text = text
        self.order = order
        self.tokens = tokenize(text)
        self.pos = 0
        self.depth = 0

    # ---------- token helpers ----------

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def _is(self, text: str, token: Optional[Token] = None) -> bool:
        token = token or self.current
        return token.type in (TokenType.SYMBOL, TokenType.NAME) and token.text == text

    def _advance(self) -> Token:
        token = self.current
        if token.type is not TokenType.END:
            self.pos += 1
        return token

    def _expect(self, text: str) -> Token:
        if not self._is(text):
            raise ExprSyntaxError(f"unexpected {self.current.describe()}", self.current.column, [repr(text)])
        return self._advance()

    def _enter(self, token: Token) -> None:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ExprSyntaxError("expression nested too deeply", token.column)

    # ---------- values ----------

    def _constant(self, value: complex, token: Token) -> TaylorSeries:
        if not np.isfinite(value):
            raise ExprSyntaxError(f"number {token.text!r} is not finite", token.column)
        return TaylorSeries.constant(value, self.order)

    @staticmethod
    def _is_constant(value: Value) -> bool:
        return isinstance(value, TaylorSeries) and value.polynomial and value.degree(0.0) == 0

    def _series(self, value: Value, token: Token) -> TaylorSeries:
        if isinstance(value, MoebiusTransform):
            raise ExprSyntaxError("a Möbius map cannot take part in arithmetic", token.column)
        return value

    def _checked(self, compute, token: Token) -> TaylorSeries:
        try:
            with np.errstate(all="ignore"):
                return compute()
        except (ValueError, OverflowError) as e:
            raise ExprSyntaxError(f"value is not finite ({e})", token.column) from e

    # ---------- grammar ----------

    def parse_harmonic(self) -> HarmonicMap:
        h_parts: List[tuple] = []
        g_parts: List[tuple] = []
        sign = 1.0
        if self.current.type is TokenType.SYMBOL and self.current.text in "+-" and self._is("conj", self._peek()):
            sign = -1.0 if self._advance().text == "-" else 1.0
        while True:
            start = self.current
            if self._is("conj"):
                g_parts.append((sign, self._conj_summand(), start))
            else:
                h_parts.append((sign, self._term(), start))
            if self.current.type is TokenType.END:
                break
            if self._is("+") or self._is("-"):
                sign = -1.0 if self._advance().text == "-" else 1.0
                continue
            raise ExprSyntaxError(
                f"unexpected {self.current.describe()}", self.current.column,
                ["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"],
            )
        h = self._sum(h_parts)
        g = self._sum(g_parts)
        return assemble(h, g)

    def parse_analytic(self) -> AnalyticFn:
        value = self._expr()
        if self.current.type is not TokenType.END:
            raise ExprSyntaxError(
                f"unexpected {self.current.describe()}", self.current.column,
                ["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"],
            )
        return value

    def _sum(self, parts: List[tuple]) -> Value:
        if not parts:
            return TaylorSeries.zero(self.order)
        if len(parts) == 1 and isinstance(parts[0][1], MoebiusTransform):
            sign, value, token = parts[0]
            if sign < 0:
                raise ExprSyntaxError("a Möbius map cannot take part in arithmetic", token.column)
            return value
        total = TaylorSeries.zero(self.order)
        for sign, value, token in parts:
            term = self._series(value, token)
            total = self._checked(lambda: total + sign * term, token)
        return total

    def _conj_summand(self) -> Value:
        self._advance()
        self._expect("(")
        self.depth += 1
        inner = self._expr()
        self.depth -= 1
        self._expect(")")
        if not (self.current.type is TokenType.END or self._is("+") or self._is("-")):
            raise NestedConj("conj(...) must be a whole top-level summand", self.current.column)
        return inner

    def _expr(self) -> Value:
        start = self.current
        self._enter(start)
        value = self._term()
        while self._is("+") or self._is("-"):
            op = self._advance()
            rhs = self._term()
            lhs_s, rhs_s = self._series(value, op), self._series(rhs, op)
            value = self._checked(lambda: lhs_s + rhs_s if op.text == "+" else lhs_s - rhs_s, op)
        self.depth -= 1
        return value

    def _term(self) -> Value:
        value = self._unary()
        while self._is("*") or self._is("/"):
            op = self._advance()
            rhs = self._unary()
            lhs_s, rhs_s = self._series(value, op), self._series(rhs, op)
            if op.text == "*":
                value = self._checked(lambda: lhs_s * rhs_s, op)
                continue
            if not self._is_constant(rhs_s):
                raise NonlinearDivision("division is only allowed by a constant", op.column)
            divisor = rhs_s.coefficient(0)
            if divisor == 0:
                raise ExprSyntaxError("division by zero", op.column)
            value = self._checked(lambda: lhs_s * (1.0 / divisor), op)
        return value

    def _unary(self) -> Value:
        if self._is("-") or self._is("+"):
            op = self._advance()
            self._enter(op)
            operand = self._unary()
            self.depth -= 1
            if op.text == "+":
                return operand
            return -self._series(operand, op)
        return self._factor()

    def _factor(self) -> Value:
        value = self._base()
        if self._is("^"):
            op = self._advance()
            exponent = self.current
            if exponent.type is not TokenType.NUMBER or not exponent.text.isdigit():
                raise ExprSyntaxError(f"unexpected {exponent.describe()}", exponent.column, ["unsigned integer"])
            self._advance()
            base = self._series(value, op)
            k = int(exponent.text)
            value = self._checked(lambda: series_pow(base, k), op)
        return value

    def _base(self) -> Value:
        token = self.current
        if token.type is TokenType.NUMBER:
            self._advance()
            return self._constant(complex(float(token.text)), token)
        if token.type is TokenType.IMAG:
            self._advance()
            return self._constant(complex(0.0, float(token.text)), token)
        if self._is("("):
            self._advance()
            value = self._expr()
            self._expect(")")
            return value
        if token.type is TokenType.NAME:
            if token.text == "z":
                self._advance()
                return TaylorSeries.monomial(1, self.order)
            if token.text == "i":
                self._advance()
                return TaylorSeries.constant(1j, self.order)
            if token.text == "conj":
                raise NestedConj("conj(...) may only appear as a top-level summand", token.column)
            if token.text == "mobius":
                return self._mobius()
            raise ExprSyntaxError(f"unknown name {token.text!r}", token.column, ["'z'", "'i'", "'conj'", "'mobius'"])
        raise ExprSyntaxError(
            f"unexpected {token.describe()}", token.column,
            ["number", "'z'", "'i'", "'('", "'mobius'"],
        )

    def _mobius(self) -> MoebiusTransform:
        start = self._advance()
        self._expect("[")
        entries = []
        for separator in (",", ";", ",", "]"):
            token = self.current
            value = self._expr()
            if not self._is_constant(value):
                raise ExprSyntaxError("Möbius entries must be constants", token.column)
            entries.append(value.coefficient(0))
            self._expect(separator)
        try:
            return MoebiusTransform.from_entries(*entries)
        except HarmonicError as e:
            raise ExprSyntaxError(str(e), start.column) from e


# ========== ENTRY POINTS ==========

def parse_harmonic(text: str, order: int = 32) -> HarmonicMap:
    """
    Parse "h-terms + conj(g-terms)" into a HarmonicMap.

    Args:
        text: Expression such as "z^2 + conj(0.5*z)"
        order: Truncation order N of series parts

    Returns:
        The map; without conj summands it is flagged analytic-degenerate

    Raises:
        ExprSyntaxError: with column and expected tokens (NestedConj and
            NonlinearDivision are subclasses)
    """
    return Parser(text, order).parse_harmonic()


def parse_analytic(text: str, order: int = 32) -> AnalyticFn:
    """Parse a single analytic function (conj is rejected)."""
    return Parser(text, order).parse_analytic()


def parse_complex(text: str) -> complex:
    """Parse a constant expression such as "(0.5-2i)" or "-1/3"."""
    value = Parser(text, 1).parse_analytic()
    if not Parser._is_constant(value):
        raise ExprSyntaxError("expected a constant", 1)
    return value.coefficient(0)


# ========== PRINTING ==========

def format_complex(value: complex) -> str:
    """Complex literal that parses back to exactly the same value."""
    value = complex(value)
    re_part, im_part = repr(value.real), repr(abs(value.imag))
    sign = "-" if np.signbit(value.imag) else "+"
    return f"({re_part}{sign}{im_part}i)"


def format_analytic(fn: AnalyticFn) -> str:
    if isinstance(fn, MoebiusTransform):
        a, b, c, d = (format_complex(x) for x in fn.matrix.reshape(-1))
        return f"mobius[{a},{b};{c},{d}]"
    terms = []
    for k, coeff in enumerate(fn.coeffs):
        if coeff == 0:
            continue
        literal = format_complex(coeff)
        if k == 0:
            terms.append(literal)
        elif k == 1:
            terms.append(f"{literal}*z")
        else:
            terms.append(f"{literal}*z^{k}")
    return " + ".join(terms) if terms else "0"


def format_harmonic(f: HarmonicMap) -> str:
    """Expression that parses back to f at the same truncation order."""
    text = format_analytic(f.h)
    if not f.analytic_degenerate:
        text += f" + conj({format_analytic(f.g)})"
    return text
