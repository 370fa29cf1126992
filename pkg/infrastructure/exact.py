"""Exact amplitude literals for fixture files.

Fixtures write amplitudes such as ``"1.6/sqrt5"``, ``"-3/sqrt(10)"`` or
``"1/2*1/sqrt2"``. The grammar is

    expr   := factor (("*" | "/") factor)*
    factor := "-" factor | number | "sqrt" atom | "(" expr ")"
    atom   := number | "(" expr ")"

Every value is kept as ``c * sqrt(r)`` with rational c and r until the
final float conversion.
"""

import math
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import List, Union

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from utils.errors import ParseError

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|(sqrt)|([*/()\-]))")


@dataclass(frozen=True)
class Surd:
    """The value coeff * sqrt(radicand), radicand >= 0 and square-free in spirit."""

    coeff: Fraction
    radicand: Fraction = Fraction(1)

    def __mul__(self, other: "Surd") -> "Surd":
        return Surd(self.coeff * other.coeff, self.radicand * other.radicand)._reduced()

    def __truediv__(self, other: "Surd") -> "Surd":
        if other.coeff == 0:
            raise ParseError("Division by zero in amplitude expression")
        return Surd(self.coeff / other.coeff, self.radicand / other.radicand)._reduced()

    def __neg__(self) -> "Surd":
        return Surd(-self.coeff, self.radicand)

    def sqrt(self) -> "Surd":
        if self.coeff < 0:
            raise ParseError("Square root of a negative number in amplitude expression")
        if self.radicand != 1:
            raise ParseError("Nested square roots are not supported")
        return Surd(Fraction(1), self.coeff)._reduced()

    def _reduced(self) -> "Surd":
        # Pull perfect squares out of the radicand
        num, den = self.radicand.numerator, self.radicand.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        coeff, radicand = self.coeff, self.radicand
        if rn * rn == num and rd * rd == den:
            return Surd(coeff * Fraction(rn, rd), Fraction(1))
        return Surd(coeff, radicand)

    def __float__(self) -> float:
        return float(self.coeff) * math.sqrt(float(self.radicand))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = self._tokenize(text)
        self.pos = 0

    @staticmethod
    def _tokenize(text: str) -> List[str]:
        tokens = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            match = _TOKEN.match(stripped, pos)
            if not match:
                raise ParseError(f"Unexpected character {stripped[pos:].strip()[:1]!r} in amplitude {text!r}")
            tokens.append(next(g for g in match.groups() if g is not None))
            pos = match.end()
        if not tokens:
            raise ParseError("Empty amplitude expression")
        return tokens

    def _peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _take(self) -> str:
        token = self._peek()
        if token is None:
            raise ParseError(f"Unexpected end of amplitude {self.text!r}")
        self.pos += 1
        return token

    def parse(self) -> Surd:
        value = self._expr()
        if self._peek() is not None:
            raise ParseError(f"Trailing token {self._peek()!r} in amplitude {self.text!r}")
        return value

    def _expr(self) -> Surd:
        value = self._factor()
        while self._peek() in ("*", "/"):
            op = self._take()
            rhs = self._factor()
            value = value * rhs if op == "*" else value / rhs
        return value

    def _factor(self) -> Surd:
        token = self._take()
        if token == "-":
            return -self._factor()
        if token == "sqrt":
            return self._atom().sqrt()
        if token == "(":
            value = self._expr()
            if self._take() != ")":
                raise ParseError(f"Missing ')' in amplitude {self.text!r}")
            return value
        if token in ("*", "/", ")"):
            raise ParseError(f"Unexpected {token!r} in amplitude {self.text!r}")
        return Surd(Fraction(token))

    def _atom(self) -> Surd:
        token = self._take()
        if token == "(":
            value = self._expr()
            if self._take() != ")":
                raise ParseError(f"Missing ')' in amplitude {self.text!r}")
            return value
        if token in ("*", "/", ")", "-", "sqrt"):
            raise ParseError(f"sqrt needs a number or a parenthesized expression in {self.text!r}")
        return Surd(Fraction(token))


def parse_exact(text: str) -> Surd:
    """Parse an amplitude expression into its exact value."""
    return _Parser(text).parse()


def evaluate(value: Union[str, int, float]) -> float:
    """
    Real value of an amplitude literal.

    Numbers pass through; strings are parsed with the exact grammar.
    """
    if isinstance(value, bool):
        raise ParseError(f"Boolean is not an amplitude: {value!r}")
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise ParseError(f"Non-finite amplitude {value!r}")
        return float(value)
    if isinstance(value, str):
        return float(parse_exact(value))
    raise ParseError(f"Amplitude must be a number or expression string, got {type(value).__name__}")
