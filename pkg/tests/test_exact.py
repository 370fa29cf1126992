"""Tests for exact amplitude literals."""

import math

import pytest

from infrastructure.exact import evaluate, parse_exact
from utils.errors import ParseError


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1/2", 0.5),
        ("1.6/sqrt5", 1.6 / math.sqrt(5)),
        ("-3/sqrt(10)", -3 / math.sqrt(10)),
        ("3/4/sqrt5", 0.75 / math.sqrt(5)),
        ("1/2*sqrt20/sqrt85", 0.5 * math.sqrt(20 / 85)),
        ("sqrt(1/2)", math.sqrt(0.5)),
        ("sqrt8", math.sqrt(8)),
        ("0.8", 0.8),
    ],
)
def test_evaluate_expressions(text, expected):
    assert evaluate(text) == pytest.approx(expected, abs=1e-15)


def test_perfect_squares_are_pulled_out():
    value = parse_exact("sqrt4/sqrt9")
    assert value.radicand == 1
    assert float(value) == pytest.approx(2 / 3)


def test_numbers_pass_through():
    assert evaluate(3) == 3.0
    assert evaluate(0.25) == 0.25


@pytest.mark.parametrize("text", ["", "2*", "sqrt(-1)", "1/0", "(1/2", "1/2)", "abc", "sqrt sqrt2"])
def test_malformed_expressions_raise(text):
    with pytest.raises(ParseError):
        evaluate(text)


def test_booleans_and_non_finite_rejected():
    with pytest.raises(ParseError):
        evaluate(True)
    with pytest.raises(ParseError):
        evaluate(float("inf"))
