from fractions import Fraction

import pytest

from conftest import BUNDLED, bundled_source
from ndinfer.errors import NdSyntaxError
from ndinfer.parser import parse
from ndinfer.syntax import (
    EBinary, EFlip, ELet, EVar, SInt, format_program,
)


def test_flip_literal_is_exact_rational():
    p = parse("flip(0.3)")
    assert isinstance(p.main, EFlip)
    assert p.main.theta == Fraction(3, 10)


def test_fraction_literal():
    assert parse("flip(2/3)").main.theta == Fraction(2, 3)


def test_tracker_program_shape():
    p = parse(bundled_source("vehicle_tracker.nd"))
    assert [f.name for f in p.functions] == ["move", "step"]
    assert len(p.functions[1].params) == 2
    main = p.main
    names = []
    while isinstance(main, ELet):
        names.append(main.name)
        main = main.body
    assert names == ["p1", "p2", "p3"]
    assert isinstance(main, EBinary) and main.op == "=="


def test_probability_out_of_range_rejected():
    with pytest.raises(NdSyntaxError, match="outside"):
        parse("flip(1.5)")
    with pytest.raises(NdSyntaxError):
        parse("flip(7/3)")
    parse("flip(0)")
    parse("flip(1)")


def test_syntax_error_carries_position():
    with pytest.raises(NdSyntaxError) as err:
        parse("let x = in x")
    assert err.value.line == 1
    assert err.value.col == 9


def test_decimals_only_inside_flip():
    with pytest.raises(NdSyntaxError, match="decimal"):
        parse("let x = 0.5 in x")


def test_comments_and_whitespace():
    p = parse("// a comment\nflip(1/2) // trailing\n")
    assert isinstance(p.main, EFlip)


def test_explicit_width_type():
    p = parse("fun f(x: int<3>): int<3> { x } f(5)")
    (_, ty), = p.functions[0].params
    assert ty == SInt(3)


def test_tuple_literals_nest_right():
    p = parse("(true, false, true)")
    t = p.main
    assert isinstance(t.right.right, type(t.left)) or t.right is not None
    # (a, b, c) == (a, (b, c))
    assert format_program(p).strip() == "(true, (false, true))"


def test_observe_binds_tightly():
    p = parse("observe flip(0.5) || nflip()")
    assert isinstance(p.main, EBinary) and p.main.op == "||"


@pytest.mark.parametrize("path", BUNDLED, ids=lambda p: p.name)
def test_pretty_print_round_trip(path):
    text = path.read_text(encoding="utf-8")
    once = format_program(parse(text))
    twice = format_program(parse(once))
    assert once == twice


def test_call_argument_lists():
    p = parse("fun g(a: Bool, b: Bool): Bool { a && b } g(true, flip(0.5))")
    assert len(p.main.args) == 2


def test_unбalanced_paren_errors():
    with pytest.raises(NdSyntaxError):
        parse("(flip(0.5)")
