import random

import pytest

from ltlkit.formulas import And, Atom, Finally, Globally, Not, Or, Release, Until
from ltlkit.parsing import (
    InternalOperatorError,
    ParseError,
    UnknownOperatorError,
    parse,
    print_formula,
)

from helpers import random_formula


class TestInfixParsing:
    def test_precedence_or_weakest(self):
        assert parse("a | b & c") == Or(Atom("a"), And(Atom("b"), Atom("c")))

    def test_until_binds_tighter_than_and(self):
        assert parse("a & b U c") == And(Atom("a"), Until(Atom("b"), Atom("c")))

    def test_until_right_associative(self):
        assert parse("a U b U c") == Until(Atom("a"), Until(Atom("b"), Atom("c")))

    def test_parentheses_override(self):
        assert parse("(a | b) & c") == And(Or(Atom("a"), Atom("b")), Atom("c"))

    def test_negation_tightest(self):
        assert parse("!a U b") == Until(Not(Atom("a")), Atom("b"))
        assert parse("!(a U b)") == Not(Until(Atom("a"), Atom("b")))

    def test_temporal_operators(self):
        assert parse("F(a)") == Finally(Atom("a"))
        assert parse("G(a & b)") == Globally(And(Atom("a"), Atom("b")))
        assert parse("F G a") == Finally(Globally(Atom("a")))

    def test_quoted_drone_formula(self):
        f = parse("!(red_room) U (second_floor)")
        assert f == Until(Not(Atom("red_room")), Atom("second_floor"))

    def test_nested_eventuality_with_disjunction(self):
        f = parse("F((B | Y) & F(C))")
        assert f == Finally(And(Or(Atom("B"), Atom("Y")), Finally(Atom("C"))))


class TestPrefixParsing:
    def test_simple(self):
        assert parse("F a", syntax="prefix") == Finally(Atom("a"))

    def test_nested(self):
        f = parse("F & | B Y F C", syntax="prefix")
        assert f == Finally(And(Or(Atom("B"), Atom("Y")), Finally(Atom("C"))))

    def test_until_negation(self):
        f = parse("U ! red_room second_floor", syntax="prefix")
        assert f == Until(Not(Atom("red_room")), Atom("second_floor"))

    def test_trailing_tokens_rejected(self):
        with pytest.raises(ParseError):
            parse("F a b", syntax="prefix")

    def test_missing_operand_rejected(self):
        with pytest.raises(ParseError):
            parse("& a", syntax="prefix")


class TestAutoSyntax:
    def test_infix_wins_when_both_could_apply(self):
        assert parse("F(a)") == parse("F(a)", syntax="auto")

    def test_falls_back_to_prefix(self):
        assert parse("& a b", syntax="auto") == And(Atom("a"), Atom("b"))

    def test_reports_infix_error_when_both_fail(self):
        with pytest.raises(ParseError) as info:
            parse("a &", syntax="auto")
        assert "syntax error" in str(info.value)

    def test_unknown_syntax_rejected(self):
        with pytest.raises(ValueError):
            parse("a", syntax="polish")


class TestRejectedOperators:
    @pytest.mark.parametrize("text", ["X a", "X(a)", "a U X(b)"])
    def test_next_rejected_infix(self, text):
        with pytest.raises(UnknownOperatorError) as info:
            parse(text, syntax="infix")
        assert "X" in str(info.value)

    def test_release_rejected_prefix(self):
        with pytest.raises(UnknownOperatorError) as info:
            parse("R a b", syntax="prefix")
        assert "R" in str(info.value)

    def test_rejection_survives_auto(self):
        with pytest.raises(UnknownOperatorError):
            parse("X a", syntax="auto")


class TestParseErrors:
    def test_offset_is_byte_position(self):
        with pytest.raises(ParseError) as info:
            parse("F(a")
        assert info.value.offset == 3

    def test_offset_counts_multibyte_characters(self):
        with pytest.raises(ParseError) as info:
            parse("aé &")  # 'é' is two bytes in UTF-8
        assert info.value.offset == 1

    def test_expected_tokens_reported(self):
        with pytest.raises(ParseError) as info:
            parse("a &")
        assert info.value.expected  # non-empty guidance
        assert "expected" in str(info.value)

    def test_empty_input(self):
        with pytest.raises(ParseError):
            parse("")
        with pytest.raises(ParseError):
            parse("   ", syntax="prefix")

    def test_stray_rparen(self):
        with pytest.raises(ParseError) as info:
            parse("a)")
        assert info.value.offset == 1


class TestPrinting:
    def test_infix_minimal_parens(self):
        f = Finally(And(Or(Atom("B"), Atom("Y")), Finally(Atom("C"))))
        assert print_formula(f) == "F((B | Y) & F(C))"

    def test_infix_until_not(self):
        f = Until(Not(Atom("red_room")), Atom("second_floor"))
        assert print_formula(f) == "!red_room U second_floor"

    def test_prefix(self):
        f = Until(Not(Atom("red_room")), Atom("second_floor"))
        assert print_formula(f, "prefix") == "U ! red_room second_floor"

    def test_right_assoc_until_prints_without_parens(self):
        f = Until(Atom("a"), Until(Atom("b"), Atom("c")))
        assert print_formula(f) == "a U b U c"
        g = Until(Until(Atom("a"), Atom("b")), Atom("c"))
        assert print_formula(g) == "(a U b) U c"

    def test_release_never_prints(self):
        with pytest.raises(InternalOperatorError):
            print_formula(Release(Atom("a"), Atom("b")))
        with pytest.raises(InternalOperatorError):
            print_formula(Release(Atom("a"), Atom("b")), "prefix")


class TestRoundTrip:
    @pytest.mark.parametrize("syntax", ["infix", "prefix"])
    def test_random_formulas_round_trip(self, syntax):
        rng = random.Random(99)
        for _ in range(300):
            f = random_formula(rng, 5, ["a", "b", "c", "d"])
            assert parse(print_formula(f, syntax), syntax=syntax) == f

    def test_round_trip_through_auto(self):
        rng = random.Random(100)
        for _ in range(100):
            f = random_formula(rng, 4, ["a", "b"])
            for syntax in ("infix", "prefix"):
                assert parse(print_formula(f, syntax), syntax="auto") == f
