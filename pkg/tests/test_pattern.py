import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from actionre.automata import compile_pattern
from actionre.pattern import (
    Alt,
    Concat,
    Plus,
    PatternSyntaxError,
    Star,
    Symbol,
    UnknownActionError,
    Vocabulary,
    Wildcard,
    desugar,
    format_pattern,
    literals,
    parse,
    wrap_untrimmed,
)
from oracles import all_strings, ast_matches, random_pattern

CAR = Vocabulary(["gc", "d", "tc", "ts"])
SERVE = Vocabulary(["tp", "hj", "d", "bh"])
ABC = Vocabulary(["a", "b", "c"])


def sym(vocab, *names):
    return Symbol(vocab.symbol(names))


class TestVocabulary:
    def test_bijection(self):
        assert [CAR.index(n) for n in CAR] == [0, 1, 2, 3]
        assert [CAR.name(i) for i in range(4)] == list(CAR.names)

    @pytest.mark.parametrize("names", [[], ["a", "a"], ["a", ""], ["a b"]])
    def test_rejects_invalid(self, names):
        with pytest.raises(ValueError):
            Vocabulary(names)

    def test_unknown_name(self):
        with pytest.raises(UnknownActionError):
            CAR.index("zz")


class TestParse:
    def test_car_example(self):
        p = parse("{gc} ({d,tc}|{d,ts})+", CAR)
        assert p == Concat((sym(CAR, "gc"), Plus(Alt((sym(CAR, "d", "tc"), sym(CAR, "d", "ts"))))))

    def test_serve_pattern(self):
        p = parse("{tp,hj}+ {tp,d}+ {tp,bh}+", SERVE)
        assert p == Concat(
            (Plus(sym(SERVE, "tp", "hj")), Plus(sym(SERVE, "tp", "d")), Plus(sym(SERVE, "tp", "bh")))
        )

    def test_null_symbol(self):
        assert parse("{}", ABC) == Symbol(frozenset())

    def test_precedence(self):
        p = parse("{a}|{b} {c}*", ABC)
        assert p == Alt((sym(ABC, "a"), Concat((sym(ABC, "b"), Star(sym(ABC, "c"))))))

    def test_member_order_and_duplicates_are_canonical(self):
        assert parse("{c,a,a}", ABC) == parse("{a,c}", ABC)

    def test_wildcard_and_whitespace(self):
        assert parse(" . *  {a} ", ABC) == Concat((Star(Wildcard()), sym(ABC, "a")))

    def test_stacked_postfix(self):
        assert parse("{a}*+", ABC) == Plus(Star(sym(ABC, "a")))

    @pytest.mark.parametrize(
        "text, pos",
        [("{a", 2), ("({a}", 4), ("{a}|", 4), ("{a} )", 4), ("", 0), ("{a} @", 4), ("*", 0)],
    )
    def test_syntax_errors_carry_position(self, text, pos):
        with pytest.raises(PatternSyntaxError) as info:
            parse(text, ABC)
        assert info.value.pos == pos

    def test_bare_name_rejected(self):
        with pytest.raises(PatternSyntaxError, match="bare action name"):
            parse("a", ABC)

    def test_unknown_action_names_token(self):
        with pytest.raises(UnknownActionError) as info:
            parse("{a} {zz}", ABC)
        assert info.value.name == "zz"
        assert info.value.pos == 5


class TestDesugar:
    def test_plus(self):
        a = sym(ABC, "a")
        assert desugar(Plus(a)) == Concat((a, Star(a)))

    def test_star_unchanged(self):
        a = Star(sym(ABC, "a"))
        assert desugar(a) == a

    def test_nested_plus(self):
        a = sym(ABC, "a")
        inner = Concat((a, Star(a)))
        assert desugar(Plus(Plus(a))) == Concat((inner, Star(inner)))

    def test_nested_plus_language(self):
        a = sym(ABC, "a")
        p = Plus(Plus(a))
        for s in all_strings(1, 4):
            assert ast_matches(p, s) == ast_matches(desugar(p), s)

    def test_no_plus_left(self):
        rng = random.Random(7)
        for _ in range(50):
            p = desugar(random_pattern(rng, 3, 6))
            assert "Plus(" not in repr(p)

    def test_language_preserved(self):
        rng = random.Random(11)
        for _ in range(40):
            m = rng.randint(1, 3)
            p = random_pattern(rng, m, 4)
            d = compile_pattern(desugar(p))
            for s in all_strings(m, 5 if m < 3 else 3):
                assert d.accepts(s) == ast_matches(p, s)


class TestWrapUntrimmed:
    def test_structure(self):
        a = sym(ABC, "a")
        assert wrap_untrimmed(a) == Concat((Star(Wildcard()), a, Star(Wildcard())))

    def test_not_idempotent(self):
        a = sym(ABC, "a")
        assert wrap_untrimmed(wrap_untrimmed(a)) != wrap_untrimmed(a)

    def test_padding_keeps_acceptance(self):
        rng = random.Random(3)
        for _ in range(20):
            m = rng.randint(1, 2)
            p = random_pattern(rng, m, 3, wildcard=False)
            wrapped = compile_pattern(wrap_untrimmed(p))
            plain = compile_pattern(p)
            strings = list(all_strings(m, 3))
            for s in strings:
                if not plain.accepts(s):
                    continue
                for u in strings[:20]:
                    for t in strings[:20]:
                        if len(u) + len(s) + len(t) <= 6:
                            assert wrapped.accepts(u + s + t)


names = st.sampled_from(["a", "b", "c", "d"])
leaves = st.one_of(
    st.builds(lambda ns: Symbol(frozenset(FOUR.index(n) for n in ns)), st.sets(names)),
    st.just(Wildcard()),
)
FOUR = Vocabulary(["a", "b", "c", "d"])


def _extend(children):
    many = st.lists(children, min_size=2, max_size=3).map(tuple)
    return st.one_of(
        many.map(Concat), many.map(Alt), children.map(Star), children.map(Plus)
    )


patterns = st.recursive(leaves, _extend, max_leaves=12)


class TestFormat:
    def test_car_round_trip(self):
        text = "{gc} ({d,tc}|{d,ts})+"
        assert format_pattern(parse(text, CAR), CAR) == text

    def test_null(self):
        assert format_pattern(Symbol(frozenset()), ABC) == "{}"

    def test_nested_concat_kept(self):
        a, b, c = (sym(ABC, n) for n in "abc")
        p = Concat((Concat((a, b)), c))
        assert parse(format_pattern(p, ABC), ABC) == p

    @settings(max_examples=300, deadline=None)
    @given(patterns)
    def test_round_trip(self, p):
        assert parse(format_pattern(p, FOUR), FOUR) == p


def test_literals_first_occurrence_order():
    p = parse("{b} ({a}|{b})* . {}", ABC)
    assert literals(p) == [frozenset({1}), frozenset({0}), frozenset()]
