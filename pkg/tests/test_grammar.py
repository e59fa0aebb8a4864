import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from slicecount.generators import random_grammar
from slicecount.grammar import (
    Concat,
    GrammarError,
    Letter,
    UnionConcatProgram,
    Union_,
    cfg_slice_program,
    cyk_accepts,
    grammar_slice,
    parse_grammar,
    to_cnf,
    uc_to_plus_times,
)
from slicecount.oracle import brute_cfg_count, brute_cfg_words, enumerate_support
from slicecount.program import validate_program

PARENS = "S -> '(' S ')' S | ''\n"


def test_parse_single_rule():
    g = parse_grammar("S -> a")
    assert g.rules == (("S", ("a",)),)
    assert g.start == "S"


def test_parse_three_rules():
    g = parse_grammar("S -> A B\nA -> a\nB -> b")
    assert len(g.rules) == 3
    assert g.start == "S" and g.alphabet == ("a", "b")


def test_parse_alternatives_and_start_directive():
    g = parse_grammar("@start T\nS -> a | b ;\nT -> S S")
    assert g.start == "T"
    assert g.rules_for("S") == [("a",), ("b",)]


def test_parse_rejects_name_clash():
    with pytest.raises(GrammarError):
        parse_grammar("S -> 'A'\nA -> a")


def test_parse_rejects_garbage():
    with pytest.raises(GrammarError):
        parse_grammar("S a b")
    with pytest.raises(GrammarError):
        parse_grammar("")


def test_text_round_trip():
    g = parse_grammar(PARENS + "S -> x S")
    h = parse_grammar(g.to_text())
    assert h == g


def test_cnf_of_cnf_keeps_slices():
    g = parse_grammar("S -> A B | a\nA -> a\nB -> b")
    cnf = to_cnf(g)
    assert cnf.grammar.is_cnf()
    assert len(cnf.grammar.rules) == len(g.rules)
    for n in range(1, 5):
        assert brute_cfg_count(cnf.grammar, n) == brute_cfg_count(g, n)


def test_cnf_lifts_terminals():
    cnf = to_cnf(parse_grammar("S -> a b")).grammar
    assert cnf.is_cnf()
    binary = [rhs for lhs, rhs in cnf.rules if lhs == "S"]
    assert len(binary) == 1 and len(binary[0]) == 2
    assert {rhs for lhs, rhs in cnf.rules if lhs != "S"} == {("a",), ("b",)}


def test_cnf_records_empty_word():
    cnf = to_cnf(parse_grammar(PARENS))
    assert cnf.derives_empty
    assert brute_cfg_count(parse_grammar(PARENS), 0) == 1


def test_slice_of_letters():
    uc = cfg_slice_program(to_cnf(parse_grammar("S -> a | b")), 1)
    assert uc.language() == {("a",), ("b",)}


def test_slice_balanced_parens():
    uc = cfg_slice_program(to_cnf(parse_grammar(PARENS)), 6)
    assert len(uc.language()) == 5
    assert brute_cfg_count(parse_grammar(PARENS), 6) == 5


def test_empty_slices():
    g = parse_grammar("S -> a | b")
    assert cfg_slice_program(to_cnf(g), 2).is_empty
    assert brute_cfg_count(g, 2) == 0
    assert grammar_slice(g, 3).program is None
    assert cfg_slice_program(to_cnf(parse_grammar(PARENS)), 5).is_empty


def test_full_language():
    g = parse_grammar("S -> a | b | c | S S")
    assert brute_cfg_count(g, 3) == 27
    assert len(enumerate_support(grammar_slice(g, 3).program)) == 27


def test_union_of_letters_encoding():
    uc = UnionConcatProgram((Letter("a"), Letter("b"), Union_((0, 1))), ("a", "b"), 2)
    p, dec = uc_to_plus_times(uc, 1)
    assert len(enumerate_support(p)) == 2
    assert {dec.decode(m) for m in enumerate_support(p)} == {("a",), ("b",)}


def test_concat_union_encoding():
    uc = UnionConcatProgram(
        (Letter("a"), Letter("b"), Letter("c"), Union_((1, 2)), Concat(0, 3)), ("a", "b", "c"), 4
    )
    p, dec = uc_to_plus_times(uc, 2)
    supp = enumerate_support(p)
    a0, b1, c1 = dec.var("a", 0), dec.var("b", 1), dec.var("c", 1)
    assert supp == {tuple(sorted((a0, b1))), tuple(sorted((a0, c1)))}
    assert p.degree == 2


def test_decoder_round_trip():
    sl = grammar_slice(parse_grammar(PARENS), 6)
    words = {sl.decoder.decode(m) for m in enumerate_support(sl.program)}
    assert words == brute_cfg_words(parse_grammar(PARENS), 6)
    for w in words:
        assert sl.decoder.decode(sl.decoder.encode(w)) == w
    with pytest.raises(ValueError):
        sl.decoder.decode((0,))


def test_cyk():
    cnf = to_cnf(parse_grammar(PARENS)).grammar
    assert cyk_accepts(cnf, tuple("(())"))
    assert not cyk_accepts(cnf, tuple("())("))


@given(st.integers(0, 100_000), st.integers(1, 5))
def test_cnf_preserves_slices(seed, n):
    g = random_grammar(random.Random(seed))
    cnf = to_cnf(g)
    assert cnf.grammar.is_cnf()
    assert brute_cfg_words(cnf.grammar, n) == brute_cfg_words(g, n)


@given(st.integers(0, 100_000), st.integers(1, 5))
def test_slice_program_is_valid_and_bijective(seed, n):
    g = random_grammar(random.Random(seed))
    sl = grammar_slice(g, n)
    words = brute_cfg_words(g, n)
    if sl.program is None:
        assert words == set()
        return
    assert validate_program(sl.program) == []
    assert sl.program.degree == n
    assert {sl.decoder.decode(m) for m in enumerate_support(sl.program)} == words
    # the encoding only adds one position per union-concat node and offset
    assert sl.program.size <= n * sl.uc.size
