from __future__ import annotations

import math
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostfilter.textstats import (
    cosine_similarity,
    count_comment_lines,
    count_lines,
    levenshtein,
    tokenize,
)


@lru_cache(maxsize=None)
def _edit_distance_recursive(a: str, b: str) -> int:
    """Brute-force edit distance by recursion; oracle for small strings."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    cost = 0 if a[0] == b[0] else 1
    return min(
        _edit_distance_recursive(a[1:], b) + 1,
        _edit_distance_recursive(a, b[1:]) + 1,
        _edit_distance_recursive(a[1:], b[1:]) + cost,
    )


class TestLevenshtein:
    def test_pure_insertion(self):
        assert levenshtein("", "abc") == 3

    def test_classic_pair_matches_recursion(self):
        assert _edit_distance_recursive("kitten", "sitting") == 3
        assert levenshtein("kitten", "sitting") == 3

    def test_identity(self):
        assert levenshtein("same text", "same text") == 0

    def test_symmetry(self):
        assert levenshtein("abc", "yabd") == levenshtein("yabd", "abc")

    @given(st.text(alphabet="abc", max_size=7), st.text(alphabet="abc", max_size=7))
    @settings(max_examples=150, deadline=None)
    def test_matches_recursive_oracle(self, a, b):
        assert levenshtein(a, b) == _edit_distance_recursive(a, b)


class TestCosineSimilarity:
    def test_identical_nonempty_is_one(self):
        value, defined = cosine_similarity("def f(x): return x", "def f(x): return x")
        assert defined
        assert value == pytest.approx(1.0)

    def test_disjoint_tokens_is_zero(self):
        value, defined = cosine_similarity("alpha beta", "gamma delta")
        assert defined
        assert value == 0.0

    def test_hand_computed_example(self):
        # counts (2,1) vs (1,2): dot 4 over norms sqrt(5)*sqrt(5).
        value, defined = cosine_similarity("x x y", "x y y")
        assert defined
        assert value == pytest.approx(0.8, abs=1e-12)

    def test_empty_side_is_undefined(self):
        assert cosine_similarity("", "x") == (0.0, False)
        assert cosine_similarity("x", "") == (0.0, False)
        assert cosine_similarity("", "") == (0.0, False)

    def test_case_sensitive_tokenization(self):
        value, _ = cosine_similarity("Foo", "foo")
        assert value == 0.0

    def test_bounds(self):
        value, _ = cosine_similarity("a b c a", "a c d")
        assert 0.0 <= value <= 1.0


class TestTokenize:
    def test_splits_on_non_alphanumeric(self):
        assert tokenize("foo.bar(baz_qux, 12)") == ["foo", "bar", "baz_qux", "12"]

    def test_empty(self):
        assert tokenize("...") == []


class TestComments:
    def test_prefix_heuristic(self):
        text = "# a comment\nx = 1\n  // inline style\n/* block */\ncode()"
        assert count_comment_lines(text) == 3

    def test_custom_prefixes(self):
        text = "; lisp comment\nx = 1"
        assert count_comment_lines(text, prefixes=(";",)) == 1
        assert count_comment_lines(text) == 0

    def test_count_lines(self):
        assert count_lines("") == 0
        assert count_lines("one") == 1
        assert count_lines("a\nb\nc") == 3
