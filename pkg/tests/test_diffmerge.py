import itertools
import random
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spanqa import _lcs_py
from spanqa.diffmerge import (
    ADDITION,
    DELETION,
    REVISION,
    MixedReport,
    kernel_name,
    lcs_diff,
    merge_reports,
    reconstruct,
    span_char_indices,
)
from spanqa.types import ReportPair, ValidationError

try:
    from spanqa import _lcs_fast
except ImportError:
    _lcs_fast = None


def lcs_len_enum(a, b):
    """Oracle: enumerate every subsequence of a, keep the longest also in b."""
    def is_subseq(s, t):
        it = iter(t)
        return all(ch in it for ch in s)

    best = 0
    for r in range(len(a), 0, -1):
        for combo in itertools.combinations(a, r):
            if is_subseq(combo, b):
                return r
    return best


def lcs_len_memo(a, b):
    """Oracle for longer strings: top-down recursion, written independently."""
    @lru_cache(maxsize=None)
    def rec(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + rec(i + 1, j + 1)
        return max(rec(i + 1, j), rec(i, j + 1))

    return rec(0, 0)


def keep_len(script):
    return sum(len(r.chars) for r in script if r.kind == "keep")


def pair(junior, senior, rid="r"):
    return ReportPair(rid, junior, senior)


class TestLcsDiff:
    def test_identity(self):
        script = lcs_diff("abc", "abc")
        assert [r.kind for r in script] == ["keep"]
        assert script[0].chars == "abc"

    def test_single_char_substitution(self):
        # the motivating pattern: one laterality character swapped
        script = lcs_diff("肺左叶影", "肺双叶影")
        assert [(r.kind, r.chars) for r in script] == [
            ("keep", "肺"),
            ("delete", "左"),
            ("insert", "双"),
            ("keep", "叶影"),
        ]

    def test_empty_inputs(self):
        assert lcs_diff("", "") == []
        assert [(r.kind, r.chars) for r in lcs_diff("", "ab")] == [("insert", "ab")]
        assert [(r.kind, r.chars) for r in lcs_diff("ab", "")] == [("delete", "ab")]

    def test_script_concatenation_invariants(self):
        rng = random.Random(5)
        for _ in range(300):
            a = "".join(rng.choices("abcde", k=rng.randint(0, 12)))
            b = "".join(rng.choices("abcde", k=rng.randint(0, 12)))
            script = lcs_diff(a, b)
            junior = "".join(r.chars for r in script if r.kind in ("keep", "delete"))
            senior = "".join(r.chars for r in script if r.kind in ("keep", "insert"))
            assert junior == a
            assert senior == b
            kinds = [r.kind for r in script]
            for x, y in zip(kinds, kinds[1:]):
                assert x != y, f"non-maximal runs in {script}"

    def test_exhaustive_two_symbol_alphabet(self):
        strings = [""]
        for n in range(1, 7):
            strings += ["".join(p) for p in itertools.product("ab", repeat=n)]
        for a in strings:
            for b in strings:
                assert keep_len(lcs_diff(a, b)) == lcs_len_enum(a, b), (a, b)

    def test_random_pairs_against_memo_oracle(self):
        rng = random.Random(99)
        alphabet = "abcdefghijklmnopqrst"
        for _ in range(500):
            a = "".join(rng.choices(alphabet, k=rng.randint(0, 30)))
            b = "".join(rng.choices(alphabet, k=rng.randint(0, 30)))
            assert keep_len(lcs_diff(a, b)) == lcs_len_memo(a, b), (a, b)

    def test_run_offsets(self):
        script = lcs_diff("axxb", "ayb")
        assert [(r.kind, r.junior_offset, r.senior_offset) for r in script] == [
            ("keep", 0, 0),
            ("delete", 1, 1),
            ("insert", 3, 1),
            ("keep", 3, 2),
        ]


@pytest.mark.skipif(_lcs_fast is None, reason="compiled kernel not built")
class TestKernelEquivalence:
    def test_opcode_identity_fuzz(self):
        rng = random.Random(7)
        for _ in range(2000):
            a = "".join(rng.choices("ab漢字xy", k=rng.randint(0, 25)))
            b = "".join(rng.choices("ab漢字xy", k=rng.randint(0, 25)))
            assert _lcs_fast.lcs_ops(a, b) == _lcs_py.lcs_ops(a, b), (a, b)

    def test_kernel_reported(self):
        assert kernel_name() in ("compiled", "python")

    def test_env_var_forces_pure_fallback(self):
        import os
        import subprocess
        import sys

        env = dict(os.environ, SPANQA_PURE_PYTHON="1")
        out = subprocess.run(
            [sys.executable, "-c",
             "from spanqa.diffmerge import kernel_name, merge_reports;"
             "from spanqa.types import ReportPair;"
             "m = merge_reports(ReportPair('r', '肺左叶', '肺双叶'));"
             "print(kernel_name(), m.tags)"],
            capture_output=True, text=True, env=env, check=True)
        assert out.stdout.split() == ["python", "OBIO"]


def random_pair(rng, maxlen=30, alphabet="abcde"):
    senior = "".join(rng.choices(alphabet, k=rng.randint(1, maxlen)))
    junior = "".join(rng.choices(alphabet, k=rng.randint(1, maxlen)))
    return pair(junior, senior)


class TestMerge:
    def test_identical_pair(self):
        mixed = merge_reports(pair("abc", "abc"))
        assert mixed.tags == "OOO"
        assert mixed.spans == []

    def test_substitution_becomes_revision_span(self):
        mixed = merge_reports(pair("肺左叶影", "肺双叶影"))
        assert len(mixed.spans) == 1
        span = mixed.spans[0]
        assert span.kind == REVISION
        assert (span.deleted, span.inserted) == ("左", "双")
        assert mixed.chars == "肺左双叶影"
        assert mixed.tags == "OBIOO"

    def test_three_span_kinds(self):
        # delete 'x', add 'q', revise 'y' -> 'z', with kept context between
        mixed = merge_reports(pair("axbcyd", "abqczd"))
        assert [s.kind for s in mixed.spans] == [DELETION, ADDITION, REVISION]
        assert mixed.chars == "axbqcyzd"
        assert mixed.tags == "OBOBOBIO"

    def test_deleted_before_inserted_inside_revision(self):
        mixed = merge_reports(pair("a减低b", "a延长b"))
        span = mixed.spans[0]
        assert mixed.chars[span.start:span.end] == "减低延长"

    def test_round_trip_fuzz(self):
        rng = random.Random(12)
        for _ in range(1000):
            p = random_pair(rng)
            assert reconstruct(merge_reports(p)) == (p.junior, p.senior)

    @settings(max_examples=200, deadline=None)
    @given(st.text(alphabet="ab丙丁e", min_size=1, max_size=40),
           st.text(alphabet="ab丙丁e", min_size=1, max_size=40))
    def test_round_trip_property(self, junior, senior):
        p = pair(junior, senior)
        assert reconstruct(merge_reports(p)) == (junior, senior)

    @settings(max_examples=200, deadline=None)
    @given(st.text(alphabet="abc", min_size=1, max_size=30),
           st.text(alphabet="abc", min_size=1, max_size=30))
    def test_bio_well_formed(self, junior, senior):
        mixed = merge_reports(pair(junior, senior))
        assert len(mixed.tags) == len(mixed.chars)
        prev = "O"
        for t in mixed.tags:
            if t == "I":
                assert prev in "BI"
            prev = t
        assert len(mixed.spans) == mixed.tags.count("B")
        covered = set()
        for s in mixed.spans:
            covered.update(range(s.start, s.end))
        for i, t in enumerate(mixed.tags):
            assert (i in covered) == (t in "BI")

    def test_determinism(self):
        p = pair("abcabc", "cbacba")
        a, b = merge_reports(p), merge_reports(p)
        assert (a.chars, a.tags, a.spans) == (b.chars, b.tags, b.spans)


class TestSpanCharIndices:
    def test_direct(self):
        mixed = MixedReport("r", "aaaaaa", "OOBIOB")
        assert span_char_indices(mixed) == [(2, 4), (5, 6)]

    def test_all_outside(self):
        assert span_char_indices(MixedReport("r", "aaa", "OOO")) == []

    def test_adjacent_b_tags_and_trailing_span(self):
        mixed = MixedReport("r", "aaaa", "BBII")
        assert span_char_indices(mixed) == [(0, 1), (1, 4)]

    def test_against_naive_scanner(self):
        def naive(tags):
            out = []
            i = 0
            while i < len(tags):
                if tags[i] == "B":
                    j = i + 1
                    while j < len(tags) and tags[j] == "I":
                        j += 1
                    out.append((i, j))
                    i = j
                else:
                    i += 1
            return out

        rng = random.Random(3)
        for _ in range(500):
            tags = []
            prev = "O"
            for _ in range(rng.randint(0, 25)):
                choices = "BO" if prev == "O" else "BIO"
                prev = rng.choice(choices)
                tags.append(prev)
            tags = "".join(tags)
            mixed = MixedReport("r", "x" * len(tags), tags)
            assert span_char_indices(mixed) == naive(tags)

    def test_rejects_dangling_i(self):
        with pytest.raises(ValidationError):
            span_char_indices(MixedReport("r", "ab", "OI"))


class TestReconstruct:
    def test_identical(self):
        mixed = merge_reports(pair("abc", "abc"))
        assert reconstruct(mixed) == ("abc", "abc")

    def test_laterality_pair(self):
        junior, senior = reconstruct(merge_reports(pair("肺左叶影", "肺双叶影")))
        assert "左" in junior and "双" in senior

    def test_rejects_corrupted_span_content(self):
        mixed = merge_reports(pair("axb", "ayb"))
        mixed.spans[0].deleted = "q"
        with pytest.raises(ValidationError):
            reconstruct(mixed)

    def test_rejects_tag_length_mismatch(self):
        with pytest.raises(ValidationError):
            reconstruct(MixedReport("r", "abc", "OO"))
