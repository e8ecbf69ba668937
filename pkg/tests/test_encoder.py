import json

import numpy as np
import pytest

from spanqa.diffmerge import MixedReport, merge_reports
from spanqa.encoder import (
    HashedWindowEncoder,
    PrecomputedEncoder,
    baseline_backend,
    external_backend,
    pool_span,
)
from spanqa.types import ParseError, ReportPair, ValidationError


def mixed_of(text, rid="r"):
    return MixedReport(rid, text, "O" * len(text))


class TestPoolSpan:
    def test_single_row(self):
        H = np.arange(12.0).reshape(4, 3)
        assert np.array_equal(pool_span(H, (2, 3)), H[2])

    def test_mean_of_identical_rows(self):
        H = np.tile(np.array([1.5, -2.0]), (3, 1))
        assert np.array_equal(pool_span(H, (0, 3)), np.array([1.5, -2.0]))

    def test_against_naive_summation(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            m, d = rng.integers(1, 20), rng.integers(1, 8)
            H = rng.normal(size=(m, d))
            s = int(rng.integers(0, m))
            e = int(rng.integers(s + 1, m + 1))
            naive = sum(H[i] for i in range(s, e)) / (e - s)
            assert np.allclose(pool_span(H, (s, e)), naive, atol=1e-12, rtol=0)

    def test_linearity(self):
        rng = np.random.default_rng(1)
        H = rng.normal(size=(6, 4))
        alpha = 3.7
        assert np.allclose(pool_span(alpha * H, (1, 5)), alpha * pool_span(H, (1, 5)))

    def test_empty_or_out_of_bounds(self):
        H = np.zeros((3, 2))
        with pytest.raises(ValidationError):
            pool_span(H, (1, 1))
        with pytest.raises(ValidationError):
            pool_span(H, (2, 5))


class TestHashedWindowEncoder:
    def test_shape(self):
        enc = baseline_backend(dim=16, window=2, seed=0)
        H = enc.encode(mixed_of("肺"))
        assert H.shape == (1, 16)

    def test_deterministic(self):
        enc = baseline_backend(dim=8, seed=3)
        m = mixed_of("左肺下叶")
        assert np.array_equal(enc.encode(m), enc.encode(m))

    def test_seeds_differ(self):
        a = baseline_backend(dim=8, seed=1)
        b = baseline_backend(dim=8, seed=2)
        assert not np.array_equal(a.table, b.table)

    def test_window0_is_position_independent(self):
        enc = baseline_backend(dim=8, window=0, seed=0)
        h1 = enc.encode(mixed_of("ab左cd"))
        h2 = enc.encode(mixed_of("左xyz"))
        assert np.array_equal(h1[2], h2[0])

    def test_window0_rows_are_table_lookups(self):
        enc = baseline_backend(dim=8, window=0, seed=0)
        text = "abc"
        H = enc.encode(mixed_of(text))
        for i, ch in enumerate(text):
            assert np.array_equal(H[i], enc.table[enc.bucket(ch)])

    def test_window_mean_matches_naive(self):
        enc = baseline_backend(dim=5, window=2, seed=4)
        text = "abcdefg"
        H = enc.encode(mixed_of(text))
        for i in range(len(text)):
            lo, hi = max(0, i - 2), min(len(text) - 1, i + 2)
            naive = np.mean([enc.table[enc.bucket(text[k])] for k in range(lo, hi + 1)], axis=0)
            assert np.allclose(H[i], naive, atol=1e-12)

    def test_empty_report_rejected(self):
        enc = baseline_backend(dim=4)
        with pytest.raises(ValidationError):
            enc.encode(mixed_of(""))

    def test_span_design_matches_encode_pool(self):
        enc = baseline_backend(dim=6, window=2, seed=5)
        pair = ReportPair("r", "肺左叶大片影", "肺双叶小片影")
        mixed = merge_reports(pair)
        ranges = [s.range for s in mixed.spans]
        H = enc.encode(mixed)
        direct = np.stack([pool_span(H, r) for r in ranges])
        via_design = enc.span_embeddings(enc.span_design(mixed, ranges))
        assert np.allclose(direct, via_design, atol=1e-12)


def write_embeddings(path, dim, matrices):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dim": dim}) + "\n")
        for rid, rows in matrices.items():
            fh.write(json.dumps({"report_id": rid, "rows": rows}) + "\n")


class TestPrecomputedEncoder:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        rows = [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]
        write_embeddings(path, 2, {"r": rows})
        enc = external_backend(path)
        assert not enc.trainable
        H = enc.encode(mixed_of("abc", rid="r"))
        assert np.array_equal(H, np.array(rows))

    def test_missing_report(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        write_embeddings(path, 2, {"r": [[0.0, 0.0]]})
        enc = external_backend(path)
        with pytest.raises(ValidationError, match="other"):
            enc.encode(mixed_of("a", rid="other"))

    def test_row_count_mismatch_names_report(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        write_embeddings(path, 2, {"r": [[0.0, 0.0]]})
        enc = external_backend(path)
        with pytest.raises(ValidationError, match="'r'"):
            enc.encode(mixed_of("abc", rid="r"))

    def test_dimension_mismatch_at_load(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        write_embeddings(path, 3, {"r": [[1.0, 2.0]]})
        with pytest.raises(ValidationError, match="3-dimensional"):
            external_backend(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text('{"report_id": "r", "rows": [[1.0]]}\n')
        with pytest.raises(ParseError, match="dim"):
            external_backend(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text("")
        with pytest.raises(ParseError):
            external_backend(path)
