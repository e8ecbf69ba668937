"""Per-character embeddings for mixed reports and mean-pooled span embeddings.

Two backends share the same surface:

  HashedWindowEncoder - trainable baseline. An embedding table addressed by
      hashed character identity; each character's embedding is the mean of
      the table rows in a symmetric context window around it. Because window
      and span pooling are both means, every span embedding is a fixed sparse
      linear combination of table rows, which keeps gradients exact and cheap.

  PrecomputedEncoder - frozen matrices loaded from a JSON-Lines file, for
      plugging in contextual embeddings computed elsewhere.
"""

from __future__ import annotations

import json

import numpy as np

from .diffmerge import MixedReport
from .types import ParseError, ValidationError


def pool_span(H: np.ndarray, span_range: tuple[int, int]) -> np.ndarray:
    """Arithmetic mean of the embedding rows in [start, end)."""
    start, end = span_range
    if not 0 <= start < end <= H.shape[0]:
        raise ValidationError(f"span range [{start}, {end}) out of bounds for {H.shape[0]} rows")
    return H[start:end].mean(axis=0)


class HashedWindowEncoder:
    name = "hashed-window"
    trainable = True

    def __init__(self, dim: int = 64, window: int = 2, buckets: int = 4096, seed: int = 0):
        if dim < 1:
            raise ValidationError("dim must be >= 1")
        if window < 0 or buckets < 1:
            raise ValidationError("window must be >= 0 and buckets >= 1")
        self.dim = dim
        self.window = window
        self.buckets = buckets
        rng = np.random.default_rng(seed)
        self.table = rng.uniform(-0.1, 0.1, size=(buckets, dim))

    def bucket(self, ch: str) -> int:
        return ord(ch) % self.buckets

    def _bucket_ids(self, chars: str) -> np.ndarray:
        return np.fromiter((ord(c) % self.buckets for c in chars), dtype=np.int64,
                           count=len(chars))

    def encode(self, mixed: MixedReport) -> np.ndarray:
        """m x dim matrix; row i averages the table rows of the characters
        in [i-window, i+window], clipped to the report bounds."""
        m = len(mixed.chars)
        if m == 0:
            raise ValidationError(f"report {mixed.report_id!r}: cannot encode empty report")
        rows = self.table[self._bucket_ids(mixed.chars)]
        if self.window == 0:
            return rows.copy()
        csum = np.vstack([np.zeros((1, self.dim)), np.cumsum(rows, axis=0)])
        pos = np.arange(m)
        lo = np.maximum(pos - self.window, 0)
        hi = np.minimum(pos + self.window, m - 1)
        return (csum[hi + 1] - csum[lo]) / (hi - lo + 1)[:, None]

    def span_design(self, mixed: MixedReport, ranges) -> list[tuple[np.ndarray, np.ndarray]]:
        """Sparse pooling coefficients: per span, (table row ids, weights)
        such that the span embedding equals weights @ table[row ids]."""
        m = len(mixed.chars)
        ids = self._bucket_ids(mixed.chars)
        out = []
        for start, end in ranges:
            if not 0 <= start < end <= m:
                raise ValidationError(f"span range [{start}, {end}) out of bounds")
            coeff: dict[int, float] = {}
            span_len = end - start
            for i in range(start, end):
                lo = max(i - self.window, 0)
                hi = min(i + self.window, m - 1)
                w = 1.0 / ((hi - lo + 1) * span_len)
                for k in range(lo, hi + 1):
                    r = int(ids[k])
                    coeff[r] = coeff.get(r, 0.0) + w
            rows = np.fromiter(coeff.keys(), dtype=np.int64, count=len(coeff))
            weights = np.fromiter(coeff.values(), dtype=np.float64, count=len(coeff))
            out.append((rows, weights))
        return out

    def span_embeddings(self, design) -> np.ndarray:
        return np.stack([weights @ self.table[rows] for rows, weights in design])

    def accumulate_grad(self, grad_table: np.ndarray, design, d_spans: np.ndarray) -> None:
        for (rows, weights), ds in zip(design, d_spans):
            grad_table[rows] += np.outer(weights, ds)

    def params(self) -> dict[str, np.ndarray]:
        return {"table": self.table}


class PrecomputedEncoder:
    """Frozen per-report embedding matrices keyed by report id.

    File format: JSON-Lines, first line {"dim": d}, then one
    {"report_id": ..., "rows": [[...], ...]} record per report.
    """

    name = "precomputed"
    trainable = False

    def __init__(self, dim: int, matrices: dict[str, np.ndarray]):
        self.dim = dim
        self.matrices = matrices

    @classmethod
    def from_file(cls, path) -> "PrecomputedEncoder":
        matrices: dict[str, np.ndarray] = {}
        dim = None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as err:
                    raise ParseError(f"{path}:{lineno}: invalid JSON ({err})") from None
                if dim is None:
                    if "dim" not in rec:
                        raise ParseError(f"{path}:1: missing header record with 'dim'")
                    dim = int(rec["dim"])
                    if dim < 1:
                        raise ParseError(f"{path}:1: dim must be >= 1")
                    continue
                try:
                    rid, rows = rec["report_id"], rec["rows"]
                except KeyError as err:
                    raise ParseError(f"{path}:{lineno}: missing field {err}") from None
                matrix = np.asarray(rows, dtype=np.float64)
                if matrix.ndim != 2 or matrix.shape[1] != dim:
                    raise ValidationError(
                        f"{path}:{lineno}: report {rid!r} rows are not {dim}-dimensional")
                matrices[rid] = matrix
        if dim is None:
            raise ParseError(f"{path}: empty embeddings file (no header record)")
        return cls(dim, matrices)

    def encode(self, mixed: MixedReport) -> np.ndarray:
        matrix = self.matrices.get(mixed.report_id)
        if matrix is None:
            raise ValidationError(f"no precomputed embeddings for report {mixed.report_id!r}")
        if matrix.shape[0] != len(mixed.chars):
            raise ValidationError(
                f"report {mixed.report_id!r}: {matrix.shape[0]} embedding rows "
                f"for {len(mixed.chars)} characters")
        return matrix

    def span_design(self, mixed: MixedReport, ranges):
        H = self.encode(mixed)
        return [pool_span(H, r) for r in ranges]

    def span_embeddings(self, design) -> np.ndarray:
        return np.stack(design)

    def params(self) -> dict[str, np.ndarray]:
        return {}


def baseline_backend(dim: int = 64, window: int = 2, seed: int = 0,
                     buckets: int = 4096) -> HashedWindowEncoder:
    return HashedWindowEncoder(dim=dim, window=window, buckets=buckets, seed=seed)


def external_backend(path) -> PrecomputedEncoder:
    return PrecomputedEncoder.from_file(path)
