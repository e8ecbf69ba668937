"""Report-level verdicts from span importance scores.

Two aggregators: `average` (mean span score) and `minimum` (a single bad
span sinks the report). The verdict compares the aggregate strictly against
the threshold: qualified iff score > tau, so a score exactly at tau counts
as unqualified. Reports whose merge produces no spans are qualified by
definition with aggregate score 1.0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diffmerge
from .encoder import pool_span
from .model import SpanScoringModel
from .types import ReportPair, ValidationError

AGGREGATORS = ("average", "minimum")


@dataclass
class QAResult:
    report_id: str
    span_scores: list[float]
    aggregate_score: float
    verdict: int  # 1 qualified, 0 unqualified
    aggregator: str
    threshold: float


def aggregate_average(scores) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValidationError("cannot aggregate an empty score list")
    return float(scores.mean())


def aggregate_min(scores) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValidationError("cannot aggregate an empty score list")
    return float(scores.min())


def decide(report_id: str, span_scores, aggregator: str, threshold: float) -> QAResult:
    """Aggregate span scores and apply the strict threshold rule."""
    if aggregator not in AGGREGATORS:
        raise ValidationError(f"unknown aggregator {aggregator!r}; use one of {AGGREGATORS}")
    span_scores = [float(s) for s in span_scores]
    if not span_scores:
        return QAResult(report_id, [], 1.0, 1, aggregator, threshold)
    agg = aggregate_average(span_scores) if aggregator == "average" else aggregate_min(span_scores)
    return QAResult(report_id, span_scores, agg, int(agg > threshold), aggregator, threshold)


def classify_report(pair: ReportPair, model: SpanScoringModel,
                    aggregator: str = "average",
                    threshold: float | None = None) -> QAResult:
    """merge -> encode -> pool -> score each span -> aggregate -> verdict."""
    tau = model.threshold if threshold is None else threshold
    mixed = diffmerge.merge_reports(pair)
    if not mixed.spans:
        return decide(pair.id, [], aggregator, tau)
    H = model.backend.encode(mixed)
    embeddings = np.stack([pool_span(H, s.range) for s in mixed.spans])
    scores = model.classifier.scores(embeddings)
    return decide(pair.id, scores, aggregator, tau)
