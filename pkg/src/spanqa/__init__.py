"""Span-level quality assurance for draft/revised report pairs.

Pipeline: diff a draft against its revision, tag the edited spans, score each
span's importance with a weakly supervised classifier, and aggregate span
scores into a qualified/unqualified verdict.
"""

from .types import Dataset, ParseError, ReportPair, SpanLabelRecord, ValidationError
from .diffmerge import (
    EditRun,
    MixedReport,
    RevisedSpan,
    kernel_name,
    lcs_diff,
    merge_reports,
    reconstruct,
    span_char_indices,
)
from .corpus import (
    SynthesisConfig,
    generate_synthetic_corpus,
    load_report_pairs,
    load_span_labels,
    save_report_pairs,
    save_span_labels,
    split_dataset,
)
from .encoder import baseline_backend, external_backend, pool_span
from .classifier import SpanClassifier, otsu_threshold, score_span, span_loss
from .selftrain import (
    PseudoLabelState,
    TrainConfig,
    TrainingError,
    init_pseudo_labels,
    refresh_pseudo_labels,
    train,
    train_epoch,
)
from .model import SpanScoringModel, load_model, save_model
from .aggregate import QAResult, aggregate_average, aggregate_min, classify_report
from .metrics import ConfusionCounts, confusion, macro_metrics

__version__ = "0.1.0"

__all__ = [
    "Dataset", "ParseError", "ReportPair", "SpanLabelRecord", "ValidationError",
    "EditRun", "MixedReport", "RevisedSpan", "kernel_name", "lcs_diff",
    "merge_reports", "reconstruct", "span_char_indices",
    "SynthesisConfig", "generate_synthetic_corpus", "load_report_pairs",
    "load_span_labels", "save_report_pairs", "save_span_labels", "split_dataset",
    "baseline_backend", "external_backend", "pool_span",
    "SpanClassifier", "otsu_threshold", "score_span", "span_loss",
    "PseudoLabelState", "TrainConfig", "TrainingError", "init_pseudo_labels",
    "refresh_pseudo_labels", "train", "train_epoch",
    "SpanScoringModel", "load_model", "save_model",
    "QAResult", "aggregate_average", "aggregate_min", "classify_report",
    "ConfusionCounts", "confusion", "macro_metrics",
    "__version__",
]
