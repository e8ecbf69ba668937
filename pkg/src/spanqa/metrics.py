"""Macro-averaged evaluation over the two verdict classes.

Per class t (one-vs-rest):
    acc_t = (TP_t + TN_t) / total
    pre_t = TP_t / (TP_t + FP_t)        rec_t = TP_t / (TP_t + FN_t)
    f1_t  = 2 * pre_t * rec_t / (pre_t + rec_t)
Macro metrics average the per-class values over both classes and are
reported on a 0..100 scale. Undefined per-class precision/recall/F1
(zero denominator) counts as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

from .types import ValidationError


@dataclass(frozen=True)
class ClassCounts:
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class ConfusionCounts:
    per_class: dict[int, ClassCounts]
    total: int


def confusion(preds, golds) -> ConfusionCounts:
    preds, golds = list(preds), list(golds)
    if len(preds) != len(golds):
        raise ValidationError(f"{len(preds)} predictions for {len(golds)} gold labels")
    if not preds:
        raise ValidationError("cannot build a confusion matrix from no predictions")
    bad = {v for v in preds + golds if v not in (0, 1)}
    if bad:
        raise ValidationError(f"labels must be 0 or 1, got {sorted(bad)}")
    per_class = {}
    for cls in (0, 1):
        tp = sum(1 for p, g in zip(preds, golds) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(preds, golds) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(preds, golds) if p != cls and g == cls)
        tn = len(preds) - tp - fp - fn
        per_class[cls] = ClassCounts(tp, fp, tn, fn)
    return ConfusionCounts(per_class, len(preds))


def _safe_div(num, den) -> float:
    return num / den if den else 0.0


def macro_metrics(c: ConfusionCounts) -> dict[str, float]:
    accs, pres, recs, f1s = [], [], [], []
    for cls in (0, 1):
        cc = c.per_class[cls]
        accs.append((cc.tp + cc.tn) / c.total)
        pre = _safe_div(cc.tp, cc.tp + cc.fp)
        rec = _safe_div(cc.tp, cc.tp + cc.fn)
        pres.append(pre)
        recs.append(rec)
        f1s.append(_safe_div(2 * pre * rec, pre + rec))
    def mean100(vals):
        return 100.0 * sum(vals) / len(vals)
    return {"acc": mean100(accs), "pre": mean100(pres),
            "rec": mean100(recs), "f1": mean100(f1s)}
