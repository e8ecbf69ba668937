"""Character-level diff of draft/revised report pairs and BIO-tagged merging.

A pair is diffed with a longest-common-subsequence scan, the edit material is
kept in a single mixed character sequence, and each maximal edited region
becomes one typed revised span:

  deletion  - characters the reviser removed from the draft
  addition  - characters the reviser added
  revision  - removed characters immediately followed by their replacement
              (deleted text first, then the rewrite)

The merge is lossless: `reconstruct` recovers both original texts exactly.

The DP inner loop lives in a compiled extension when available; set
SPANQA_PURE_PYTHON=1 to force the pure-Python kernel.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .types import ReportPair, ValidationError

if os.environ.get("SPANQA_PURE_PYTHON"):
    from . import _lcs_py as _kernel
else:
    try:
        from . import _lcs_fast as _kernel  # type: ignore[no-redef]
    except ImportError:
        from . import _lcs_py as _kernel  # type: ignore[no-redef]

KEEP, DELETE, INSERT = 0, 1, 2

DELETION = "deletion"
ADDITION = "addition"
REVISION = "revision"


def kernel_name() -> str:
    """Which LCS kernel is active ('compiled' or 'python')."""
    return "compiled" if _kernel.__name__.endswith("_lcs_fast") else "python"


@dataclass(frozen=True)
class EditRun:
    """A maximal run of one edit kind.

    Offsets are the cursor positions in the draft (junior) and revision
    (senior) texts at the start of the run.
    """

    kind: str  # keep | delete | insert
    chars: str
    junior_offset: int
    senior_offset: int


EditScript = list[EditRun]


@dataclass
class RevisedSpan:
    """One edited region of the mixed report, addressed as [start, end)."""

    start: int
    end: int
    kind: str  # deletion | addition | revision
    deleted: str
    inserted: str
    label: int | None = None
    score: float | None = None

    @property
    def range(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass
class MixedReport:
    report_id: str
    chars: str
    tags: str  # per-character B/I/O
    spans: list[RevisedSpan] = field(default_factory=list)

    def __len__(self):
        return len(self.chars)


def lcs_diff(junior: str, senior: str) -> EditScript:
    """Diff two character sequences into maximal keep/delete/insert runs.

    Keep runs spell a longest common subsequence. Within each edit gap the
    delete run is emitted before the insert run.
    """
    ops = _kernel.lcs_ops(junior, senior)
    script: EditScript = []
    ji = si = 0
    gap_del: list[str] = []
    gap_ins: list[str] = []
    gap_j = gap_s = 0
    keep: list[str] = []
    keep_j = keep_s = 0

    def flush_keep():
        nonlocal keep
        if keep:
            script.append(EditRun("keep", "".join(keep), keep_j, keep_s))
            keep = []

    def flush_gap():
        nonlocal gap_del, gap_ins
        if gap_del:
            script.append(EditRun("delete", "".join(gap_del), gap_j, gap_s))
        if gap_ins:
            script.append(EditRun("insert", "".join(gap_ins), gap_j + len(gap_del), gap_s))
        gap_del = []
        gap_ins = []

    for op in ops:
        if op == KEEP:
            flush_gap()
            if not keep:
                keep_j, keep_s = ji, si
            keep.append(junior[ji])
            ji += 1
            si += 1
        else:
            flush_keep()
            if not gap_del and not gap_ins:
                gap_j, gap_s = ji, si
            if op == DELETE:
                gap_del.append(junior[ji])
                ji += 1
            else:
                gap_ins.append(senior[si])
                si += 1
    flush_keep()
    flush_gap()
    return script


def merge_reports(pair: ReportPair) -> MixedReport:
    """Merge a pair into one mixed report with B/I/O tags and typed spans."""
    script = lcs_diff(pair.junior, pair.senior)
    chars: list[str] = []
    tags: list[str] = []
    spans: list[RevisedSpan] = []

    i = 0
    while i < len(script):
        run = script[i]
        if run.kind == "keep":
            chars.append(run.chars)
            tags.append("O" * len(run.chars))
            i += 1
            continue
        if run.kind == "delete":
            deleted = run.chars
            inserted = ""
            if i + 1 < len(script) and script[i + 1].kind == "insert":
                inserted = script[i + 1].chars
                i += 1
        else:
            deleted = ""
            inserted = run.chars
        i += 1
        content = deleted + inserted
        start = sum(len(c) for c in chars)
        if deleted and inserted:
            kind = REVISION
        elif deleted:
            kind = DELETION
        else:
            kind = ADDITION
        spans.append(RevisedSpan(start, start + len(content), kind, deleted, inserted))
        chars.append(content)
        tags.append("B" + "I" * (len(content) - 1))

    return MixedReport(pair.id, "".join(chars), "".join(tags), spans)


def span_char_indices(mixed: MixedReport) -> list[tuple[int, int]]:
    """Span index ranges read off the tag sequence alone.

    A span starts at each B and ends before the next O or B tag.
    """
    _check_tags(mixed.tags)
    ranges = []
    start = None
    for i, t in enumerate(mixed.tags):
        if t == "B":
            if start is not None:
                ranges.append((start, i))
            start = i
        elif t == "O":
            if start is not None:
                ranges.append((start, i))
                start = None
    if start is not None:
        ranges.append((start, len(mixed.tags)))
    return ranges


def reconstruct(mixed: MixedReport) -> tuple[str, str]:
    """Recover (junior, senior) from a mixed report. Validates invariants."""
    _validate(mixed)
    junior: list[str] = []
    senior: list[str] = []
    pos = 0
    for span in mixed.spans:
        outside = mixed.chars[pos:span.start]
        junior.append(outside)
        senior.append(outside)
        junior.append(span.deleted)
        senior.append(span.inserted)
        pos = span.end
    tail = mixed.chars[pos:]
    junior.append(tail)
    senior.append(tail)
    return "".join(junior), "".join(senior)


def _check_tags(tags: str) -> None:
    prev = "O"
    for i, t in enumerate(tags):
        if t not in "BIO":
            raise ValidationError(f"invalid tag {t!r} at index {i}")
        if t == "I" and prev == "O":
            raise ValidationError(f"I tag at index {i} not preceded by B or I")
        prev = t


def _validate(mixed: MixedReport) -> None:
    if len(mixed.tags) != len(mixed.chars):
        raise ValidationError(
            f"report {mixed.report_id!r}: {len(mixed.tags)} tags for {len(mixed.chars)} chars"
        )
    ranges = span_char_indices(mixed)
    if ranges != [s.range for s in mixed.spans]:
        raise ValidationError(f"report {mixed.report_id!r}: span list disagrees with tags")
    for span in mixed.spans:
        if mixed.chars[span.start:span.end] != span.deleted + span.inserted:
            raise ValidationError(
                f"report {mixed.report_id!r}: span at {span.range} does not spell "
                "deleted+inserted content"
            )
        ok = {
            DELETION: span.deleted and not span.inserted,
            ADDITION: span.inserted and not span.deleted,
            REVISION: span.deleted and span.inserted,
        }.get(span.kind)
        if not ok:
            raise ValidationError(
                f"report {mixed.report_id!r}: span at {span.range} is not a valid {span.kind}"
            )
