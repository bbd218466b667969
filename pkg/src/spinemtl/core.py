"""Domain types shared across the pipeline: motion segments, severity tasks,
reports, sentences and per-segment classifier instances, plus the JSONL
corpus formats and a corpus validator.

Everything here is immutable after construction and safe to share across
workers. Constructors are deliberately permissive (a malformed bundle must
remain constructible so :func:`validate_corpus` can report it); code that
requires a well-formed value validates at the point of use.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence


class MotionSegment(enum.Enum):
    """Cervical motion segments plus the two bookkeeping buckets.

    Only the six adjacent-pair segments are classifier instances;
    NO_SEGMENT and OUT_OF_SCOPE exist for grouping bookkeeping.
    """

    C2C3 = "C2-C3"
    C3C4 = "C3-C4"
    C4C5 = "C4-C5"
    C5C6 = "C5-C6"
    C6C7 = "C6-C7"
    C7T1 = "C7-T1"
    NO_SEGMENT = "NO-SEGMENT"
    OUT_OF_SCOPE = "OUT-OF-SCOPE"

    @property
    def in_scope(self) -> bool:
        return self not in (MotionSegment.NO_SEGMENT, MotionSegment.OUT_OF_SCOPE)


IN_SCOPE_SEGMENTS: tuple[MotionSegment, ...] = tuple(
    s for s in MotionSegment if s.in_scope
)

SEGMENT_BY_NAME: dict[str, MotionSegment] = {s.value: s for s in MotionSegment}


class PathologyTask(enum.Enum):
    """The four severity-classification tasks, in canonical head order."""

    STENOSIS = "stenosis"
    DISC = "disc"
    CORD = "cord"
    FORAMINAL = "foraminal"

    @property
    def arity(self) -> int:
        return _ARITY[self]


# Canonical order everywhere: (stenosis, disc, cord, foraminal) with output
# widths (3, 3, 2, 2). A single fixed order removes index-mapping bugs.
TASKS: tuple[PathologyTask, ...] = (
    PathologyTask.STENOSIS,
    PathologyTask.DISC,
    PathologyTask.CORD,
    PathologyTask.FORAMINAL,
)
ARITIES: tuple[int, ...] = (3, 3, 2, 2)
_ARITY = dict(zip(TASKS, ARITIES))

TASK_BY_NAME: dict[str, PathologyTask] = {t.value: t for t in TASKS}

# Class 0 is always the clinically-insignificant bucket.
CLASS_NAMES: dict[PathologyTask, tuple[str, ...]] = {
    PathologyTask.STENOSIS: ("none_mild", "moderate", "severe"),
    PathologyTask.DISC: ("none_mild", "moderate", "severe"),
    PathologyTask.CORD: ("none", "mild_severe"),
    PathologyTask.FORAMINAL: ("none", "severe"),
}


@dataclass(frozen=True)
class SeverityLabel:
    """One task's gold class for a (report, segment) instance."""

    task: PathologyTask
    class_index: int

    @property
    def in_range(self) -> bool:
        return 0 <= self.class_index < self.task.arity


@dataclass(frozen=True)
class Report:
    report_id: str
    text: str
    ocr_flag: bool = False


@dataclass(frozen=True)
class Sentence:
    """One sentence of a report with its byte span into the report text."""

    report_id: str
    index: int
    text: str
    span: tuple[int, int]


@dataclass(frozen=True)
class SegmentBundle:
    """The classifier's instance: concatenated segment text plus all four labels.

    ``labels`` is always a 4-tuple in canonical task order. Bundles whose
    segment is NO_SEGMENT are emitted by the segmenter for auditability but
    never used as classifier instances (see :attr:`is_classifier_instance`).
    """

    report_id: str
    segment: MotionSegment
    text: str
    labels: tuple[SeverityLabel, ...]

    @classmethod
    def make(
        cls,
        report_id: str,
        segment: MotionSegment,
        text: str,
        classes: Mapping[PathologyTask, int] | Sequence[int],
    ) -> "SegmentBundle":
        if isinstance(classes, Mapping):
            tup = tuple(SeverityLabel(t, int(classes[t])) for t in TASKS)
        else:
            tup = tuple(SeverityLabel(t, int(c)) for t, c in zip(TASKS, classes))
        return cls(report_id, segment, text, tup)

    @property
    def is_classifier_instance(self) -> bool:
        return self.segment.in_scope

    def label_for(self, task: PathologyTask) -> SeverityLabel:
        for lab in self.labels:
            if lab.task is task:
                return lab
        raise KeyError(f"no label for task {task.value}")

    def class_indices(self) -> tuple[int, ...]:
        """Class indices in canonical task order."""
        return tuple(self.label_for(t).class_index for t in TASKS)


@dataclass(frozen=True)
class Violation:
    """One corpus-validation finding. Violations are data, not failures."""

    kind: str
    message: str
    report_id: str | None = None


# ---------------------------------------------------------------------------
# JSONL serialization. Field names match the type definitions; segments use
# the canonical hyphenated strings; class indices are plain integers.
# ---------------------------------------------------------------------------


def report_to_dict(r: Report) -> dict:
    return {"report_id": r.report_id, "text": r.text, "ocr_flag": r.ocr_flag}


def report_from_dict(d: Mapping) -> Report:
    return Report(str(d["report_id"]), str(d["text"]), bool(d.get("ocr_flag", False)))


def bundle_to_dict(b: SegmentBundle) -> dict:
    return {
        "report_id": b.report_id,
        "segment": b.segment.value,
        "text": b.text,
        "labels": {lab.task.value: lab.class_index for lab in b.labels},
    }


def bundle_from_dict(d: Mapping) -> SegmentBundle:
    seg = SEGMENT_BY_NAME[str(d["segment"])]
    labels = d["labels"]
    tup = tuple(SeverityLabel(t, int(labels[t.value])) for t in TASKS)
    return SegmentBundle(str(d["report_id"]), seg, str(d["text"]), tup)


def write_jsonl(path: str | Path, rows: Iterable[Mapping]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_reports(path: str | Path, reports: Iterable[Report]) -> None:
    write_jsonl(path, (report_to_dict(r) for r in reports))


def read_reports(path: str | Path) -> list[Report]:
    return [report_from_dict(d) for d in read_jsonl(path)]


def write_bundles(path: str | Path, bundles: Iterable[SegmentBundle]) -> None:
    write_jsonl(path, (bundle_to_dict(b) for b in bundles))


def read_bundles(path: str | Path) -> list[SegmentBundle]:
    return [bundle_from_dict(d) for d in read_jsonl(path)]


# ---------------------------------------------------------------------------
# Corpus validation
# ---------------------------------------------------------------------------


def validate_corpus(
    reports: Sequence[Report], bundles: Sequence[SegmentBundle]
) -> list[Violation]:
    """Check a corpus for structural violations.

    Returns an empty list iff the corpus is well-formed. Detected kinds:
    ``duplicate-id``, ``empty-text``, ``unknown-report``,
    ``class-out-of-range`` and ``incomplete-labels``.
    """
    violations: list[Violation] = []
    seen: set[str] = set()
    for r in reports:
        if r.report_id in seen:
            violations.append(
                Violation("duplicate-id", f"report_id {r.report_id!r} appears more than once", r.report_id)
            )
        seen.add(r.report_id)
        if not r.text:
            violations.append(Violation("empty-text", "report has empty text", r.report_id))

    for b in bundles:
        if b.report_id not in seen:
            violations.append(
                Violation("unknown-report", f"bundle references unknown report {b.report_id!r}", b.report_id)
            )
        if not b.text:
            violations.append(
                Violation("empty-text", f"bundle for {b.segment.value} has empty text", b.report_id)
            )
        covered = {lab.task for lab in b.labels}
        if len(b.labels) != len(TASKS) or covered != set(TASKS):
            violations.append(
                Violation("incomplete-labels", f"bundle for {b.segment.value} must carry exactly one label per task", b.report_id)
            )
        for lab in b.labels:
            if not lab.in_range:
                violations.append(
                    Violation(
                        "class-out-of-range",
                        f"{lab.task.value} class {lab.class_index} outside [0, {lab.task.arity})",
                        b.report_id,
                    )
                )
    return violations
