"""Deterministic report segmenter: sentence splitting, motion-segment
mention tagging with spelling-variant normalization, rule-based grouping of
sentences to segments, and bundle construction.

The tagger is a finite-pattern system with two passes: an exact pass over
the variant grammar (C3-C4, C3-4, C3/4, C3_C4, C34, C7-T1, ...) and a
conservative fuzzy pass that recovers tokens carrying a single OCR
corruption when the remaining characters plus the adjacency rule (j = i+1)
uniquely determine the segment. Lumbar/thoracic level pairs are recognized
and mapped to OUT_OF_SCOPE; non-adjacent cervical ranges (e.g. C2-C7) are
consumed, logged and produce no mention.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from spinemtl.core import (
    IN_SCOPE_SEGMENTS,
    TASKS,
    MotionSegment,
    PathologyTask,
    Report,
    SegmentBundle,
    Sentence,
    SeverityLabel,
)

logger = logging.getLogger(__name__)

_TERMINATORS = ".!?"

# Adjacent cervical pairs keyed by lower level; C7's partner is T1.
_PAIR_BY_LOWER = {
    2: MotionSegment.C2C3,
    3: MotionSegment.C3C4,
    4: MotionSegment.C4C5,
    5: MotionSegment.C5C6,
    6: MotionSegment.C6C7,
    7: MotionSegment.C7T1,
}

_BOUND_L = r"(?<![A-Za-z0-9])"
_BOUND_R = r"(?![A-Za-z0-9])"

# Exact variant grammar. Alternatives: separator forms (C3-C4, C3-4, C3/C4,
# C3_C4, C7-T1, ...) and compact forms (C34, C3C4, C7T1).
_CERVICAL_EXACT = (
    r"[Cc](?P<i1>\d)\s?(?P<sep>[-_/])\s?(?:[Cc](?P<j1>\d)|[Tt](?P<t1>1)|(?P<j2>\d))"
    r"|[Cc](?P<i2>\d)(?:[Cc](?P<j3>\d)|[Tt](?P<t2>1)|(?P<j4>\d))"
)

# Lumbar/thoracic/sacral level pairs (L4-L5, L45, T11-T12, T12-L1, L5-S1).
_OOS_PAIR = r"[LlTt]\d{1,2}(?:\s?[-_/]\s?)?(?:[LlTtSs]\d{1,2}|\d{1,2})"

_MASTER_RE = re.compile(
    _BOUND_L + r"(?:(?P<cerv>" + _CERVICAL_EXACT + r")|(?P<oos>" + _OOS_PAIR + r"))" + _BOUND_R
)

# Header form "Cx-Cy:" (any exact variant spelling followed by a colon) at
# sentence start; used both by the splitter's colon protection rationale and
# as the default carry-forward trigger.
DEFAULT_HEADER_PATTERN = r"^\s*(?:" + _CERVICAL_EXACT + r")\s*:"

_LIST_MARKER_RE = re.compile(r"^\s*\d{1,3}\.$")


@dataclass(frozen=True)
class SegmentMention:
    """One tagged motion-segment token within a sentence."""

    raw: str
    canonical: MotionSegment
    span: tuple[int, int]


@dataclass(frozen=True)
class GroupingRuleConfig:
    carry_forward: bool = True
    header_pattern: str = DEFAULT_HEADER_PATTERN

    def __post_init__(self):
        re.compile(self.header_pattern)


@dataclass(frozen=True)
class SentenceAssignment:
    """Audit record: which groups a sentence landed in and why."""

    sentence: Sentence
    segments: tuple[MotionSegment, ...]
    rule: str  # "mention" | "out-of-scope" | "carry-forward" | "none"


# ---------------------------------------------------------------------------
# Sentence splitting
# ---------------------------------------------------------------------------


def split_sentences(report: Report) -> list[Sentence]:
    """Split a report into sentences with byte spans into the report text.

    Boundaries: sentence-final punctuation (. ! ?) followed by whitespace or
    end of text, and newlines (list-item reports). A period closing a
    line-initial list marker ("3.") does not terminate; ":" never does.
    """
    text = report.text
    sentences: list[Sentence] = []
    pieces: list[tuple[int, int]] = []  # char spans, untrimmed
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            pieces.append((start, i))
            start = i + 1
        elif ch in _TERMINATORS and (i + 1 == n or text[i + 1].isspace()):
            if not (ch == "." and _LIST_MARKER_RE.match(text[start : i + 1])):
                pieces.append((start, i + 1))
                start = i + 1
        i += 1
    if start < n:
        pieces.append((start, n))

    idx = 0
    for s, e in pieces:
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        if s == e:
            continue
        span = (_byte_offset(text, s), _byte_offset(text, e))
        sentences.append(Sentence(report.report_id, idx, text[s:e], span))
        idx += 1
    return sentences


def _byte_offset(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


# ---------------------------------------------------------------------------
# Mention tagging
# ---------------------------------------------------------------------------


def _classify_exact(m: re.Match) -> tuple[str, MotionSegment | None]:
    """Map an exact-grammar match to ('mention', segment), ('oos', ...),
    ('ignored', None) for plausible multi-level ranges (C2-C7, C2-T1) and
    unresolvable digit pairs, or ('reopen', None) for compact non-adjacent
    digits (left open so the fuzzy pass may reinterpret a corrupted
    separator, e.g. 'C37C4').

    A digit pair where exactly one digit is a plausible level position is
    resolved as a mention: only one single-character story explains it
    (C9-C5 can only be C4-C5 with its first digit corrupted), whereas both
    digits plausible reads as a range or an ambiguous corruption.
    """
    if m.group("oos") is not None:
        return "oos", MotionSegment.OUT_OF_SCOPE
    compact = m.group("i2") is not None
    i = int(m.group("i2") if compact else m.group("i1"))
    if (m.group("t1") or m.group("t2")) is not None:
        if i == 7:
            return "mention", MotionSegment.C7T1
        if i in (0, 1, 8, 9):
            return "mention", MotionSegment.C7T1  # only C7 partners T1
        # i in 2..6: explicit form reads as a full range (e.g. C2-T1);
        # compact is ambiguous with a separator-dropped range
        return ("reopen" if compact else "ignored"), None
    j_str = next(g for g in ("j1", "j2", "j3", "j4") if m.group(g) is not None)
    j = int(m.group(j_str))
    if j == i + 1 and 2 <= i <= 6:
        return "mention", _PAIR_BY_LOWER[i]
    i_ok = 2 <= i <= 6
    j_ok = 3 <= j <= 7
    if i_ok != j_ok:
        seg = _PAIR_BY_LOWER[i] if i_ok else _PAIR_BY_LOWER[j - 1]
        return "mention", seg
    return ("reopen" if compact else "ignored"), None


def _strict_exact_segment(m: re.Match) -> MotionSegment | None:
    """The mention branch only: an exact-variant token that names one of the
    six segments outright. Used by the boundary-relaxed recovery patterns."""
    compact = m.group("i2") is not None
    i = int(m.group("i2") if compact else m.group("i1"))
    if (m.group("t1") or m.group("t2")) is not None:
        return MotionSegment.C7T1 if i == 7 else None
    j_str = next(g for g in ("j1", "j2", "j3", "j4") if m.group(g) is not None)
    j = int(m.group(j_str))
    if j == i + 1 and 2 <= i <= 6:
        return _PAIR_BY_LOWER[i]
    return None


# Fuzzy recovery patterns: each tolerates exactly one corrupted character
# (inside the token or immediately beside it) and must still pin the segment
# through adjacency. Real lumbar/thoracic tokens never reach these handlers:
# the exact pass consumes them first, and cross-region pairs (T6-C7) name no
# joint that exists, so a cervical-adjacent reading is the only valid one.
# Tuples are (compiled regex, handler(match) -> MotionSegment | None).


def _fz_sep(m):
    i, j = int(m.group(1)), int(m.group(2))
    return _PAIR_BY_LOWER.get(i) if j == i + 1 and 2 <= i <= 6 else None


def _fz_sep_t1(m):
    return MotionSegment.C7T1


def _fz_j_corrupt(m):
    i = int(m.group(1))
    return _PAIR_BY_LOWER.get(i) if 2 <= i <= 6 else None


def _fz_i_corrupt(m):
    j = int(m.group(1))
    return _PAIR_BY_LOWER.get(j - 1) if 3 <= j <= 7 else None


_FUZZY = [
    # a corruption just beside an intact token breaks only one boundary
    # guard, so retry the exact grammar with one side relaxed: AtqC3-C4,
    # C7T18 (a corrupted neighbor, not a corrupted token)
    (re.compile(r"(?:" + _CERVICAL_EXACT + r")" + _BOUND_R), _strict_exact_segment),
    (re.compile(_BOUND_L + r"(?:" + _CERVICAL_EXACT + r")"), _strict_exact_segment),
    # corrupted separator between intact atoms: C3qC4, C37C4, C3q4, C7.T1, C7q1
    (re.compile(_BOUND_L + r"[Cc](\d).[Cc](\d)" + _BOUND_R), _fz_sep),
    (re.compile(_BOUND_L + r"[Cc](\d)[^-_/\s](\d)" + _BOUND_R), _fz_sep),
    (re.compile(_BOUND_L + r"[Cc]7.[Tt]1" + _BOUND_R), _fz_sep_t1),
    (re.compile(_BOUND_L + r"[Cc]7[A-Za-z]1" + _BOUND_R), _fz_sep_t1),
    # corrupted or dropped second level: C3-Cq, C3-C, C3-, C3-q, C3Ct, C3C,
    # C5g, C7-Tq, C7-T, C7Tq, C7T
    (re.compile(_BOUND_L + r"[Cc](\d)[-_/][Cc](?:[^\s0-9A-Za-z]|[A-Za-z])?" + _BOUND_R), _fz_j_corrupt),
    (re.compile(_BOUND_L + r"[Cc](\d)[-_/][A-Za-z]?" + _BOUND_R), _fz_j_corrupt),
    (re.compile(_BOUND_L + r"[Cc](\d)[Cc][A-Za-z]?" + _BOUND_R), _fz_j_corrupt),
    (re.compile(_BOUND_L + r"[Cc](\d)[A-Za-z]" + _BOUND_R), _fz_j_corrupt),
    (re.compile(_BOUND_L + r"[Cc]7[-_/][Tt](?:[^\s1])?" + _BOUND_R), _fz_sep_t1),
    (re.compile(_BOUND_L + r"[Cc]7[Tt][^\s1]?" + _BOUND_R), _fz_sep_t1),
    # corrupted or dropped first level: Cq-C4, C-C4, Cu-5, C-5, ChC7, CC7,
    # Cq-T1, C-T1, CxT1, CT1
    (re.compile(_BOUND_L + r"[Cc][^\s0-9]?[-_/][Cc](\d)" + _BOUND_R), _fz_i_corrupt),
    (re.compile(_BOUND_L + r"[Cc][A-Za-z]?[-_/](\d)" + _BOUND_R), _fz_i_corrupt),
    (re.compile(_BOUND_L + r"[Cc][A-Za-z]?[Cc](\d)" + _BOUND_R), _fz_i_corrupt),
    (re.compile(_BOUND_L + r"[Cc][^\s7]?[-_/][Tt]1" + _BOUND_R), _fz_sep_t1),
    (re.compile(_BOUND_L + r"[Cc][A-Za-z]?[Tt]1" + _BOUND_R), _fz_sep_t1),
    # corrupted second C: C3-x4 (T6-C7-style hybrids name no real joint, so
    # every letter is fair game)
    (re.compile(_BOUND_L + r"[Cc](\d)[-_/][A-Za-z](\d)" + _BOUND_R), _fz_sep),
    # corrupted or dropped leading C: x3-C4, 3-C4, q3-4, m34, s7-T1, 7-T1,
    # m7T1, 7T1; a bare digit pair (3-4, 34) stays untagged, it reads as a
    # number, and the letter-led compact form excludes C (exact handles it)
    (re.compile(_BOUND_L + r"[A-Za-z]?(\d)[-_/][Cc](\d)" + _BOUND_R), _fz_sep),
    (re.compile(_BOUND_L + r"[A-Za-z](\d)[-_/](\d)" + _BOUND_R), _fz_sep),
    (re.compile(_BOUND_L + r"[A-BD-Za-bd-z](\d)(\d)" + _BOUND_R), _fz_sep),
    (re.compile(_BOUND_L + r"[A-Za-z]?7[-_/][Tt]1" + _BOUND_R), _fz_sep_t1),
    (re.compile(_BOUND_L + r"[A-Za-z]?7[Tt]1" + _BOUND_R), _fz_sep_t1),
]


def level_token_spans(text: str) -> list[tuple[int, int]]:
    """Char spans of every token the exact level grammar recognizes. The
    noise model uses this to cap corruptions per level token."""
    return [m.span() for m in _MASTER_RE.finditer(text)]


def tag_mentions(sentence: Sentence | str) -> list[SegmentMention]:
    """Find all maximal non-overlapping motion-segment mentions.

    Returns in-scope segments plus OUT_OF_SCOPE for recognized non-cervical
    level pairs; canonical is never NO_SEGMENT. Explicit non-adjacent
    cervical ranges (C2-C7) are logged and produce no mention.
    """
    if isinstance(sentence, str):
        sentence = Sentence("", 0, sentence, (0, len(sentence.encode("utf-8"))))
    text = sentence.text
    mentions: list[SegmentMention] = []
    blocked: list[tuple[int, int]] = []  # spans the fuzzy pass must not touch
    for m in _MASTER_RE.finditer(text):
        kind, seg = _classify_exact(m)
        if kind in ("mention", "oos"):
            mentions.append(SegmentMention(m.group(0), seg, m.span()))
            blocked.append(m.span())
        elif kind == "ignored":
            logger.info(
                "ignoring non-adjacent level range %r in report %s sentence %d",
                m.group(0), sentence.report_id, sentence.index,
            )
            blocked.append(m.span())
        # "reopen": leave the span available to the fuzzy pass

    for pattern, handler in _FUZZY:
        for m in pattern.finditer(text):
            span = m.span()
            if any(s < span[1] and span[0] < e for s, e in blocked):
                continue
            seg = handler(m)
            if seg is None:
                continue
            mentions.append(SegmentMention(m.group(0), seg, span))
            blocked.append(span)

    mentions.sort(key=lambda sm: sm.span)
    return mentions


# ---------------------------------------------------------------------------
# Grouping
# ---------------------------------------------------------------------------


def assign_sentences(
    sentences: Sequence[Sentence], config: GroupingRuleConfig | None = None
) -> list[SentenceAssignment]:
    """Assign each sentence of one report to motion segments.

    A sentence with k >= 1 in-scope mentions goes to all k segments; one
    with only out-of-scope mentions goes to OUT_OF_SCOPE. A mention-free
    sentence continues the previous sentence's segments when carry_forward
    is on and that sentence began with a list-item header; otherwise it goes
    to NO_SEGMENT.
    """
    config = config or GroupingRuleConfig()
    header_re = re.compile(config.header_pattern)
    out: list[SentenceAssignment] = []
    prev_segments: tuple[MotionSegment, ...] = ()
    prev_was_header = False
    for s in sentences:
        ms = tag_mentions(s)
        in_scope: list[MotionSegment] = []
        for sm in ms:
            if sm.canonical.in_scope and sm.canonical not in in_scope:
                in_scope.append(sm.canonical)
        if in_scope:
            rec = SentenceAssignment(s, tuple(in_scope), "mention")
        elif ms:
            rec = SentenceAssignment(s, (MotionSegment.OUT_OF_SCOPE,), "out-of-scope")
        elif config.carry_forward and prev_was_header and prev_segments:
            rec = SentenceAssignment(s, prev_segments, "carry-forward")
        else:
            rec = SentenceAssignment(s, (MotionSegment.NO_SEGMENT,), "none")
        out.append(rec)
        prev_segments = tuple(in_scope)
        prev_was_header = header_re.match(s.text) is not None
    return out


def group_sentences(
    sentences: Sequence[Sentence], config: GroupingRuleConfig | None = None
) -> dict[MotionSegment, list[Sentence]]:
    """Group one report's sentences per motion segment (see assign_sentences)."""
    groups: dict[MotionSegment, list[Sentence]] = {}
    for rec in assign_sentences(sentences, config):
        for seg in rec.segments:
            groups.setdefault(seg, []).append(rec.sentence)
    return groups


# ---------------------------------------------------------------------------
# Bundle construction
# ---------------------------------------------------------------------------


def build_bundles(
    report: Report,
    groups: Mapping[MotionSegment, Sequence[Sentence]],
    labels: Mapping[MotionSegment, Mapping[PathologyTask, int]],
) -> list[SegmentBundle]:
    """Build one bundle per in-scope segment present in ``groups``.

    Bundle text is the space-joined sentence texts in document order. The
    NO_SEGMENT group, when present, is emitted as a sentinel bundle
    (all-zero labels) that is excluded from classifier corpora. A missing
    label for an emitted in-scope (segment, task) pair raises ValueError.
    """
    bundles: list[SegmentBundle] = []
    for seg in IN_SCOPE_SEGMENTS:
        sents = groups.get(seg)
        if not sents:
            continue
        text = " ".join(s.text for s in sorted(sents, key=lambda s: s.index))
        seg_labels = labels.get(seg)
        chosen: list[SeverityLabel] = []
        for task in TASKS:
            if seg_labels is None or task not in seg_labels:
                raise ValueError(
                    f"incomplete labels: report {report.report_id!r} segment "
                    f"{seg.value} is missing a {task.value} label"
                )
            chosen.append(SeverityLabel(task, int(seg_labels[task])))
        bundles.append(SegmentBundle(report.report_id, seg, text, tuple(chosen)))

    no_seg = groups.get(MotionSegment.NO_SEGMENT)
    if no_seg:
        text = " ".join(s.text for s in sorted(no_seg, key=lambda s: s.index))
        bundles.append(
            SegmentBundle.make(report.report_id, MotionSegment.NO_SEGMENT, text, (0, 0, 0, 0))
        )
    return bundles


def segment_report(
    report: Report,
    labels: Mapping[MotionSegment, Mapping[PathologyTask, int]],
    config: GroupingRuleConfig | None = None,
) -> tuple[list[SegmentBundle], list[SentenceAssignment]]:
    """Full per-report pipeline: split, group, bundle. Returns bundles plus
    the per-sentence assignment audit."""
    sentences = split_sentences(report)
    assignments = assign_sentences(sentences, config)
    groups: dict[MotionSegment, list[Sentence]] = {}
    for rec in assignments:
        for seg in rec.segments:
            groups.setdefault(seg, []).append(rec.sentence)
    return build_bundles(report, groups, labels), assignments


def mention_f1(
    gold: Sequence[Sequence[MotionSegment]], pred: Sequence[Sequence[MotionSegment]]
) -> float:
    """Mention-level F1 between gold and predicted segment multisets, one
    entry per scoring unit (a sentence, or a whole report when boundaries
    are unreliable). Matching is one-to-one within each unit."""
    if len(gold) != len(pred):
        raise ValueError("gold and pred must cover the same units")
    matched = n_gold = n_pred = 0
    for g, p in zip(gold, pred):
        n_gold += len(g)
        n_pred += len(p)
        remaining = list(p)
        for seg in g:
            if seg in remaining:
                remaining.remove(seg)
                matched += 1
    if n_gold + n_pred == 0:
        return 1.0
    return 2.0 * matched / (n_gold + n_pred)
