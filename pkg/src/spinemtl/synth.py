"""Synthetic labeled cervical-report corpus generator.

Reports are rendered from a small set of practice styles (header lines,
numbered lists, prose) using the level-token spellings the segmenter
normalizes. Per-segment labels are drawn to match configured per-task class
proportions exactly (rank quotas over latent scores), with a shared latent
severity factor coupling the four tasks so that co-occurring pathologies are
the norm rather than the exception. An optional OCR noise pass perturbs a
fraction of reports with character substitutions and drops (confusable glyph
pairs included) while gold labels stay attached to the clean semantics.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import json
import numpy as np

from spinemtl.core import (
    IN_SCOPE_SEGMENTS,
    TASKS,
    MotionSegment,
    PathologyTask,
    Report,
    SegmentBundle,
    write_bundles,
    write_reports,
)
from spinemtl.segmenter import level_token_spans

# Default per-task class counts behind the default marginals (none-to-mild /
# moderate / severe style orderings, most-benign class first).
DEFAULT_CLASS_COUNTS: dict[PathologyTask, tuple[int, ...]] = {
    PathologyTask.STENOSIS: (5488, 561, 178),
    PathologyTask.DISC: (2731, 2699, 797),
    PathologyTask.CORD: (5702, 525),
    PathologyTask.FORAMINAL: (5262, 965),
}


def _default_marginals() -> dict[PathologyTask, tuple[float, ...]]:
    out = {}
    for task, counts in DEFAULT_CLASS_COUNTS.items():
        total = sum(counts)
        out[task] = tuple(c / total for c in counts)
    return out


@dataclass(frozen=True)
class OcrNoiseConfig:
    char_sub_rate: float = 0.02
    char_drop_rate: float = 0.01
    confusion_pairs: tuple[tuple[str, str], ...] = (("l", "1"), ("O", "0"), ("m", "rn"))
    seed: int = 0

    def __post_init__(self):
        for name in ("char_sub_rate", "char_drop_rate"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")


@dataclass(frozen=True)
class GeneratorConfig:
    n_reports: int = 1578
    practices: int = 10
    ocr_fraction: float = 0.2
    class_marginals: Mapping[PathologyTask, tuple[float, ...]] = field(
        default_factory=_default_marginals
    )
    segments_per_report: tuple[int, int] = (4, 7)
    latent_coupling: float = 0.8
    noise: OcrNoiseConfig = field(default_factory=OcrNoiseConfig)
    seed: int = 0

    def __post_init__(self):
        if self.n_reports < 1:
            raise ValueError("n_reports must be >= 1")
        if self.practices < 1:
            raise ValueError("practices must be >= 1")
        if not 0.0 <= self.ocr_fraction <= 1.0:
            raise ValueError("ocr_fraction must be in [0, 1]")
        if not 0.0 <= self.latent_coupling <= 1.0:
            raise ValueError("latent_coupling must be in [0, 1]")
        lo, hi = self.segments_per_report
        if not 1 <= lo <= hi:
            raise ValueError("segments_per_report bounds must satisfy 1 <= lo <= hi")
        for task in TASKS:
            probs = self.class_marginals[task]
            if len(probs) != task.arity:
                raise ValueError(f"{task.value} needs {task.arity} class probabilities")
            if abs(sum(probs) - 1.0) > 1e-6:
                raise ValueError(f"{task.value} marginals must sum to 1")


@dataclass(frozen=True)
class GoldAssignment:
    """Per-sentence ground truth. ``segments`` is what the sentence is about
    (continuations inherit the segment of their section), while ``mentions``
    lists only segments named by a level token inside the sentence itself."""

    report_id: str
    sentence_index: int
    segments: tuple[MotionSegment, ...]
    mentions: tuple[MotionSegment, ...]


@dataclass(frozen=True)
class NoiseEvent:
    position: int
    op: str  # "sub" | "drop"
    original: str
    replacement: str


@dataclass(frozen=True)
class ReportProvenance:
    report_id: str
    practice: int
    ocr: bool
    noise_events: tuple[NoiseEvent, ...]


@dataclass(frozen=True)
class SynthCorpus:
    reports: list[Report]
    clean_reports: list[Report]
    bundles: list[SegmentBundle]
    assignments: list[GoldAssignment]
    provenance: list[ReportProvenance]


# ---------------------------------------------------------------------------
# Phrase banks: at least eight surface forms per class per task, each phrase
# confined to its own pathology so composed sentences stay label-consistent.
# ---------------------------------------------------------------------------

_STENOSIS_PHRASES = (
    (
        "no significant canal stenosis",
        "no spinal canal narrowing",
        "a patent central canal",
        "no central canal compromise",
        "preserved canal caliber",
        "no evidence of canal stenosis",
        "a widely patent spinal canal",
        "minimal if any canal narrowing",
        "borderline canal narrowing only",
    ),
    (
        "moderate canal stenosis",
        "moderate narrowing of the central canal",
        "moderate spinal canal stenosis",
        "moderate central canal compromise",
        "moderate canal encroachment",
        "moderate acquired canal narrowing",
        "moderate ventral canal narrowing",
        "moderate central stenosis",
    ),
    (
        "severe canal stenosis",
        "severe central canal narrowing",
        "marked spinal canal stenosis",
        "severe canal compromise",
        "high grade central canal stenosis",
        "critical canal narrowing",
        "severe acquired canal stenosis",
        "marked central canal encroachment",
    ),
)

_DISC_PHRASES = (
    (
        "no significant disc herniation",
        "a mild disc bulge",
        "minimal annular bulging",
        "preserved disc height",
        "no focal disc protrusion",
        "a shallow disc bulge",
        "an unremarkable intervertebral disc",
        "trace posterior disc bulging",
    ),
    (
        "a moderate disc bulge",
        "a moderate broad based disc protrusion",
        "a moderate posterior disc herniation",
        "a moderate disc osteophyte complex",
        "a moderate central disc protrusion",
        "moderate annular bulging",
        "a moderate paracentral disc protrusion",
        "a moderate posterior disc osteophyte ridge",
    ),
    (
        "a large disc extrusion",
        "a severe disc herniation",
        "a large central disc protrusion",
        "a severe disc osteophyte complex",
        "a large broad based disc herniation",
        "a severe posterior disc extrusion",
        "a large paracentral disc herniation",
        "a severe disc protrusion with annular disruption",
    ),
)

_CORD_PHRASES = (
    (
        "no cord compression",
        "a normal cord signal and caliber",
        "no cord signal abnormality",
        "an unremarkable spinal cord",
        "no mass effect on the cord",
        "a preserved spinal cord contour",
        "no cord impingement",
        "normal cord morphology",
    ),
    (
        "mild flattening of the ventral cord",
        "cord compression with early myelomalacia",
        "severe cord compression",
        "mild cord impingement",
        "flattening of the spinal cord",
        "compression of the spinal cord",
        "mild deformity of the ventral cord",
        "cord compression with signal change",
    ),
)

_FORAMINAL_PHRASES = (
    (
        "no foraminal narrowing",
        "patent neural foramina",
        "no significant foraminal stenosis",
        "widely patent foramina",
        "mild left foraminal narrowing",
        "moderate right foraminal narrowing",
        "mild bilateral foraminal encroachment",
        "no high grade foraminal compromise",
        "moderate left foraminal narrowing",
    ),
    (
        "severe left foraminal stenosis",
        "severe right foraminal narrowing",
        "severe bilateral foraminal stenosis",
        "high grade foraminal narrowing",
        "severe neural foraminal compromise",
        "critical right foraminal stenosis",
        "severe bilateral neural foraminal narrowing",
        "severe foraminal encroachment",
    ),
)

PHRASE_BANKS: dict[PathologyTask, tuple[tuple[str, ...], ...]] = {
    PathologyTask.STENOSIS: _STENOSIS_PHRASES,
    PathologyTask.DISC: _DISC_PHRASES,
    PathologyTask.CORD: _CORD_PHRASES,
    PathologyTask.FORAMINAL: _FORAMINAL_PHRASES,
}

_PREAMBLES = (
    "Cervical spine MRI without contrast.",
    "Sagittal and axial T2 weighted sequences were obtained.",
    "Multiplanar imaging of the cervical spine was performed.",
    "Clinical history includes neck pain with radiculopathy.",
    "Technique: routine cervical protocol.",
    "Comparison: none available.",
)

_IMPRESSIONS = (
    "Impression: multilevel degenerative changes as described above.",
    "Impression: degenerative spondylosis as detailed by level.",
    "Impression: findings described by motion segment above.",
    "Impression: chronic degenerative disease without acute abnormality.",
)

_EXTRA_CONTINUATIONS = (
    "No additional abnormality at this level.",
    "Facet joints are preserved at this level.",
    "No other significant finding at this level.",
    "Endplates appear intact at this level.",
)

_OOS_SENTENCES = (
    "Visualized upper thoracic levels including T1-T2 are unremarkable.",
    "Partially imaged T2-T3 level appears normal.",
)

# Practice styles: (layout, spelling). Layouts: "header" emits "SEG: ..."
# lines with occasional carried continuation sentences; "numbered" emits
# "i. SEG: ..." list lines; "prose" folds the level token into the sentence.
_PRACTICE_STYLES = (
    ("header", "canonical"),
    ("header", "dashdigit"),
    ("header", "lowercase"),
    ("numbered", "canonical"),
    ("numbered", "compact"),
    ("prose", "canonical"),
    ("prose", "slash"),
    ("prose", "compact"),
    ("header", "underscore"),
    ("prose", "alnum"),
)


def _spell(segment: MotionSegment, style: str) -> str:
    canonical = segment.value  # e.g. "C3-C4", "C7-T1"
    i, letter, j = canonical[1], canonical[3], canonical[4]
    if style == "canonical":
        return canonical
    if style == "lowercase":
        return canonical.lower()
    if style == "dashdigit":
        return canonical if letter == "T" else f"C{i}-{j}"
    if style == "compact":
        return f"C{i}T1" if letter == "T" else f"C{i}{j}"
    if style == "alnum":
        return f"C{i}{letter}{j}"
    if style == "slash":
        return f"C{i}/{letter}{j}"
    if style == "underscore":
        return f"C{i}_{letter}{j}"
    raise ValueError(f"unknown spelling style {style!r}")


def _cap(phrase: str) -> str:
    return phrase[0].upper() + phrase[1:]


# ---------------------------------------------------------------------------
# Label assignment: exact per-task marginals with cross-task coupling
# ---------------------------------------------------------------------------


def _class_quotas(n: int, probs: Sequence[float]) -> list[int]:
    raw = np.asarray(probs, dtype=np.float64) * n
    counts = np.floor(raw).astype(np.int64)
    frac = raw - counts
    short = n - int(counts.sum())
    for idx in np.argsort(-frac, kind="stable")[:short]:
        counts[idx] += 1
    return counts.tolist()


def _assign_labels(
    n_slots: int, config: GeneratorConfig, rng: np.random.Generator
) -> np.ndarray:
    """(n_slots, 4) class indices. Each task's class counts hit the quota
    exactly; a shared latent score per slot couples severities across tasks."""
    rho = config.latent_coupling
    shared = rng.normal(size=n_slots)
    labels = np.zeros((n_slots, len(TASKS)), dtype=np.int64)
    for t, task in enumerate(TASKS):
        score = rho * shared + np.sqrt(1.0 - rho * rho) * rng.normal(size=n_slots)
        quotas = _class_quotas(n_slots, config.class_marginals[task])
        order = np.argsort(-score, kind="stable")  # most severe first
        pos = 0
        for cls in range(task.arity - 1, -1, -1):
            take = quotas[cls]
            labels[order[pos : pos + take], t] = cls
            pos += take
    return labels


# ---------------------------------------------------------------------------
# OCR noise
# ---------------------------------------------------------------------------

_SUB_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"


def inject_ocr_noise_with_events(
    text: str, config: OcrNoiseConfig
) -> tuple[str, list[NoiseEvent]]:
    """Character-level substitutions and drops, deterministic per seed.

    Confusable glyph pairs replace each other when hit; other substitutions
    draw from a lowercase-plus-digit alphabet. Level tokens absorb at most
    one corruption each. Output length stays within [0.95, 1.0] of input:
    drops (and shrinking confusions) spend a removal budget, and growing
    confusions are only allowed against slack already removed.
    """
    if not text:
        return text, []
    sub_map: dict[str, str] = {}
    for a, b in config.confusion_pairs:
        sub_map[a] = b
        sub_map[b] = a
    multi_sources = sorted((s for s in sub_map if len(s) > 1), key=len, reverse=True)

    span_of: dict[int, int] = {}
    for sid, (s, e) in enumerate(level_token_spans(text)):
        for i in range(s, e):
            span_of[i] = sid
    used_spans: set[int] = set()

    rng = np.random.default_rng(config.seed)
    n = len(text)
    budget = int(np.floor(0.05 * n))
    net_removed = 0  # chars removed minus chars inserted so far
    out: list[str] = []
    events: list[NoiseEvent] = []
    i = 0
    while i < n:
        ch = text[i]
        sid = span_of.get(i)
        if sid is not None and sid in used_spans:
            out.append(ch)
            i += 1
            continue
        r = rng.random()
        if r < config.char_drop_rate:
            if net_removed + 1 <= budget:
                events.append(NoiseEvent(i, "drop", ch, ""))
                net_removed += 1
                if sid is not None:
                    used_spans.add(sid)
                i += 1
                continue
            out.append(ch)
            i += 1
        elif r < config.char_drop_rate + config.char_sub_rate:
            src, rep = ch, None
            for cand in multi_sources:
                if text.startswith(cand, i):
                    src, rep = cand, sub_map[cand]
                    break
            if rep is None:
                rep = sub_map.get(ch)
            if rep is None:
                others = _SUB_ALPHABET.replace(ch, "")
                rep = others[rng.integers(0, len(others))]
            delta = len(src) - len(rep)  # positive when text shrinks
            if net_removed + delta < 0 or net_removed + delta > budget:
                out.append(ch)
                i += 1
                continue
            events.append(NoiseEvent(i, "sub", src, rep))
            net_removed += delta
            out.append(rep)
            if sid is not None:
                used_spans.add(sid)
            i += len(src)
        else:
            out.append(ch)
            i += 1
    return "".join(out), events


def inject_ocr_noise(text: str, config: OcrNoiseConfig) -> str:
    noised, _ = inject_ocr_noise_with_events(text, config)
    return noised


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------


def _compose_findings(
    labels: Mapping[PathologyTask, int], rng: np.random.Generator
) -> tuple[str, str | None]:
    """One or two clause groups covering all four tasks; the second group,
    when present, becomes a separate (carried) sentence."""
    phrase = {
        task: PHRASE_BANKS[task][labels[task]][
            rng.integers(0, len(PHRASE_BANKS[task][labels[task]]))
        ]
        for task in TASKS
    }
    disc = phrase[PathologyTask.DISC]
    sten = phrase[PathologyTask.STENOSIS]
    cord = phrase[PathologyTask.CORD]
    foram = phrase[PathologyTask.FORAMINAL]
    form = rng.integers(0, 3)
    if form == 0:
        return f"{disc} causing {sten}; {cord} with {foram}", None
    if form == 1:
        return f"{disc} with {sten}", f"{_cap(cord)}; {foram}."
    return f"{disc} and {sten}, with {cord} and {foram}", None


def _render_report(
    report_id: str,
    practice: int,
    segments: Sequence[MotionSegment],
    extra_segment: MotionSegment | None,
    labels: Mapping[MotionSegment, dict[PathologyTask, int]],
    rng: np.random.Generator,
) -> tuple[str, list[str], list[tuple[MotionSegment, ...]]]:
    """Returns (text, sentences, per-sentence gold segment tuples)."""
    layout, spelling = _PRACTICE_STYLES[practice % len(_PRACTICE_STYLES)]
    sentences: list[str] = []
    gold: list[tuple[MotionSegment, ...]] = []
    gold_mentions: list[tuple[MotionSegment, ...]] = []

    def add(sentence: str, segs: tuple[MotionSegment, ...],
            mentions: tuple[MotionSegment, ...]):
        sentences.append(sentence)
        gold.append(segs)
        gold_mentions.append(mentions)

    for k in range(1 + int(rng.random() < 0.5)):
        add(_PREAMBLES[rng.integers(0, len(_PREAMBLES))],
            (MotionSegment.NO_SEGMENT,), ())

    items: list[tuple[MotionSegment, bool]] = [(seg, False) for seg in segments]
    if extra_segment is not None:
        at = [s for s, _ in items].index(extra_segment) + 1
        items.insert(at, (extra_segment, True))

    line_no = 0
    for pos, (seg, is_extra) in enumerate(items):
        token = _spell(seg, spelling)
        last = pos == len(items) - 1
        if is_extra:
            body = _EXTRA_CONTINUATIONS[rng.integers(0, len(_EXTRA_CONTINUATIONS))][:-1]
            body = body[0].lower() + body[1:]
            cont = None
        else:
            body, cont = _compose_findings(labels[seg], rng)
        if layout == "numbered":
            line_no += 1
            add(f"{line_no}. {token}: {_cap(body)}.", (seg,), (seg,))
            # list layout cannot carry continuations; fold them in
            if cont is not None:
                sentences[-1] = sentences[-1][:-1] + f"; {cont[0].lower() + cont[1:-1]}."
        elif layout == "header":
            add(f"{token}: {_cap(body)}.", (seg,), (seg,))
            if last and cont is None:
                # a bare trailing header line would swallow the impression
                # via carry-forward, so always close with a continuation
                cont = _EXTRA_CONTINUATIONS[rng.integers(0, len(_EXTRA_CONTINUATIONS))]
            if cont is not None:
                add(cont, (seg,), ())
        else:
            opener = rng.integers(0, 3)
            if opener == 0:
                add(f"At {token}, there is {body}.", (seg,), (seg,))
            elif opener == 1:
                add(f"The {token} level demonstrates {body}.", (seg,), (seg,))
            else:
                add(f"{token} shows {body}.", (seg,), (seg,))
            if cont is not None:
                sentences[-1] = sentences[-1][:-1] + f", and {cont[0].lower() + cont[1:-1]}."

    if rng.random() < 0.15:
        add(_OOS_SENTENCES[rng.integers(0, len(_OOS_SENTENCES))],
            (MotionSegment.OUT_OF_SCOPE,), (MotionSegment.OUT_OF_SCOPE,))
    add(_IMPRESSIONS[rng.integers(0, len(_IMPRESSIONS))],
        (MotionSegment.NO_SEGMENT,), ())

    joiner = "\n" if layout in ("header", "numbered") else " "
    return joiner.join(sentences), sentences, gold, gold_mentions


# ---------------------------------------------------------------------------
# Corpus generation
# ---------------------------------------------------------------------------


def generate_corpus(config: GeneratorConfig) -> SynthCorpus:
    """Deterministic corpus of reports with gold bundles, gold per-sentence
    segment assignments, and per-report provenance."""
    rng = np.random.default_rng(config.seed)
    lo, hi = config.segments_per_report
    n_avail = len(IN_SCOPE_SEGMENTS)

    plan: list[tuple[str, int, list[MotionSegment], MotionSegment | None]] = []
    slot_count = 0
    width = max(4, len(str(config.n_reports)))
    for r in range(config.n_reports):
        report_id = f"R{r + 1:0{width}d}"
        practice = int(rng.integers(0, config.practices))
        k = int(rng.integers(lo, hi + 1))
        distinct = min(k, n_avail)
        idxs = sorted(rng.choice(n_avail, size=distinct, replace=False).tolist())
        segs = [IN_SCOPE_SEGMENTS[i] for i in idxs]
        extra = None
        if k > n_avail:
            extra = segs[int(rng.integers(0, len(segs)))]
        plan.append((report_id, practice, segs, extra))
        slot_count += len(segs)

    label_matrix = _assign_labels(slot_count, config, rng)

    n_ocr = int(round(config.ocr_fraction * config.n_reports))
    ocr_ids = set(rng.choice(config.n_reports, size=n_ocr, replace=False).tolist())

    reports: list[Report] = []
    clean_reports: list[Report] = []
    bundles: list[SegmentBundle] = []
    assignments: list[GoldAssignment] = []
    provenance: list[ReportProvenance] = []

    slot = 0
    for r, (report_id, practice, segs, extra) in enumerate(plan):
        labels: dict[MotionSegment, dict[PathologyTask, int]] = {}
        for seg in segs:
            labels[seg] = {task: int(label_matrix[slot, t]) for t, task in enumerate(TASKS)}
            slot += 1

        text, sentences, gold, gold_mentions = _render_report(
            report_id, practice, segs, extra, labels, rng)
        clean_reports.append(Report(report_id, text, ocr_flag=False))

        for idx, segs_of_sentence in enumerate(gold):
            assignments.append(GoldAssignment(
                report_id, idx, segs_of_sentence, gold_mentions[idx]))

        by_segment: dict[MotionSegment, list[str]] = {}
        for sentence, segs_of_sentence in zip(sentences, gold):
            for seg in segs_of_sentence:
                by_segment.setdefault(seg, []).append(sentence)
        for seg in IN_SCOPE_SEGMENTS:
            if seg in by_segment:
                bundles.append(
                    SegmentBundle.make(
                        report_id, seg, " ".join(by_segment[seg]), labels[seg]
                    )
                )
        if MotionSegment.NO_SEGMENT in by_segment:
            bundles.append(
                SegmentBundle.make(
                    report_id,
                    MotionSegment.NO_SEGMENT,
                    " ".join(by_segment[MotionSegment.NO_SEGMENT]),
                    (0, 0, 0, 0),
                )
            )

        noise_seed = int(rng.integers(0, 2**63 - 1))
        if r in ocr_ids:
            noise_cfg = replace(config.noise, seed=noise_seed)
            noised, events = inject_ocr_noise_with_events(text, noise_cfg)
            reports.append(Report(report_id, noised, ocr_flag=True))
            provenance.append(ReportProvenance(report_id, practice, True, tuple(events)))
        else:
            reports.append(Report(report_id, text, ocr_flag=False))
            provenance.append(ReportProvenance(report_id, practice, False, ()))

    return SynthCorpus(reports, clean_reports, bundles, assignments, provenance)


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def write_corpus(corpus: SynthCorpus, out_dir: str | Path) -> dict[str, Path]:
    """Write the corpus as JSONL files; returns the path of each artifact."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "reports": out_dir / "reports.jsonl",
        "reports_clean": out_dir / "reports_clean.jsonl",
        "bundles": out_dir / "bundles.jsonl",
        "assignments": out_dir / "assignments.jsonl",
        "provenance": out_dir / "provenance.jsonl",
    }
    write_reports(paths["reports"], corpus.reports)
    write_reports(paths["reports_clean"], corpus.clean_reports)
    write_bundles(paths["bundles"], corpus.bundles)
    with paths["assignments"].open("w", encoding="utf-8") as f:
        for a in corpus.assignments:
            f.write(json.dumps({
                "report_id": a.report_id,
                "sentence_index": a.sentence_index,
                "segments": [s.value for s in a.segments],
                "mentions": [s.value for s in a.mentions],
            }) + "\n")
    with paths["provenance"].open("w", encoding="utf-8") as f:
        for p in corpus.provenance:
            f.write(json.dumps({
                "report_id": p.report_id,
                "practice": p.practice,
                "ocr": p.ocr,
                "noise_events": [
                    {"position": e.position, "op": e.op,
                     "original": e.original, "replacement": e.replacement}
                    for e in p.noise_events
                ],
            }) + "\n")
    return paths
