import pytest

from spinemtl.core import IN_SCOPE_SEGMENTS, TASKS, MotionSegment, Report
from spinemtl.segmenter import (
    GroupingRuleConfig,
    assign_sentences,
    level_token_spans,
    mention_f1,
    segment_report,
    split_sentences,
    tag_mentions,
)

C = MotionSegment


def _single(text):
    mentions = tag_mentions(text)
    assert len(mentions) == 1, f"{text!r} -> {[m.raw for m in mentions]}"
    return mentions[0].canonical


# Exact spellings: every segment times each surface family.
EXACT_CASES = [
    ("C2-C3", C.C2C3), ("C23", C.C2C3), ("C2_C3", C.C2C3), ("C2/C3", C.C2C3),
    ("c2-c3", C.C2C3), ("C2-3", C.C2C3),
    ("C3-C4", C.C3C4), ("C34", C.C3C4), ("c34", C.C3C4),
    ("C4-C5", C.C4C5), ("C45", C.C4C5),
    ("C5-C6", C.C5C6), ("C56", C.C5C6), ("C5_C6", C.C5C6),
    ("C6-C7", C.C6C7), ("C67", C.C6C7),
    ("C7-T1", C.C7T1), ("C7T1", C.C7T1), ("c7-t1", C.C7T1),
]


@pytest.mark.parametrize("raw,expected", EXACT_CASES)
def test_exact_spellings(raw, expected):
    assert _single(f"At {raw} there is mild stenosis.") == expected


def test_invalid_pairs_are_not_mentions():
    for text in ("C1-C2", "C8-C9", "C3-C5", "C4-C3"):
        assert tag_mentions(f"At {text} no significant change.") == []


def test_non_cervical_levels_tag_out_of_scope():
    for text in ("L4-L5", "T1-T2", "T12-L1"):
        mentions = tag_mentions(f"At {text} no significant change.")
        assert [m.canonical for m in mentions] == [C.OUT_OF_SCOPE]


def test_bare_digits_are_not_mentions():
    # A number pair with no level anchor is too ambiguous to recover.
    assert tag_mentions("Measured 3-4 mm of subluxation.") == []
    assert tag_mentions("Slip of 34 percent noted.") == []


def test_spans_point_into_text():
    text = "Mild stenosis at C3-C4 and at C5/C6."
    for m in tag_mentions(text):
        lo, hi = m.span
        assert text[lo:hi] == m.raw


def test_level_token_spans_matches_tagging():
    text = "C2-C3: unremarkable. C6-C7: severe stenosis."
    spans = level_token_spans(text)
    assert len(spans) == 2


# Single-character corruption recovery. One invalid or mangled digit is
# recoverable when the partner digit still pins the level.
FUZZY_CASES = [
    ("C3~C4", C.C3C4),
    ("C3=C4", C.C3C4),
    ("C3xC4", C.C3C4),
    ("C3-CA", C.C3C4),
    ("C3-C", C.C3C4),
    ("CE-C4", C.C3C4),
    ("C-C4", C.C3C4),
    ("C2-C2", C.C2C3),
    ("C5-C9", C.C5C6),
    ("C7~T1", C.C7T1),
    ("C7-TI", C.C7T1),
    ("C7fT1", C.C7T1),
    ("G3-C4", C.C3C4),
    ("O34", C.C3C4),
    ("c56", C.C5C6),
]


@pytest.mark.parametrize("raw,expected", FUZZY_CASES)
def test_corruption_recovery(raw, expected):
    assert _single(f"At {raw} there is disc bulging.") == expected


def test_two_corrupt_digits_not_recovered():
    # Both digits invalid: no anchor left, stay silent.
    assert tag_mentions("At C9-C8 осмотр.") == []
    assert tag_mentions("At CX-CY there is narrowing.") == []


def test_split_sentences_spans():
    rep = Report("r", "FINDINGS: C2-C3: Mild narrowing. C3-C4: Severe stenosis noted.")
    sentences = split_sentences(rep)
    assert len(sentences) >= 2
    for s in sentences:
        lo, hi = s.span
        assert rep.text[lo:hi] == s.text


def test_assignment_carry_forward():
    rep = Report("r", "C4-C5: Moderate canal stenosis. There is also cord flattening. C5-C6: Unremarkable.")
    recs = assign_sentences(split_sentences(rep))
    segs = [r.segments for r in recs]
    assert segs[0] == (C.C4C5,)
    assert segs[1] == (C.C4C5,)
    assert segs[2] == (C.C5C6,)
    assert recs[1].rule == "carry-forward"


def test_assignment_no_carry_forward():
    rep = Report("r", "C4-C5: Moderate canal stenosis. There is also cord flattening.")
    recs = assign_sentences(split_sentences(rep), GroupingRuleConfig(carry_forward=False))
    assert recs[1].segments == (C.NO_SEGMENT,)


def test_preamble_and_out_of_scope():
    rep = Report(
        "r",
        "TECHNIQUE: Sagittal and axial T2 images. "
        "C5-C6: Mild stenosis. "
        "T4-T5 shows an incidental hemangioma.",
    )
    recs = assign_sentences(split_sentences(rep))
    assert recs[0].segments == (C.NO_SEGMENT,)
    assert recs[1].segments == (C.C5C6,)
    assert recs[-1].segments == (C.OUT_OF_SCOPE,)


def test_segment_report_bundles_concatenate_text(small_corpus):
    rep = small_corpus.clean_reports[0]
    gold = {
        b.segment: {lab.task: lab.class_index for lab in b.labels}
        for b in small_corpus.bundles
        if b.report_id == rep.report_id
    }
    bundles, assignments = segment_report(rep, gold)
    assert {b.segment for b in bundles} == set(gold)
    assert len(assignments) == len(split_sentences(rep))
    for b in bundles:
        if b.segment.in_scope:
            assert b.text
            assert len(b.labels) == len(TASKS)


def test_mention_f1_hand_case():
    gold = [[C.C2C3, C.C3C4], [C.C5C6]]
    pred = [[C.C2C3], [C.C5C6, C.C6C7]]
    # tp=2, fp=1, fn=1: precision 2/3, recall 2/3, f1 2/3
    assert mention_f1(gold, pred) == pytest.approx(2 / 3)


def test_mention_f1_perfect_and_empty():
    gold = [[C.C2C3], []]
    assert mention_f1(gold, [[C.C2C3], []]) == 1.0
    assert mention_f1(gold, [[], []]) == 0.0


def test_mention_f1_unit_count_mismatch():
    with pytest.raises(ValueError):
        mention_f1([[C.C2C3]], [[C.C2C3], []])


def test_clean_corpus_never_needs_recovery(small_corpus):
    # Recovery patterns must not fire on uncorrupted text.
    for rep in small_corpus.clean_reports[:20]:
        for rec in assign_sentences(split_sentences(rep)):
            assert rec.rule != "fuzzy"


def test_all_in_scope_segments_reachable():
    text = " ".join(f"{s.value}: Mild change." for s in IN_SCOPE_SEGMENTS)
    found = {m.canonical for m in tag_mentions(text)}
    assert found == set(IN_SCOPE_SEGMENTS)
