import io
import itertools

import numpy as np
import pytest

from conflictkit.annotation import (
    ASPECTS,
    Aspect,
    AnnotationRecord,
    MERGED_LABELS,
    RAW_LABELS,
    agreement_report,
    consolidate,
    label_distribution,
    merge_label,
    read_annotations_csv,
    read_gold_tsv,
    write_annotations_csv,
    write_gold_tsv,
)
from conflictkit.metrics import matthews_correlation


def record(post_id, annotator_id, labels=None, attn=(True, True), **overrides):
    base = {
        Aspect.DISAGREEMENT: "Mild",
        Aspect.EMOTION: "Mild",
        Aspect.INTERFERENCE: "None",
        Aspect.DURATION: "Once",
        Aspect.MANIFESTATION: "Manifest",
        Aspect.NUM_PEOPLE: "One",
    }
    if labels:
        base.update(labels)
    base.update({Aspect(k): v for k, v in overrides.items()})
    return AnnotationRecord(
        post_id=post_id,
        annotator_id=annotator_id,
        labels=base,
        attention_check_1_pass=attn[0],
        attention_check_2_pass=attn[1],
    )


def test_merge_intense_to_strong():
    assert merge_label(Aspect.DISAGREEMENT, "Intense") == "Strong"
    assert merge_label(Aspect.EMOTION, "Intense") == "Strong"
    assert merge_label(Aspect.EMOTION, "Strong") == "Strong"


def test_merge_interference_none_and_somewhat_to_mild():
    assert merge_label(Aspect.INTERFERENCE, "None") == "Mild"
    assert merge_label(Aspect.INTERFERENCE, "Somewhat") == "Mild"
    assert merge_label(Aspect.INTERFERENCE, "Strongly") == "Strong"


def test_merge_binary_aspects_unchanged():
    assert merge_label(Aspect.DURATION, "Once") == "Once"
    assert merge_label(Aspect.MANIFESTATION, "Perceived") == "Perceived"
    assert merge_label(Aspect.NUM_PEOPLE, "Multiple") == "Multiple"


def test_merge_is_idempotent_on_merged_labels():
    for aspect in ASPECTS:
        for label in MERGED_LABELS[aspect]:
            assert merge_label(aspect, label) == label


def test_merge_rejects_illegal_label():
    with pytest.raises(ValueError):
        merge_label(Aspect.DURATION, "Intense")
    with pytest.raises(ValueError):
        merge_label(Aspect.DISAGREEMENT, "Strongly")


def test_record_requires_all_aspects_and_legal_labels():
    with pytest.raises(ValueError):
        AnnotationRecord("p", "a", {Aspect.DURATION: "Once"}, True, True)
    with pytest.raises(ValueError):
        record("p", "a", duration="Forever")


def test_csv_round_trip():
    records = [
        record("p1", "a1", disagreement="Intense", interference="Strongly"),
        record("p1", "a2", emotion="Strong", attn=(True, False)),
    ]
    buf = io.StringIO()
    write_annotations_csv(records, buf)
    back = read_annotations_csv(io.StringIO(buf.getvalue()))
    assert back == records


def test_csv_rejects_bad_header_and_fields():
    with pytest.raises(ValueError):
        read_annotations_csv(io.StringIO("a,b\n1,2\n"))
    header = "post_id,annotator_id,disagreement,emotion,interference,duration,manifestation,num_people,attn1,attn2"
    with pytest.raises(ValueError, match="row 2"):
        read_annotations_csv(
            io.StringIO(header + "\np1,a1,Mild,Mild,None,Once,Manifest,One,pass,maybe\n")
        )


def test_agreement_identical_annotators_is_one_everywhere():
    records = []
    for k in range(6):
        labels = {
            Aspect.DISAGREEMENT: ("Mild", "Strong")[k % 2],
            Aspect.EMOTION: ("Mild", "Intense")[k % 2],
            Aspect.INTERFERENCE: ("None", "Strongly")[k % 2],
            Aspect.DURATION: ("Once", "Longer")[k % 2],
            Aspect.MANIFESTATION: ("Manifest", "Perceived")[k % 2],
            Aspect.NUM_PEOPLE: ("One", "Multiple")[k % 2],
        }
        records.append(record(f"p{k}", "a1", labels))
        records.append(record(f"p{k}", "a2", labels))
    report = agreement_report(records)
    for aspect in ASPECTS:
        assert report.merged_mcc[aspect] == 1.0
    # binary aspects are scored directly; 3-way use one-vs-rest macro
    assert report.raw_mcc[Aspect.DURATION] == 1.0


def test_agreement_matches_hand_computed_mcc():
    # duration labels with a known confusion structure
    first = ["Once", "Once", "Longer", "Longer", "Once", "Longer"]
    second = ["Once", "Longer", "Longer", "Longer", "Once", "Once"]
    records = []
    for k, (x, y) in enumerate(zip(first, second)):
        records.append(record(f"p{k}", "a1", duration=x))
        records.append(record(f"p{k}", "a2", duration=y))
    report = agreement_report(records)
    expected = matthews_correlation(
        [1 if x == "Longer" else 0 for x in first],
        [1 if x == "Longer" else 0 for x in second],
    )
    assert report.raw_mcc[Aspect.DURATION] == pytest.approx(expected, abs=1e-12)
    assert report.merged_mcc[Aspect.DURATION] == pytest.approx(expected, abs=1e-12)


def test_agreement_three_way_macro_one_vs_rest():
    first = ["Mild", "Strong", "Intense", "Mild", "Strong", "Intense"]
    second = ["Mild", "Intense", "Intense", "Strong", "Strong", "Mild"]
    records = []
    for k, (x, y) in enumerate(zip(first, second)):
        records.append(record(f"p{k}", "a1", disagreement=x))
        records.append(record(f"p{k}", "a2", disagreement=y))
    report = agreement_report(records)
    per_label = [
        matthews_correlation(
            [1 if x == lab else 0 for x in first],
            [1 if x == lab else 0 for x in second],
        )
        for lab in RAW_LABELS[Aspect.DISAGREEMENT]
    ]
    assert report.raw_mcc[Aspect.DISAGREEMENT] == pytest.approx(
        float(np.mean(per_label)), abs=1e-12
    )


def test_agreement_excludes_posts_without_exactly_two_annotators():
    records = [
        record("p1", "a1"), record("p1", "a2"),
        record("p2", "a1"),                      # single annotator: excluded
        record("p3", "a1"), record("p3", "a2"), record("p3", "a3"),
    ]
    report = agreement_report(records)
    assert report.n_posts == 1


def test_agreement_ignores_attention_failures():
    records = [
        record("p1", "a1"), record("p1", "a2"),
        record("p2", "a1"), record("p2", "a2", attn=(False, True)),
    ]
    assert agreement_report(records).n_posts == 1


def test_merging_commutes_with_counting(rng):
    # distribution of merged labels == merge applied to raw-label counts
    for _ in range(100):
        n = int(rng.integers(1, 30))
        records = []
        for k in range(n):
            labels = {a: RAW_LABELS[a][rng.integers(0, len(RAW_LABELS[a]))] for a in ASPECTS}
            records.append(record(f"p{k}", "a1", labels))
        merged_first = label_distribution([r.merged() for r in records])
        raw_then_merge = label_distribution([r.labels for r in records])
        assert merged_first == raw_then_merge


def test_distribution_percentages_sum_to_100(rng):
    records = [
        record(f"p{k}", "a1", {a: RAW_LABELS[a][rng.integers(0, len(RAW_LABELS[a]))] for a in ASPECTS})
        for k in range(50)
    ]
    dist = label_distribution([r.merged() for r in records])
    for aspect in ASPECTS:
        assert sum(dist[aspect].values()) == pytest.approx(100.0, abs=0.1)


def test_distribution_single_record_is_100_0():
    dist = label_distribution([record("p", "a").merged()])
    assert dist[Aspect.DURATION] == {"Once": 100.0, "Longer": 0.0}


def test_distribution_balanced_set_is_50_50():
    rec1 = record("p1", "a", duration="Once", manifestation="Manifest")
    rec2 = record("p2", "a", duration="Longer", manifestation="Perceived")
    dist = label_distribution([rec1.merged(), rec2.merged()])
    assert dist[Aspect.DURATION] == {"Once": 50.0, "Longer": 50.0}


def test_consolidate_single_annotator_passes_through():
    gold = consolidate([record("p1", "a1", disagreement="Intense")])
    assert gold["p1"][Aspect.DISAGREEMENT] == "Strong"


def test_consolidate_agreeing_pair():
    gold = consolidate([record("p1", "a1", duration="Longer"), record("p1", "a2", duration="Longer")])
    assert gold["p1"][Aspect.DURATION] == "Longer"


def test_consolidate_two_way_tie_flagged_as_none():
    gold = consolidate([record("p1", "a1", duration="Once"), record("p1", "a2", duration="Longer")])
    assert gold["p1"][Aspect.DURATION] is None


def test_consolidate_enumerates_two_voter_outcomes():
    for x, y in itertools.product(("Once", "Longer"), repeat=2):
        gold = consolidate([record("p1", "a1", duration=x), record("p1", "a2", duration=y)])
        expected = x if x == y else None
        assert gold["p1"][Aspect.DURATION] == expected


def test_consolidate_excludes_posts_with_no_valid_records():
    gold = consolidate([record("p1", "a1", attn=(False, False)), record("p2", "a1")])
    assert "p1" not in gold
    assert "p2" in gold


def test_attention_failures_never_influence_statistics():
    clean = [record("p1", "a1"), record("p1", "a2")]
    with_noise = clean + [
        record("p1", "a3", duration="Longer", attn=(False, True)),
        record("p2", "a9", attn=(True, False)),
    ]
    assert consolidate(clean) == consolidate(with_noise)
    r1 = agreement_report(clean)
    r2 = agreement_report(with_noise)
    assert r1.raw_mcc == r2.raw_mcc and r1.merged_mcc == r2.merged_mcc


def test_gold_tsv_round_trip():
    gold = consolidate(
        [
            record("p1", "a1", duration="Once"),
            record("p1", "a2", duration="Longer"),
            record("p2", "a1", num_people="Multiple"),
        ]
    )
    buf = io.StringIO()
    write_gold_tsv(gold, buf)
    back = read_gold_tsv(io.StringIO(buf.getvalue()))
    assert back == gold
