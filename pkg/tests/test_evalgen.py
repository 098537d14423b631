import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from addrlink.evalgen import (
    CorruptionProfile,
    TruthSet,
    arbitrary_scenario,
    brute_force_link,
    corrupt,
    evaluate,
    evaluate_arbitrary,
    generate_reference,
    synonym_groups,
)
from addrlink.evalgen.generator import corrupt_text
from addrlink.ingest import AddressRecord
from addrlink.linkage import Decision, MatchResult, link_reference
from addrlink.similarity import LinkageConfig


def test_generate_basics():
    assert len(generate_reference(0, 1)) == 1
    a = generate_reference(5, 200)
    assert a == generate_reference(5, 200)
    assert [r.raw for r in a] != [r.raw for r in generate_reference(6, 200)]
    assert [r.id for r in a] == list(range(1, 201))
    with pytest.raises(ValueError):
        generate_reference(0, 0)


def test_generate_distinct_10k():
    recs = generate_reference(1, 10_000)
    assert len({r.normalized for r in recs}) == 10_000
    assert all(r.normalized == r.raw for r in recs)


def test_component_space_too_small():
    with pytest.raises(ValueError, match="component space"):
        generate_reference(0, 500, streets=1, suburbs=1, max_number=2, unit_rate=0.0)


def test_synonym_table():
    groups = synonym_groups()
    assert any(g[0] == "STREET" and "ST" in g for g in groups)
    assert any("NEW SOUTH WALES" in g for g in groups)


def test_identity_profile():
    ref = generate_reference(2, 500)
    raw, truth = corrupt(ref, CorruptionProfile.identity())
    assert [r.raw for r in raw] == [r.raw for r in ref]
    assert truth.links == {i: i for i in range(1, 501)}


def test_drop_postcode_always():
    ref = generate_reference(3, 500)
    raw, truth = corrupt(ref, CorruptionProfile(drop_postcode=1.0))
    by_id = {r.id: r for r in ref}
    for r in raw:
        postcode = by_id[truth.links[r.id]].normalized.split()[-1]
        assert postcode not in r.normalized.split()


def test_corruption_reproducible():
    ref = generate_reference(4, 300)
    p = CorruptionProfile.uniform(0.5, seed=9)
    assert corrupt(ref, p) == corrupt(ref, p)
    assert corrupt(ref, p)[0] != corrupt(ref, CorruptionProfile.uniform(0.5, seed=10))[0]


def test_truth_one_link_per_record():
    ref = generate_reference(5, 300)
    raw, truth = corrupt(ref, CorruptionProfile.mild(), start_id=1001)
    assert sorted(truth.links) == [r.id for r in raw] == list(range(1001, 1301))


def test_profile_validation():
    with pytest.raises(ValueError):
        CorruptionProfile(typo=1.5)
    assert CorruptionProfile.mild(3).as_dict()["seed"] == 3


@given(st.integers(0, 10**6))
def test_corrupt_text_each_op(seed):
    text = "UNIT 4 12 KING STREET RICHMOND VIC 3121"
    out = corrupt_text(text, CorruptionProfile.uniform(1.0), random.Random(seed))
    assert out and out == out.strip()


def test_truth_roundtrip(tmp_path):
    t = TruthSet({3: 1, 1: 2})
    t.save(tmp_path / "truth.tsv")
    assert (tmp_path / "truth.tsv").read_text().splitlines() == ["corrupted_id\treference_id", "1\t2", "3\t1"]
    assert TruthSet.load(tmp_path / "truth.tsv") == t


def test_arbitrary_scenario():
    db1, db2, truth = arbitrary_scenario(1, 200, overlap=0.5)
    assert len(db1) == 200 and len(db2) == 100
    assert len(truth) == 100
    assert set(truth.links.values()) == {r.id for r in db2}


def test_oracle_small_cases():
    assert brute_force_link([], []) == []
    one = [AddressRecord(1, "12 KING ST")]
    res = brute_force_link(one, one)
    assert res == [MatchResult(1, 1, 1.0, Decision.ACCEPTED, True)]
    with pytest.raises(ValueError):
        brute_force_link(one, one, cap=0)


@pytest.mark.parametrize("mode", ["reference", "arbitrary"])
def test_oracle_equals_pipeline(mode):
    from addrlink.linkage import link

    ref = generate_reference(6, 200, streets=8, suburbs=3)
    raw, _ = corrupt(ref, CorruptionProfile.uniform(0.3, 6))
    cfg = LinkageConfig(max_token_freq=10, tau=0.6, debug=True)
    assert link(raw, ref, cfg, mode) == brute_force_link(raw, ref, cfg, mode)


def test_evaluate_perfect():
    truth = TruthSet({1: 10, 2: 20})
    results = [MatchResult(1, 10, 0.9, Decision.ACCEPTED, True), MatchResult(2, 20, 0.95, Decision.ACCEPTED, True)]
    m = evaluate(results, truth, [0.7])[0.7]
    assert m.precision == m.recall == m.best_precision == 1.0
    assert not m.degenerate


def test_evaluate_empty():
    m = evaluate([], TruthSet({1: 1}), [0.7])[0.7]
    assert m.recall == 0.0 and m.precision == 1.0 and m.degenerate


def test_evaluate_sweep_recall_non_increasing():
    ref = generate_reference(7, 2000)
    raw, truth = corrupt(ref, CorruptionProfile.uniform(0.3, 7))
    res = link_reference(raw, ref, LinkageConfig(tau=0.6))
    report = evaluate(res, truth, [0.6, 0.7, 0.8])
    recalls = [row.recall for row in report.rows]
    assert recalls == sorted(recalls, reverse=True)
    assert recalls[0] > recalls[-1]
    assert "tau_0.7.recall" in "\n".join(report.key_values())
    assert "precision" in report.table()


def test_evaluate_arbitrary():
    truth = TruthSet({1: 5, 2: 6})
    res = [
        MatchResult(1, 5, 0.9, Decision.ACCEPTED, True),
        MatchResult(2, 7, 0.8, Decision.ACCEPTED, True),
        MatchResult(3, None, 0.0, Decision.NOT_FOUND),
    ]
    rep = evaluate_arbitrary(res, truth)
    assert (rep.accepted_correct, rep.accepted_incorrect, rep.not_found) == (1, 1, 1)
    assert rep.linked_precision == 0.5
    assert "not found" in rep.table()
