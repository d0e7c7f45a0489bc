import pytest
from hypothesis import given, settings, strategies as st

from srlrefine.conll import PredicateInstance, Prediction, Sentence, Token
from srlrefine.evaluation import (ViolationCounts, confusion_and_correction, constraint_violations,
                                  decompose, instance_violations, labeled_f1)


def make_instance(roles, sense="v.01", j=1):
    toks = tuple(Token((str(i), f"w{i}", "w", "w", "NN", "NN", "_", "_", "0", "0", "D", "D",
                        "Y" if i == j else "_", sense if i == j else "_", role))
                 for i, role in enumerate(roles, start=1))
    return PredicateInstance(Sentence(toks), 0, 0, j, sense, tuple(roles))


def test_identical_predictions_score_one():
    gold = [make_instance(["_", "A0", "_", "A1"]), make_instance(["A2", "_"], "u.02", 2)]
    rep = labeled_f1(gold, [Prediction(g.sense, g.roles) for g in gold])
    assert (rep.precision, rep.recall, rep.f1) == (1.0, 1.0, 1.0)
    assert decompose(gold, [Prediction(g.sense, g.roles) for g in gold]) == (1.0, 1.0, 1.0)


def test_hand_count_two_thirds():
    gold = [make_instance(["_", "A0", "_", "A1", "_"])]
    pred = [Prediction("v.01", ("_", "A0", "_", "_", "A2"))]
    rep = labeled_f1(gold, pred)
    assert (rep.correct, rep.predicted, rep.gold) == (2, 3, 3)
    assert rep.precision == pytest.approx(2 / 3) and rep.recall == pytest.approx(2 / 3)
    assert rep.f1 == pytest.approx(2 / 3)
    assert decompose(gold, pred) == (pytest.approx(0.5), pytest.approx(0.5), 1.0)


def test_hand_count_all_null():
    gold = [make_instance(["_", "A0", "A1"])]
    rep = labeled_f1(gold, [Prediction("v.01", ("_", "_", "_"))])
    assert rep.precision == 1.0 and rep.recall == pytest.approx(1 / 3)
    assert rep.f1 == pytest.approx(0.5)


def test_empty_corpus_scores_one():
    rep = labeled_f1([], [])
    assert (rep.precision, rep.recall, rep.f1) == (1.0, 1.0, 1.0)


def test_misalignment_is_an_error():
    gold = [make_instance(["_", "A0"])]
    with pytest.raises(ValueError, match="gold instances"):
        labeled_f1(gold, [])
    with pytest.raises(ValueError, match="predicted roles"):
        labeled_f1(gold, [Prediction("v.01", ("_",))])


def test_report_formats():
    rep = labeled_f1([make_instance(["_", "A0"])], [Prediction("v.01", ("_", "A0"))])
    assert '"metric": "labeled"' in rep.as_json()
    assert "labeled F1" in rep.as_table() and "100.00" in rep.as_table()


# -- brute-force oracle ------------------------------------------------------------

LABELS = ["_", "_", "A0", "A1", "A2", "AM"]


@st.composite
def scored_sets(draw):
    gold, pred = [], []
    for _ in range(draw(st.integers(0, 5))):
        n = draw(st.integers(1, 6))
        j = draw(st.integers(1, n))
        g_roles = [draw(st.sampled_from(LABELS)) for _ in range(n)]
        p_roles = tuple(draw(st.sampled_from(LABELS)) for _ in range(n))
        g_sense = draw(st.sampled_from(["v.01", "v.02"]))
        gold.append(make_instance(g_roles, g_sense, j))
        pred.append(Prediction(draw(st.sampled_from(["v.01", "v.02"])), p_roles))
    return gold, pred


def reference_counts(gold, pred):
    G, P = set(), set()
    for k, (inst, p) in enumerate(zip(gold, pred)):
        G.add((k, "sense", inst.sense))
        P.add((k, "sense", p.sense))
        G |= {(k, i, r) for i, r in enumerate(inst.roles) if r != "_"}
        P |= {(k, i, r) for i, r in enumerate(p.roles) if r != "_"}
    return len(G & P), len(P), len(G)


@settings(max_examples=200, deadline=None)
@given(scored_sets())
def test_scorer_matches_set_intersection(data):
    gold, pred = data
    rep = labeled_f1(gold, pred)
    assert (rep.correct, rep.predicted, rep.gold) == reference_counts(gold, pred)


@settings(max_examples=100, deadline=None)
@given(scored_sets(), st.data())
def test_adding_a_correct_item_never_hurts(data, draw):
    gold, pred = data
    wrong = [(k, i) for k, (g, p) in enumerate(zip(gold, pred)) for i, r in enumerate(g.roles)
             if r != "_" and p.roles[i] == "_"]
    if not wrong:
        return
    k, i = draw.draw(st.sampled_from(wrong))
    roles = list(pred[k].roles)
    roles[i] = gold[k].roles[i]
    better = pred[:k] + [Prediction(pred[k].sense, tuple(roles))] + pred[k + 1:]
    a, b = labeled_f1(gold, pred), labeled_f1(gold, better)
    assert b.precision >= a.precision and b.recall >= a.recall and b.f1 >= a.f1


# -- violations --------------------------------------------------------------------

def test_violation_definitions():
    assert instance_violations(["A0", "_", "A0"]) == ViolationCounts(1, 0, 0)
    assert instance_violations(["_", "_", "C-A1", "_", "A1"]) == ViolationCounts(0, 1, 0)
    assert instance_violations(["A1", "C-A1"]) == ViolationCounts(0, 0, 0)
    assert instance_violations(["R-A2", "_"]) == ViolationCounts(0, 0, 1)
    assert instance_violations(["R-A2", "A2"]) == ViolationCounts(0, 0, 0)
    # repeated modifiers are not core roles
    assert instance_violations(["AM", "AM"]) == ViolationCounts(0, 0, 0)


def brute_violations(roles):
    U = sum(1 for lab in {"A0", "A1", "A2", "A3", "A4", "A5", "AA"} if roles.count(lab) >= 2)
    C = sum(1 for i, r in enumerate(roles) if r.startswith("C-") and r[2:] not in roles[:i])
    R = sum(1 for r in roles if r.startswith("R-") and r[2:] not in roles)
    return ViolationCounts(U, C, R)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.sampled_from(["_", "A0", "A1", "A2", "AA", "AM", "C-A0", "C-A1", "R-A0", "R-A2"]),
                         min_size=1, max_size=8), max_size=6))
def test_violations_match_recount(instances):
    total = constraint_violations([Prediction("v.01", tuple(r)) for r in instances])
    expect = ViolationCounts()
    for roles in instances:
        expect = expect + brute_violations(roles)
    assert total == expect


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(0, 7), st.sampled_from(["A0", "A1", "AA"]))
def test_single_argument_never_violates_uniqueness(n, at, label):
    roles = ["_"] * n
    roles[at % n] = label
    assert constraint_violations([roles]).U == 0


# -- confusion and correction ----------------------------------------------------

def test_refined_equal_to_baseline_corrects_nothing():
    gold = [make_instance(["_", "A0", "A1", "_"])]
    base = [Prediction("v.01", ("_", "A1", "A1", "A0"))]
    m = confusion_and_correction(gold, base, base)
    assert sum(map(sum, m.correction)) == 0
    assert m.confusion[1][2] == 1  # gold A0 read as A1


def test_refined_equal_to_gold_corrects_every_error():
    gold = [make_instance(["_", "A0", "A1", "_"])]
    base = [Prediction("v.01", ("_", "A1", "A1", "A0"))]
    m = confusion_and_correction(gold, base, [Prediction("v.01", gold[0].roles)])
    off_diag = [[c if a != b else 0 for b, c in enumerate(row)] for a, row in enumerate(m.confusion)]
    assert m.correction == off_diag


def test_crafted_fixture_one_correction():
    gold = [make_instance(["A0", "_", "A1", "_", "A2"])]
    base = [Prediction("v.01", ("A0", "_", "A0", "_", "_"))]  # two errors
    refined = [Prediction("v.01", ("A0", "_", "A1", "_", "_"))]  # first one fixed
    m = confusion_and_correction(gold, base, refined)
    assert sum(map(sum, m.correction)) == 1
    assert m.correction[2][1] == 1
    assert m.to_csv("correction").splitlines()[0] == "gold\\predicted,_,A0,A1,A2"


@settings(max_examples=100, deadline=None)
@given(scored_sets(), st.data())
def test_correction_totals_match_token_count(data, draw):
    gold, base = data
    refined = [Prediction("v.01", tuple(draw.draw(st.sampled_from(LABELS)) for _ in g.roles)) for g in gold]
    subset = ("_", "A0", "A1", "A2")
    m = confusion_and_correction(gold, base, refined, subset)
    expect = sum(1 for g, b, r in zip(gold, base, refined) for gr, br, rr in zip(g.roles, b.roles, r.roles)
                 if gr in subset and br in subset and br != gr and rr == gr)
    assert sum(map(sum, m.correction)) == expect
    for a in range(4):
        for b in range(4):
            assert m.correction[a][b] <= m.confusion[a][b]
