import json
import random

import numpy as np
import pytest

from metaminer.errors import DataError, EmptyDatabaseError, ModelMismatchError
from metaminer.eventlog import EventLog
from metaminer.loggen import GeneratorConfig, generate_log
from metaminer.metafeatures import DIM, FEATURE_NAMES, FeatureVector
from metaminer.metalearn import (
    Hyperparameters, MetaDatabase, MetaModel, MetaRow, build_meta_database,
    evaluate_meta_model, holdout_split, macro_f_score, rank_algorithms, train_random_forest,
)
from metaminer.metalearn.evaluation import confusion_matrix

WORKED = {
    "A1": {"f": 1.0, "p": 0.27, "g": 0.91, "s": 0.6},
    "A2": {"f": 0.98, "p": 0.38, "g": 0.93, "s": 0.64},
    "A3": {"f": 0.99, "p": 0.2, "g": 0.9, "s": 0.59},
}


# ---------------------------------------------------------------- ranking

def test_worked_ranking_example():
    r = rank_algorithms(WORKED)
    assert r.average_ranks == {"A1": 1.75, "A2": 1.5, "A3": 2.75}
    assert r.meta_target == "A2" and r.tied == ()


def test_identical_vectors_tie_goes_to_roster_order():
    v = {"f": 0.5, "p": 0.5, "g": 0.5, "s": 0.5}
    r = rank_algorithms({"IM": v, "AM": dict(v)}, roster=["AM", "IM"])
    assert r.average_ranks == {"AM": 1.5, "IM": 1.5}
    assert r.meta_target == "AM" and r.tied == ("AM", "IM")


def test_dominant_algorithm_wins():
    rng = random.Random(3)
    for _ in range(50):
        scores = {a: {m: rng.uniform(0, 0.9) for m in "fpgs"} for a in ("A", "B", "C")}
        scores["B"] = {m: max(s[m] for s in scores.values()) + 0.01 for m in "fpgs"}
        r = rank_algorithms(scores)
        assert r.average_ranks["B"] == 1.0 and r.meta_target == "B"


def test_time_is_lower_is_better():
    scores = {"A": {**WORKED["A1"], "t": 2.0}, "B": {**WORKED["A1"], "t": 1.0}}
    assert rank_algorithms(scores, include_time=True).meta_target == "B"
    assert rank_algorithms(scores).tied == ("A", "B")


def test_missing_metric_is_named():
    with pytest.raises(ValueError, match="'g'.*A2"):
        rank_algorithms({"A1": WORKED["A1"], "A2": {"f": 1, "p": 1, "s": 1}})


def test_cube_transform_keeps_ranks():
    rng = random.Random(5)
    for _ in range(50):
        scores = {a: {m: round(rng.random(), 1) for m in "fpgs"} for a in ("A", "B", "C", "D")}
        metric = rng.choice("fpgs")
        cubed = {a: {m: v ** 3 if m == metric else v for m, v in s.items()} for a, s in scores.items()}
        r1, r2 = rank_algorithms(scores), rank_algorithms(cubed)
        assert [row.ranks for row in r1.rows] == [row.ranks for row in r2.rows]
        assert r1.meta_target == r2.meta_target


# ---------------------------------------------------------------- database

def _small_logs(n=4):
    out = []
    for i in range(n):
        log, _ = generate_log(GeneratorConfig(activities=(4, 6), depth=(1, 2), n_cases=30, seed=i))
        out.append((f"L{i}", log))
    return out


@pytest.fixture(scope="module")
def small_db():
    return build_meta_database(_small_logs(), roster=["AM", "HM", "IM"])


def test_build_one_row_per_log(small_db):
    assert [r.log_id for r in small_db.rows] == ["L0", "L1", "L2", "L3"]
    assert sum(small_db.class_distribution().values()) == 4
    for r in small_db.rows:
        scores = {a: small_db.quality[(r.log_id, a)] for a in small_db.roster}
        assert r.meta_target == rank_algorithms(scores, roster=small_db.roster).meta_target


def test_parallel_build_matches_serial(small_db):
    par = build_meta_database(_small_logs(), roster=["AM", "HM", "IM"], jobs=2)
    assert par.to_csv() == small_db.to_csv()


def test_csv_round_trip(small_db, tmp_path):
    path = tmp_path / "db.csv"
    small_db.save(path)
    back = MetaDatabase.load(path)
    assert back.to_csv() == small_db.to_csv()
    assert back.roster == small_db.roster
    side = json.loads((tmp_path / "db.csv.json").read_text())
    assert side["n_features"] == DIM and side["metrics"] == ["f", "p", "g", "s"]


def test_load_rejects_foreign_manifest(small_db, tmp_path):
    path = tmp_path / "db.csv"
    small_db.save(path)
    side = json.loads((tmp_path / "db.csv.json").read_text())
    side["manifest_fingerprint"] = "0" * 16
    (tmp_path / "db.csv.json").write_text(json.dumps(side))
    with pytest.raises(DataError):
        MetaDatabase.load(path)


def test_restrict_reranks(small_db):
    sub = small_db.restrict(["HM", "IM"])
    assert sub.roster == ("HM", "IM")
    for r in sub.rows:
        scores = {a: small_db.quality[(r.log_id, a)] for a in ("HM", "IM")}
        assert r.meta_target == rank_algorithms(scores, roster=("HM", "IM")).meta_target


def test_failing_logs_are_excluded():
    good = _small_logs(1)
    bad = ("bad", EventLog(()))
    db = build_meta_database(good + [bad], roster=["AM", "IM"])
    assert len(db) == 1 and "bad" in db.excluded
    with pytest.raises(EmptyDatabaseError):
        build_meta_database([bad], roster=["AM", "IM"])


def _synthetic_db(n=60, seed=0, roster=("AM", "HM", "IM")):
    """Class depends on feature 7 only."""
    rng = np.random.default_rng(seed)
    X = rng.random((n, DIM))
    rows = []
    for i in range(n):
        cls = min(int(X[i, 7] * len(roster)), len(roster) - 1)
        rows.append(MetaRow(f"r{i:03d}", FeatureVector(f"r{i:03d}", tuple(X[i])), roster[cls]))
    return MetaDatabase(rows, tuple(roster))


# ---------------------------------------------------------------- forest and model

def test_forest_separable_fixture():
    db = _synthetic_db()
    X, y = db.matrix()
    model = train_random_forest(db, seed=1)
    assert np.array_equal(model.predict_many(X), y)
    imp = model.feature_importance()
    assert imp.normalized and imp.ranked[0][0] == FEATURE_NAMES[7]
    assert sum(v for _, v in imp.ranked) == pytest.approx(1.0)


def test_forest_is_deterministic(tmp_path):
    db = _synthetic_db()
    a, b = train_random_forest(db, seed=4), train_random_forest(db, seed=4)
    assert a.dumps() == b.dumps()
    a.save(tmp_path / "m.json")
    back = MetaModel.load(tmp_path / "m.json")
    assert back.dumps() == a.dumps()
    X, _ = db.matrix()
    assert np.array_equal(back.predict_many(X), a.predict_many(X))


def test_single_class_model_has_no_splits():
    rows = [MetaRow(f"r{i}", FeatureVector(f"r{i}", tuple(np.full(DIM, i, float))), "IM") for i in range(5)]
    model = train_random_forest(MetaDatabase(rows, ("AM", "IM")))
    rec = model.predict(np.zeros(DIM))
    assert rec.algorithm == "IM" and rec.votes == {"AM": 0.0, "IM": 1.0}
    imp = model.feature_importance()
    assert not imp.normalized and all(v == 0 for _, v in imp.ranked)


def test_vote_fractions_sum_to_one():
    model = train_random_forest(_synthetic_db(), Hyperparameters(n_trees=15))
    rng = np.random.default_rng(9)
    for _ in range(10):
        assert sum(model.predict(rng.random(DIM)).votes.values()) == pytest.approx(1.0)


def test_mismatch_errors():
    model = train_random_forest(_synthetic_db(), Hyperparameters(n_trees=3))
    with pytest.raises(ModelMismatchError):
        model.predict(np.zeros(DIM - 1))
    model.fingerprint = "feedfacefeedface"
    with pytest.raises(ModelMismatchError):
        model.predict(np.zeros(DIM))


def test_bad_model_file(tmp_path):
    (tmp_path / "m.json").write_text("{not json")
    with pytest.raises(DataError):
        MetaModel.load(tmp_path / "m.json")


# ---------------------------------------------------------------- evaluation

def test_macro_f_perfect_and_known_value():
    y = np.array([0, 0, 1, 2])
    assert macro_f_score(y, y) == 1.0
    # class 0: p=1 r=.5 F=2/3; class 1: p=.5 r=1 F=2/3; class 2: F=1
    assert macro_f_score(y, np.array([0, 1, 1, 2])) == pytest.approx((2 / 3 + 2 / 3 + 1) / 3)


def test_confusion_counts():
    cm = confusion_matrix([0, 1, 1], [0, 0, 1], 2)
    assert cm.tolist() == [[1, 0], [1, 1]]


def test_holdout_is_stratified_and_disjoint():
    y = np.array([0] * 40 + [1] * 20 + [2] * 8)
    train, test = holdout_split(y, 0.75, np.random.default_rng(0))
    assert set(train).isdisjoint(test) and len(train) + len(test) == len(y)
    assert np.bincount(y[test]).tolist() == [10, 5, 2]


def test_evaluation_is_deterministic_and_majority_matches():
    db = _synthetic_db(80)
    hp = Hyperparameters(n_trees=20)
    a = evaluate_meta_model(db, repetitions=5, seed=3, hp=hp)
    b = evaluate_meta_model(db, repetitions=5, seed=3, hp=hp)
    assert a.dumps() == b.dumps()
    assert len(a.meta_model.accuracy_runs) == 5
    _, y = db.matrix()
    n_test = 0
    for run in range(5):
        child = np.random.SeedSequence(3).spawn(5)[run]
        train, test = holdout_split(y, 0.75, np.random.default_rng(child.spawn(3)[0]))
        top = np.bincount(y[train], minlength=3).argmax()
        assert a.majority.accuracy_runs[run] == pytest.approx(np.mean(y[test] == top))
        n_test += len(test)
    assert a.meta_model.accuracy > a.majority.accuracy
    assert a.confusion.sum() == n_test


def test_evaluation_rejects_bad_split():
    with pytest.raises(ValueError):
        evaluate_meta_model(_synthetic_db(), split=1.0)
