from __future__ import annotations

import math

import numpy as np
import pytest

from botflow.classifiers import ClassifierSpec, Kind, feature_importances, fit, predict, predict_batch
from botflow.classifiers.bayes import gaussian_density
from botflow.classifiers.ensemble import AdaBoost
from botflow.classifiers.neighbors import KNeighbors, knn_distance
from botflow.classifiers.params import SCHEMAS, defaults
from botflow.classifiers.svm import svm_objective
from botflow.classifiers.tree import impurity
from botflow.dataset import LabeledDataset
from botflow.errors import (DimensionMismatch, EmptyDataset, InvalidHyperparameter, NonFiniteInput,
                            SingleClassDataset, UnknownKind, UnsupportedKind)
from botflow.flowcore import LabelClass

ALL_KINDS = list(Kind)


def _ds(x, y, names=None):
    x = np.asarray(x, dtype=float)
    return LabeledDataset(x, np.asarray(y), names or tuple(f"f{i}" for i in range(x.shape[1])), "t")


# hyperparameter schema ------------------------------------------------------

def test_defaults_match_reference_values():
    assert defaults("DecisionTree") == {"criterion": "gini", "splitter": "best", "min_samples_split": 2,
                                        "min_samples_leaf": 1, "min_weight_fraction_leaf": 0.0,
                                        "class_weight": None, "max_depth": None, "max_features": None}
    rf = defaults("RandomForest")
    assert [rf[k] for k in ("n_estimators", "criterion", "min_samples_split", "min_samples_leaf",
                            "min_weight_fraction_leaf", "class_weight")] == [100, "gini", 2, 1, 0.0, None]
    ada = defaults("AdaBoost")
    assert [ada[k] for k in ("n_estimators", "learning_rate", "algorithm", "random_state")] == \
        [50, 1.0, "SAMME.R", None]
    svm = defaults("LinearSVM")
    assert [svm[k] for k in ("loss", "tol", "C")] == ["squared_hinge", 1e-4, 1.0]
    knn = defaults("KNN")
    assert [knn[k] for k in ("n_neighbors", "weights", "algorithm", "leaf_size", "p")] == \
        [5, "uniform", "auto", 30, 2]


def test_spec_validation():
    assert ClassifierSpec("rf")["n_estimators"] == 100
    assert ClassifierSpec("KNN", {"n_neighbors": 3.0})["n_neighbors"] == 3
    assert ClassifierSpec("DecisionTree", {"class_weight": "None"})["class_weight"] is None
    with pytest.raises(InvalidHyperparameter):
        ClassifierSpec("DecisionTree", {"criterion": "mse"})
    with pytest.raises(InvalidHyperparameter):
        ClassifierSpec("DecisionTree", {"depth": 3})
    with pytest.raises(InvalidHyperparameter):
        ClassifierSpec("KNN", {"n_neighbors": True})
    with pytest.raises(UnknownKind):
        ClassifierSpec("Perceptron")
    spec = ClassifierSpec("AdaBoost", {"learning_rate": 0.5})
    assert ClassifierSpec.from_dict(spec.to_dict()) == spec


# shared behaviour -----------------------------------------------------------

@pytest.mark.parametrize("kind", ALL_KINDS)
def test_every_kind_learns_small_flows(kind, small_ds):
    train = small_ds.subset(np.arange(0, 1500))
    test = small_ds.subset(np.arange(1500, 2000))
    params = {"n_estimators": 20} if kind in (Kind.RANDOM_FOREST,) else {}
    model = fit(ClassifierSpec(kind, params), train, seed=1)
    acc = float(np.mean(predict_batch(model, test.x) == test.y))
    assert acc > 0.85, (kind, acc)
    assert model.fit_time > 0
    assert model.trained_on["rows"] == 1500 and model.trained_on["fingerprint"] == train.fingerprint()
    assert isinstance(predict(model, test.x[0]), LabelClass)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_fit_is_deterministic(kind, small_ds):
    params = {"n_estimators": 10} if kind in (Kind.RANDOM_FOREST, Kind.ADABOOST) else {}
    a = fit(ClassifierSpec(kind, params), small_ds, seed=5)
    b = fit(ClassifierSpec(kind, params), small_ds, seed=5)
    ma, aa = a.parameters
    mb, ab = b.parameters
    assert ma == mb and aa.keys() == ab.keys()
    assert all(np.array_equal(aa[k], ab[k]) for k in aa)


def test_fit_errors(small_ds):
    with pytest.raises(EmptyDataset):
        fit(ClassifierSpec("GaussianNB"), small_ds.subset(np.arange(0)))
    normal_rows = np.flatnonzero(small_ds.y == 0)[:20]
    with pytest.raises(SingleClassDataset):
        fit(ClassifierSpec("GaussianNB"), small_ds.subset(normal_rows))
    model = fit(ClassifierSpec("GaussianNB"), small_ds)
    with pytest.raises(DimensionMismatch):
        predict_batch(model, np.zeros((2, 3)))
    bad = small_ds.x[:1].copy()
    bad[0, 0] = np.inf
    with pytest.raises(NonFiniteInput):
        predict_batch(model, bad)
    with pytest.raises(UnsupportedKind):
        feature_importances(model)


# trees ----------------------------------------------------------------------

def test_impurity_values():
    assert impurity([3, 1], "entropy") == pytest.approx(0.8112781, abs=1e-6)
    assert impurity([3, 1], "gini") == pytest.approx(0.375)
    assert impurity([5, 0], "gini") == 0.0
    assert impurity([2, 2], "entropy") == pytest.approx(1.0)


def test_single_split_tree_importance():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(200, 3))
    y = (x[:, 1] > 0.2).astype(np.int8)
    model = fit(ClassifierSpec("DecisionTree", {"max_depth": 1}), _ds(x, y))
    imp = feature_importances(model)
    assert imp["f1"] == pytest.approx(1.0)
    assert np.array_equal(predict_batch(model, x), y)


def test_importances_track_informative_features():
    # Monte-Carlo check: the only informative feature carries most of the mass
    rng = np.random.default_rng(3)
    boosted = np.zeros(5)
    for trial in range(5):
        x = rng.normal(size=(400, 5))
        y = (x[:, 2] + 0.3 * rng.normal(size=400) > 0).astype(np.int8)
        rf = feature_importances(fit(ClassifierSpec("RandomForest", {"n_estimators": 20}), _ds(x, y), seed=trial))
        assert sum(rf.values()) == pytest.approx(1.0)
        assert rf["f2"] > 0.5
        ada = feature_importances(fit(ClassifierSpec("AdaBoost", {"n_estimators": 20}), _ds(x, y), seed=trial))
        assert sum(ada.values()) == pytest.approx(1.0)
        boosted += [ada[f"f{i}"] for i in range(5)]
    # stumps on noisy labels wander, but on average the signal feature leads
    assert int(np.argmax(boosted)) == 2


def test_min_samples_leaf_respected(small_ds):
    model = fit(ClassifierSpec("DecisionTree", {"min_samples_leaf": 4}), small_ds)
    arrays = model.parameters[1]
    leaves = arrays["left"] < 0
    assert arrays["n_samples"][leaves].min() >= 4


def test_class_weight_balanced_shifts_predictions():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(600, 1))
    y = (x[:, 0] + rng.normal(scale=1.5, size=600) > 1.8).astype(np.int8)
    plain = fit(ClassifierSpec("DecisionTree", {"max_depth": 2}), _ds(x, y))
    bal = fit(ClassifierSpec("DecisionTree", {"max_depth": 2, "class_weight": "balanced"}), _ds(x, y))
    assert predict_batch(bal, x).sum() > predict_batch(plain, x).sum()


# naive Bayes ------------------------------------------------------------------

def test_gaussian_density():
    assert gaussian_density(0.0, 0.0, 1.0) == pytest.approx(0.3989423, abs=1e-6)
    assert gaussian_density(1.0, 1.0, 4.0) == pytest.approx(1 / math.sqrt(8 * math.pi))


def test_gnb_constant_feature_stays_finite():
    x = np.array([[1.0, 5.0], [1.0, 6.0], [1.0, 1.0], [1.0, 2.0]])
    model = fit(ClassifierSpec("GaussianNB"), _ds(x, [0, 0, 1, 1]))
    assert predict_batch(model, [[1.0, 5.5], [1.0, 1.5]]).tolist() == [0, 1]


# AdaBoost ---------------------------------------------------------------------

@pytest.mark.parametrize("algorithm", ["SAMME", "SAMME.R"])
def test_adaboost_errors_below_half(algorithm, small_ds):
    est = AdaBoost(n_estimators=30, algorithm=algorithm).fit(small_ds.x, small_ds.y)
    assert all(e < 0.5 for e in est.errors[1:]) or len(est.errors) == 1
    assert len(est.trees) == len(est.alphas) >= 1


def test_adaboost_stops_on_perfect_learner():
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    est = AdaBoost(n_estimators=10, algorithm="SAMME").fit(x, np.array([0, 0, 1, 1]))
    assert est.stop_reason == "error=0" and len(est.trees) == 1


def test_adaboost_halts_when_learner_no_better_than_chance():
    x = np.zeros((6, 1))
    est = AdaBoost(n_estimators=10, algorithm="SAMME").fit(x, np.array([0, 1, 0, 1, 0, 1]))
    assert est.stop_reason == "error>=0.5" and len(est.trees) == 1


# linear SVM ---------------------------------------------------------------------

@pytest.mark.parametrize("loss", ["hinge", "squared_hinge"])
def test_svm_objective_never_exceeds_start(loss, small_ds):
    model = fit(ClassifierSpec("LinearSVM", {"loss": loss}), small_ds)
    est = model.estimator
    assert est.objective <= est.initial_objective
    xs = (small_ds.x - est.mean) / est.scale
    ys = np.where(small_ds.y == 1, 1.0, -1.0)
    assert svm_objective(est.coef, est.intercept, xs, ys, 1.0, loss) == pytest.approx(est.objective)


def test_svm_separable_problem():
    x = np.array([[0.0, 0.0], [0.5, 0.2], [3.0, 3.0], [3.5, 2.8]])
    model = fit(ClassifierSpec("LinearSVM"), _ds(x, [0, 0, 1, 1]))
    assert predict_batch(model, x).tolist() == [0, 0, 1, 1]


# kNN ---------------------------------------------------------------------------

def test_knn_distance():
    assert knn_distance([0, 0], [3, 4], 2) == 5.0
    assert knn_distance([0, 0], [3, 4], 1) == 7.0
    assert knn_distance([0, 0], [1, 1], 3) == pytest.approx(2 ** (1 / 3))
    with pytest.raises(DimensionMismatch):
        knn_distance([0], [1, 2])


@pytest.mark.parametrize("algo", ["kd_tree", "ball_tree"])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_knn_tree_matches_brute(algo, p):
    rng = np.random.default_rng(p)
    x = rng.uniform(size=(300, 3))
    y = (rng.random(300) < 0.5).astype(np.int8)
    tree = KNeighbors(7, algorithm=algo, leaf_size=4, p=p).fit(x, y)
    brute = KNeighbors(7, algorithm="brute", p=p).fit(x, y)
    for q in rng.uniform(size=(50, 3)):
        dt, it = tree.kneighbors(q)
        db, ib = brute.kneighbors(q)
        assert it.tolist() == ib.tolist()
        assert np.allclose(dt, db)


def test_knn_tie_break_and_distance_weights():
    x = np.array([[0.0], [2.0]])
    y = np.array([0, 1])
    assert KNeighbors(2).fit(x, y).predict(np.array([[1.0]])).tolist() == [0]
    assert KNeighbors(2, tie_break="Botnet").fit(x, y).predict(np.array([[1.0]])).tolist() == [1]
    assert KNeighbors(2, weights="distance").fit(x, y).predict(np.array([[1.5]])).tolist() == [1]
    # an exact match outvotes everything else
    assert KNeighbors(2, weights="distance").fit(x, y).predict(np.array([[0.0]])).tolist() == [0]


def test_schema_covers_all_kinds():
    assert set(SCHEMAS) == set(Kind)
