from __future__ import annotations

import pytest

from botflow.classifiers import ClassifierSpec
from botflow.errors import KindMismatch, KTooLarge, NameSetMismatch
from botflow.featsel import (DEFAULT_TOP_K, average_importances, format_report, parse_report, rank_features,
                             select_dataset, select_top_k)

RF = ClassifierSpec("RandomForest", {"n_estimators": 20})


def test_rank_features(small_ds):
    ranked = rank_features(small_ds, RF, seed=0)
    assert len(ranked) == 24
    values = [v for _, v in ranked]
    assert values == sorted(values, reverse=True)
    assert sum(values) == pytest.approx(1.0)
    top = {name for name, _ in ranked[:6]}
    assert top & {"sTtl", "SrcWin", "SrcBytes", "sHops"}


def test_rank_requires_forest(small_ds):
    with pytest.raises(KindMismatch):
        rank_features(small_ds, ClassifierSpec("DecisionTree"))


def test_select_top_k(small_ds):
    ranked = rank_features(small_ds, RF)
    assert select_top_k(ranked) == [n for n, _ in ranked[:DEFAULT_TOP_K]]
    assert select_top_k(ranked, 0) == []
    with pytest.raises(KTooLarge):
        select_top_k(ranked, 25)
    ds, again = select_dataset(small_ds, 5, RF)
    assert ds.feature_names == tuple(select_top_k(ranked, 5)) and again == ranked


def test_ties_break_by_name():
    assert average_importances([[("b", 0.5), ("a", 0.5)]]) == [("a", 0.5), ("b", 0.5)]


def test_average_importances():
    avg = average_importances([[("a", 0.2), ("b", 0.8)], [("b", 0.4), ("a", 0.6)]])
    assert avg == [("b", pytest.approx(0.6)), ("a", pytest.approx(0.4))]
    with pytest.raises(NameSetMismatch):
        average_importances([[("a", 1.0)], [("b", 1.0)]])


def test_report_round_trip():
    ranked = [("sTtl", 0.25), ("SrcBytes", 0.125)]
    text = format_report(ranked)
    assert text == "sTtl\t0.250000\nSrcBytes\t0.125000\n"
    assert parse_report(text) == ranked
