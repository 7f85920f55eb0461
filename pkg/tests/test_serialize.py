from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import pytest

from botflow.classifiers import (ClassifierSpec, Kind, deserialize_model, fit, load_model, predict_batch,
                                 save_model, serialize_model)
from botflow.classifiers.model import TrainedModel
from botflow.classifiers.serialize import MAGIC
from botflow.errors import CorruptModel, VersionMismatch

GOLDEN = Path(__file__).parent / "golden"


def _params(kind):
    return {"n_estimators": 5} if kind in (Kind.RANDOM_FOREST, Kind.ADABOOST) else {}


@pytest.fixture(scope="module")
def models(small_ds):
    return {kind: fit(ClassifierSpec(kind, _params(kind)), small_ds, seed=2) for kind in Kind}


@pytest.mark.parametrize("kind", list(Kind))
def test_round_trip_is_exact(kind, models, small_ds):
    model = models[kind]
    blob = serialize_model(model)
    back = deserialize_model(blob)
    assert back.spec == model.spec and back.feature_names == model.feature_names
    assert back.trained_on == model.trained_on and back.fit_time == model.fit_time
    assert np.array_equal(predict_batch(back, small_ds.x), predict_batch(model, small_ds.x))
    _, a = model.parameters
    _, b = back.parameters
    assert all(np.array_equal(a[k], b[k]) and a[k].dtype == b[k].dtype for k in a)
    assert serialize_model(back) == blob


def test_save_and_load(tmp_path, models):
    path = tmp_path / "m.model"
    save_model(models[Kind.DECISION_TREE], path)
    assert path.read_bytes()[:8] == MAGIC
    assert load_model(path).spec == models[Kind.DECISION_TREE].spec


def test_corruption_detected(models):
    blob = bytearray(serialize_model(models[Kind.GAUSSIAN_NB]))
    with pytest.raises(CorruptModel):
        deserialize_model(b"XXXXXXXX" + bytes(blob[8:]))
    with pytest.raises(CorruptModel):
        deserialize_model(bytes(blob[:-10]))
    with pytest.raises(CorruptModel):
        deserialize_model(b"short")
    flipped = bytearray(blob)
    flipped[len(flipped) // 2] ^= 0xFF
    with pytest.raises(CorruptModel):
        deserialize_model(bytes(flipped))


def test_version_checked_before_checksum(models):
    blob = bytearray(serialize_model(models[Kind.GAUSSIAN_NB]))
    struct.pack_into("<H", blob, 8, 99)
    with pytest.raises(VersionMismatch):
        deserialize_model(bytes(blob))


def _golden_model():
    x = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 3.0], [3.0, 2.0], [0.5, 0.5], [2.5, 2.5]])
    from botflow.dataset import LabeledDataset

    ds = LabeledDataset(x, np.array([0, 0, 1, 1, 0, 1]), ("sTtl", "SrcBytes"), "golden")
    model = fit(ClassifierSpec("DecisionTree"), ds)
    return TrainedModel(model.spec, model.estimator, model.feature_names, model.trained_on, 0.0)


def test_golden_file_stable():
    """The encoding of a fixed model must not drift between releases."""
    golden = GOLDEN / "decision_tree_v1.model"
    blob = serialize_model(_golden_model())
    assert blob == golden.read_bytes()
    back = load_model(golden)
    assert predict_batch(back, [[0.0, 0.0], [3.0, 3.0]]).tolist() == [0, 1]
