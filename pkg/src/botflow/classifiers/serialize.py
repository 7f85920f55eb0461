"""Versioned, self-describing binary encoding of trained models.

Layout (all integers little-endian)::

    offset  size  field
    0       8     magic b"BFLOWMDL"
    8       2     u16 format version (currently 1)
    10      4     u32 header length H
    14      H     UTF-8 JSON header (sorted keys)
    14+H    P     array payload, each array 8-byte aligned
    end-4   4     u32 CRC-32 of every preceding byte

The header holds ``kind``, ``spec``, ``feature_names``, ``trained_on``,
``fit_time``, the estimator's scalar ``meta`` and an ``arrays`` directory of
``{name, dtype, shape, offset, nbytes}`` entries whose offsets are relative
to the payload start. Arrays are stored C-ordered in their little-endian
dtype, so parameters round-trip bit for bit.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from ..errors import CorruptModel, VersionMismatch
from .model import ESTIMATORS, TrainedModel
from .params import ClassifierSpec

MAGIC = b"BFLOWMDL"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sHI")
_CRC = struct.Struct("<I")


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def serialize_model(model: TrainedModel) -> bytes:
    meta, arrays = model.estimator.state()
    directory = []
    chunks = []
    offset = 0
    for name in sorted(arrays):
        arr = np.asarray(arrays[name])
        arr = np.ascontiguousarray(arr.astype(arr.dtype.newbyteorder("<")))
        raw = arr.tobytes()
        pad = (-offset) % 8
        chunks.append(b"\0" * pad + raw)
        offset += pad
        directory.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
                          "offset": offset, "nbytes": len(raw)})
        offset += len(raw)
    header = {
        "kind": model.spec.kind.value,
        "spec": model.spec.to_dict(),
        "feature_names": list(model.feature_names),
        "trained_on": _jsonable(dict(model.trained_on)),
        "fit_time": float(model.fit_time),
        "meta": _jsonable(meta),
        "arrays": directory,
    }
    header_bytes = json.dumps(header, sort_keys=True, allow_nan=False).encode("utf-8")
    body = _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)) + header_bytes + b"".join(chunks)
    return body + _CRC.pack(zlib.crc32(body))


def deserialize_model(data: bytes) -> TrainedModel:
    data = bytes(data)
    if len(data) < _PREFIX.size + _CRC.size:
        raise CorruptModel(f"model blob is only {len(data)} bytes")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CorruptModel("not a botflow model (bad magic)")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {version}, this build reads {FORMAT_VERSION}")
    body, trailer = data[:-_CRC.size], data[-_CRC.size:]
    if _CRC.unpack(trailer)[0] != zlib.crc32(body):
        raise CorruptModel("checksum mismatch (truncated or altered model)")
    start = _PREFIX.size
    if start + header_len > len(body):
        raise CorruptModel("header extends past end of data")
    try:
        header = json.loads(body[start:start + header_len].decode("utf-8"))
        payload = body[start + header_len:]
        arrays = {}
        for entry in header["arrays"]:
            end = entry["offset"] + entry["nbytes"]
            if end > len(payload):
                raise CorruptModel(f"array {entry['name']!r} extends past end of data")
            arr = np.frombuffer(payload[entry["offset"]:end], dtype=np.dtype(entry["dtype"]))
            arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
        spec = ClassifierSpec.from_dict(header["spec"])
        estimator = ESTIMATORS[spec.kind].from_state(dict(spec.hyperparameters), header["meta"], arrays)
    except CorruptModel:
        raise
    except (KeyError, ValueError, TypeError, UnicodeDecodeError) as exc:
        raise CorruptModel(f"malformed model header: {exc}") from exc
    return TrainedModel(spec, estimator, tuple(header["feature_names"]), header["trained_on"],
                        header["fit_time"])


def save_model(model: TrainedModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_model(model))


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        return deserialize_model(fh.read())
