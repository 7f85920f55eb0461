"""Model registry: a JSON metadata document listing serialized models that
are loaded at detector start-up.

Metadata layout (format_version 1)::

    {"format_version": 1,
     "models": [{"model_id": "rf-s10", "file_name": "rf-s10.model",
                 "kind": "RandomForest", "trained_on": "capture20110818.binetflow",
                 "features": ["sTtl", "SrcBytes", ...],
                 "created_at": "2026-01-01T00:00:00", "format_version": 1}]}

``format_version`` inside an entry is the model file format version.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Sequence

from ..classifiers.model import TrainedModel
from ..classifiers.params import Kind
from ..classifiers.serialize import FORMAT_VERSION, load_model, save_model
from ..errors import BotflowError, MetadataParse, NoValidModels

log = logging.getLogger(__name__)

METADATA_VERSION = 1


@dataclass(frozen=True)
class ModelMetadata:
    model_id: str
    file_name: str
    kind: str
    features: tuple[str, ...]
    trained_on: str = ""
    created_at: str = ""
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if not self.model_id:
            raise MetadataParse("model_id must not be empty")
        if not self.features:
            raise MetadataParse(f"model {self.model_id!r}: feature list is empty")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["features"] = list(self.features)
        return d

    @classmethod
    def for_model(cls, model: TrainedModel, model_id: str, file_name: str,
                  created_at: str | None = None) -> "ModelMetadata":
        trained_on = str(model.trained_on.get("provenance", "")) if model.trained_on else ""
        created = created_at if created_at is not None else datetime.now().replace(microsecond=0).isoformat()
        return cls(model_id, file_name, model.kind.value, model.feature_names, trained_on, created)


@dataclass(frozen=True)
class LoadedModel:
    meta: ModelMetadata
    model: TrainedModel

    @property
    def model_id(self) -> str:
        return self.meta.model_id

    @property
    def features(self) -> tuple[str, ...]:
        return self.model.feature_names


@dataclass(frozen=True)
class SkippedModel:
    model_id: str
    reason: str


@dataclass
class Registry:
    loaded: list[LoadedModel]
    skipped: list[SkippedModel] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.loaded)

    def __iter__(self):
        return iter(self.loaded)


def read_metadata(path) -> list[ModelMetadata]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise MetadataParse(f"metadata file not found: {path}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MetadataParse(f"{path}: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("models"), list):
        raise MetadataParse(f"{path}: expected an object with a 'models' list")
    version = data.get("format_version", METADATA_VERSION)
    if version != METADATA_VERSION:
        raise MetadataParse(f"{path}: unsupported metadata format_version {version}")
    entries, seen = [], set()
    for i, raw in enumerate(data["models"]):
        try:
            entry = ModelMetadata(
                model_id=str(raw["model_id"]), file_name=str(raw["file_name"]), kind=str(raw["kind"]),
                features=tuple(raw["features"]), trained_on=str(raw.get("trained_on", "")),
                created_at=str(raw.get("created_at", "")),
                format_version=int(raw.get("format_version", FORMAT_VERSION)))
        except (KeyError, TypeError, ValueError) as exc:
            raise MetadataParse(f"{path}: models[{i}] is malformed ({exc!r})") from exc
        if entry.model_id in seen:
            raise MetadataParse(f"{path}: duplicate model_id {entry.model_id!r}")
        seen.add(entry.model_id)
        entries.append(entry)
    return entries


def write_metadata(path, entries: Sequence[ModelMetadata]) -> None:
    doc = {"format_version": METADATA_VERSION, "models": [e.to_dict() for e in entries]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def register_model(model: TrainedModel, models_dir, metadata_path, model_id: str,
                   created_at: str | None = None) -> ModelMetadata:
    """Write ``model`` into ``models_dir`` and add or replace its metadata entry."""
    models_dir = Path(models_dir)
    models_dir.mkdir(parents=True, exist_ok=True)
    file_name = f"{model_id}.model"
    save_model(model, models_dir / file_name)
    entry = ModelMetadata.for_model(model, model_id, file_name, created_at)
    entries = read_metadata(metadata_path) if Path(metadata_path).exists() else []
    entries = [e for e in entries if e.model_id != model_id] + [entry]
    write_metadata(metadata_path, entries)
    return entry


def load_registry(models_dir, metadata_path) -> Registry:
    """Load every listed model that exists and deserializes; skip the rest."""
    loaded, skipped = [], []
    for entry in read_metadata(metadata_path):
        reason = None
        path = Path(models_dir) / entry.file_name
        try:
            Kind.parse(entry.kind)
            model = load_model(path)
        except FileNotFoundError:
            reason = f"model file not found: {path}"
        except (BotflowError, OSError) as exc:
            reason = f"{type(exc).__name__}: {exc}"
        else:
            if model.kind is not Kind.parse(entry.kind):
                reason = f"file holds a {model.kind} model, metadata says {entry.kind}"
            elif tuple(model.feature_names) != entry.features:
                reason = "feature list differs from the model file"
        if reason:
            log.warning("skipping model %s: %s", entry.model_id, reason)
            skipped.append(SkippedModel(entry.model_id, reason))
        else:
            loaded.append(LoadedModel(entry, model))
    if not loaded:
        raise NoValidModels(f"no loadable models in {metadata_path} ({len(skipped)} skipped)")
    log.info("loaded %d models, skipped %d", len(loaded), len(skipped))
    return Registry(loaded, skipped)
