"""Labelled flow datasets: label normalisation, IP-based labelling, feature
matrix construction and stratified k-fold planning."""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import EmptyDataset, NonNumericFeature, TooFewSamples, UnknownField
from .flowcore import COLUMN_TO_ATTR, ATTR_TO_COLUMN, NUMERIC_FEATURES, FlowRecord, LabelClass, read_flow_file

log = logging.getLogger(__name__)

BACKGROUND = "Background"

_BOTNET_RE = re.compile("botnet", re.IGNORECASE)
_NORMAL_RE = re.compile("normal", re.IGNORECASE)


def normalize_label(raw: str | None) -> LabelClass | str:
    """Collapse verbose CTU-13 labels to ``Normal``/``Botnet``.

    Anything mentioning neither token is ``"Background"`` and is excluded
    from training.
    """
    if raw is None:
        return BACKGROUND
    if _BOTNET_RE.search(raw):
        return LabelClass.BOTNET
    if _NORMAL_RE.search(raw):
        return LabelClass.NORMAL
    return BACKGROUND


def label_by_ip(flows: Iterable[FlowRecord], infected_ips: Iterable[str]) -> Iterator[FlowRecord]:
    """Label a flow Botnet when either endpoint is a known infected host."""
    infected = frozenset(ip.strip() for ip in infected_ips)
    if not infected:
        raise ValueError("infected_ips must not be empty")
    for flow in flows:
        bad = flow.src_addr in infected or flow.dst_addr in infected
        yield flow.replace(label=(LabelClass.BOTNET if bad else LabelClass.NORMAL).value)


def read_ip_list(path) -> list[str]:
    lines = Path(path).read_text().splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def _canonical_feature(name: str) -> str:
    if name in COLUMN_TO_ATTR:
        column = name
    elif name in ATTR_TO_COLUMN:
        column = ATTR_TO_COLUMN[name]
    else:
        raise UnknownField(f"unknown flow field {name!r}")
    if column not in NUMERIC_FEATURES:
        raise NonNumericFeature(f"{column!r} is excluded from the behavioural feature set")
    return column


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    x: np.ndarray
    y: np.ndarray  # 0 = Normal, 1 = Botnet
    feature_names: tuple[str, ...]
    provenance: str = ""
    dropped: int = 0  # rows excluded as Background

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.int8)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ValueError(f"shape mismatch: x {x.shape}, y {y.shape}")
        if x.shape[1] != len(self.feature_names):
            raise ValueError("feature_names length does not match matrix columns")
        if not np.all(np.isfinite(x)):
            raise ValueError("dataset contains non-finite values")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def labels(self) -> list[LabelClass]:
        return [LabelClass.from_code(v) for v in self.y]

    def subset(self, rows) -> "LabeledDataset":
        return LabeledDataset(self.x[rows], self.y[rows], self.feature_names, self.provenance)

    def select_columns(self, names: Sequence[str]) -> "LabeledDataset":
        idx = [self.feature_names.index(n) for n in names]
        return LabeledDataset(self.x[:, idx], self.y, tuple(names), self.provenance, self.dropped)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(",".join(self.feature_names).encode())
        h.update(self.x.tobytes())
        h.update(self.y.tobytes())
        return h.hexdigest()[:16]


def build_matrix(flows: Iterable[FlowRecord], features: Sequence[str] = NUMERIC_FEATURES,
                 provenance: str = "") -> LabeledDataset:
    """Numeric matrix over ``features``; rows whose label is not Normal or
    Botnet are dropped and counted in ``LabeledDataset.dropped``."""
    columns = [_canonical_feature(f) for f in features]
    attrs = [COLUMN_TO_ATTR[c] for c in columns]
    rows, ys = [], []
    dropped = 0
    for flow in flows:
        label = normalize_label(flow.label)
        if label == BACKGROUND:
            dropped += 1
            continue
        rows.append([getattr(flow, a) for a in attrs])
        ys.append(label.code)
    x = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(columns))
    ds = LabeledDataset(x, np.asarray(ys, dtype=np.int8), tuple(columns), provenance, dropped)
    if len(ds):
        dist = class_distribution(ds)
        log.info("%s: %d normal, %d botnet (%.2f%%), %d background dropped",
                 provenance or "dataset", dist.normal_count, dist.botnet_count, dist.botnet_pct, dropped)
    return ds


def load_dataset(path, features: Sequence[str] = NUMERIC_FEATURES, infected_ips=None) -> LabeledDataset:
    """Load a ``.binetflow`` file; optionally relabel by infected host IPs."""
    _, flows = read_flow_file(path)
    if infected_ips:
        flows = list(label_by_ip(flows, infected_ips))
    return build_matrix(flows, features, provenance=str(path))


@dataclass(frozen=True)
class ClassDistribution:
    normal_count: int
    botnet_count: int
    botnet_pct: float


def class_distribution(ds: LabeledDataset | np.ndarray) -> ClassDistribution:
    y = ds.y if isinstance(ds, LabeledDataset) else np.asarray(ds)
    botnet = int(np.count_nonzero(y == 1))
    normal = int(np.count_nonzero(y == 0))
    return distribution_from_counts(normal, botnet)


def distribution_from_counts(normal: int, botnet: int) -> ClassDistribution:
    total = normal + botnet
    if total == 0:
        raise EmptyDataset("dataset has no Normal or Botnet rows")
    return ClassDistribution(normal, botnet, round(100.0 * botnet / total, 2))


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int | None = None

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def splits(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        for f in range(self.k):
            yield self.train_indices(f), self.test_indices(f)


def stratified_kfold(ds: LabeledDataset | np.ndarray, k: int = 10, seed: int | None = 0) -> FoldPlan:
    """Assign each row to one of ``k`` folds so every class is spread within
    one row of exact proportionality per fold.

    Rows of each class are shuffled with a seeded generator and dealt round
    robin; the dealing position carries over between classes so that total
    fold sizes stay balanced too.
    """
    y = ds.y if isinstance(ds, LabeledDataset) else np.asarray(ds)
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.default_rng(seed)
    assignments = np.empty(len(y), dtype=np.int64)
    start = 0
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if len(members) < k:
            name = LabelClass.from_code(cls).value
            raise TooFewSamples(f"class {name} has {len(members)} rows, fewer than k={k}")
        members = rng.permutation(members)
        assignments[members] = (start + np.arange(len(members))) % k
        start = (start + len(members)) % k
    return FoldPlan(k, assignments, seed)
