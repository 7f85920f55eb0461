"""Confusion-matrix metrics and the stratified cross-validation harness."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classifiers.model import fit, predict_batch
from .classifiers.params import ClassifierSpec
from .dataset import FoldPlan, LabeledDataset, stratified_kfold
from .errors import BotflowError, EmptyMatrix, FoldError, LengthMismatch
from .flowcore import LabelClass

log = logging.getLogger(__name__)

METRIC_NAMES = ("precision", "recall", "f1", "accuracy", "fpr")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with Botnet as the positive class."""

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


FPR_BASES = ("tn", "negatives")


def score(cm: ConfusionMatrix, fpr_basis: str = "tn") -> dict[str, float]:
    """Accuracy, precision, recall, F1 and false positive rate.

    ``fpr_basis="tn"`` gives FP/TN, the ratio commonly reported in per-capture
    FPR figures; ``"negatives"`` gives FP/(FP+TN). The two agree to within
    (FP/TN)^2 when alerts are rare. A zero denominator yields 0 for that
    metric (FP/TN with TN == 0 and FP > 0 yields 1).
    """
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix is empty")
    if fpr_basis not in FPR_BASES:
        raise ValueError(f"fpr_basis must be one of {FPR_BASES}, got {fpr_basis!r}")
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    # 2PR/(P+R) reduced to counts: one rounding step instead of four
    f1 = 2 * cm.tp / (2 * cm.tp + cm.fp + cm.fn) if cm.tp else 0.0
    if fpr_basis == "tn":
        fpr = cm.fp / cm.tn if cm.tn else (1.0 if cm.fp else 0.0)
    else:
        fpr = cm.fp / (cm.fp + cm.tn) if cm.fp + cm.tn else 0.0
    return {
        "accuracy": (cm.tp + cm.tn) / cm.total,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "fpr": fpr,
    }


def f1_from(precision: float, recall: float) -> float:
    return 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0


def _codes(labels) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.dtype.kind in "iub":
        return arr.astype(np.int64)
    return np.array([LabelClass(v).code if not isinstance(v, LabelClass) else v.code for v in labels],
                    dtype=np.int64)


def confusion_from_predictions(y_true: Sequence, y_pred: Sequence) -> ConfusionMatrix:
    """Count outcomes; labels may be LabelClass values, their strings, or 0/1 codes."""
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} true labels vs {len(y_pred)} predictions")
    if len(y_true) == 0:
        raise LengthMismatch("no labels to compare")
    t, p = _codes(y_true), _codes(y_pred)
    return ConfusionMatrix(
        tp=int(np.count_nonzero((t == 1) & (p == 1))),
        fp=int(np.count_nonzero((t == 0) & (p == 1))),
        tn=int(np.count_nonzero((t == 0) & (p == 0))),
        fn=int(np.count_nonzero((t == 1) & (p == 0))),
    )


@dataclass(frozen=True)
class FoldResult:
    fold: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    fpr: float
    fit_time_s: float
    cm: ConfusionMatrix

    def metrics(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


@dataclass(frozen=True)
class EvalReport:
    spec: ClassifierSpec
    k: int
    folds: tuple[FoldResult, ...]
    dataset: str = ""
    seed: int | None = 0

    def mean(self, name: str) -> float:
        return float(np.mean([getattr(f, name) for f in self.folds]))

    @property
    def means(self) -> dict[str, float]:
        out = {name: self.mean(name) for name in METRIC_NAMES}
        out["fit_time_s"] = self.mean("fit_time_s")
        return out

    @property
    def total_fit_time(self) -> float:
        return float(sum(f.fit_time_s for f in self.folds))

    @property
    def confusion(self) -> ConfusionMatrix:
        total = ConfusionMatrix()
        for f in self.folds:
            total = total + f.cm
        return total

    def rows(self) -> list[dict]:
        """One dict per fold plus a final ``mean`` row."""
        out = []
        for f in self.folds:
            row = {"fold": f.fold, **f.metrics(), "fit_time_s": f.fit_time_s,
                   "tp": f.cm.tp, "fp": f.cm.fp, "tn": f.cm.tn, "fn": f.cm.fn}
            out.append(row)
        cm = self.confusion
        out.append({"fold": "mean", **self.means, "tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn})
        return out

    def to_json(self) -> str:
        return json.dumps({"spec": self.spec.to_dict(), "k": self.k, "dataset": self.dataset,
                           "seed": self.seed, "total_fit_time_s": self.total_fit_time,
                           "rows": self.rows()}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        data = json.loads(text)
        folds = []
        for row in data["rows"]:
            if row["fold"] == "mean":
                continue
            cm = ConfusionMatrix(row["tp"], row["fp"], row["tn"], row["fn"])
            folds.append(FoldResult(row["fold"], *(row[m] for m in METRIC_NAMES), row["fit_time_s"], cm))
        return cls(ClassifierSpec.from_dict(data["spec"]), data["k"], tuple(folds), data["dataset"],
                   data["seed"])

    def to_text(self) -> str:
        return format_table(self.rows(), title=f"{self.spec.kind} on {self.dataset or 'dataset'} "
                                                f"({self.k}-fold, seed {self.seed})")

    def without_timing(self) -> list[dict]:
        return [{k: v for k, v in row.items() if k != "fit_time_s"} for row in self.rows()]


_TABLE_COLUMNS = (("fold", "Fold"), ("fit_time_s", "Fit Time (s)"), ("precision", "Precision"),
                  ("recall", "Recall"), ("f1", "F1 score"), ("accuracy", "Accuracy"), ("fpr", "FPR"))


def format_table(rows: list[dict], title: str = "") -> str:
    """Aligned text table with the usual result columns."""
    cells = [[h for _, h in _TABLE_COLUMNS]]
    for row in rows:
        line = []
        for key, _ in _TABLE_COLUMNS:
            value = row.get(key, "")
            line.append(f"{value:.4f}" if isinstance(value, float) else str(value))
        cells.append(line)
    widths = [max(len(r[i]) for r in cells) for i in range(len(_TABLE_COLUMNS))]
    lines = [title] if title else []
    for i, r in enumerate(cells):
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def fold_seed(seed: int | None, fold: int) -> int:
    """Independent per-fold training seed, the same whatever the worker count."""
    base = 0 if seed is None else seed
    return int(np.random.SeedSequence([base, fold]).generate_state(1)[0])


def evaluate_fold(spec: ClassifierSpec, ds: LabeledDataset, plan: FoldPlan, fold: int,
                  seed: int | None) -> FoldResult:
    train, test = plan.train_indices(fold), plan.test_indices(fold)
    try:
        model = fit(spec, ds.subset(train), seed=fold_seed(seed, fold))
        pred = predict_batch(model, ds.x[test])
    except BotflowError as exc:
        raise FoldError(fold, exc) from exc
    cm = confusion_from_predictions(ds.y[test], pred)
    m = score(cm)
    return FoldResult(fold, m["precision"], m["recall"], m["f1"], m["accuracy"], m["fpr"],
                      model.fit_time, cm)


def _fold_task(args):
    return evaluate_fold(*args)


def default_jobs() -> int:
    return os.cpu_count() or 1


def cross_validate(spec: ClassifierSpec, ds: LabeledDataset, k: int = 10, seed: int | None = 0,
                   parallelism: int = 1, plan: FoldPlan | None = None) -> EvalReport:
    """Stratified k-fold evaluation; results do not depend on ``parallelism``."""
    if not isinstance(spec, ClassifierSpec):
        spec = ClassifierSpec.from_dict(spec)
    plan = plan if plan is not None else stratified_kfold(ds, k, seed)
    tasks = [(spec, ds, plan, f, seed) for f in range(plan.k)]
    workers = max(1, min(int(parallelism), plan.k))
    if workers == 1:
        results = [_fold_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fold_task, tasks))
    results.sort(key=lambda r: r.fold)
    report = EvalReport(spec, plan.k, tuple(results), ds.provenance, seed)
    log.info("%s %d-fold: mean f1 %.4f", spec.kind, plan.k, report.mean("f1"))
    return report
