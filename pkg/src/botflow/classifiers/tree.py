"""Binary CART decision trees over weighted samples.

Trees are stored as flat parallel arrays (sklearn style) so they serialise
without pointer chasing and predict with a vectorised walk. Class 0 is
Normal, class 1 is Botnet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyNode

LEAF = -1


def impurity(class_counts, criterion: str = "gini") -> float:
    """Node impurity from per-class (possibly weighted) counts."""
    counts = np.asarray(class_counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise EmptyNode("impurity of an empty node is undefined")
    p = counts / total
    if criterion == "gini":
        return float(1.0 - np.sum(p * p))
    if criterion == "entropy":
        nz = p[p > 0]
        return float(-np.sum(nz * np.log2(nz))) + 0.0
    raise ValueError(f"unknown criterion {criterion!r}")


def _weighted_child_impurity(neg: np.ndarray, pos: np.ndarray, criterion: str) -> np.ndarray:
    """Sum over samples of node impurity, i.e. weight * impurity, vectorised."""
    tot = neg + pos
    with np.errstate(divide="ignore", invalid="ignore"):
        if criterion == "gini":
            out = tot - (neg * neg + pos * pos) / tot
        else:
            out = -(_xlogx(neg, tot) + _xlogx(pos, tot))
    return np.where(tot > 0, out, 0.0)


def _xlogx(part: np.ndarray, tot: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = part * np.log2(part / tot)
    return np.where(part > 0, r, 0.0)


def _node_impurity(neg: float, pos: float, criterion: str) -> float:
    tot = neg + pos
    if criterion == "gini":
        return 1.0 - (neg * neg + pos * pos) / (tot * tot)
    h = 0.0
    for part in (neg, pos):
        if part > 0:
            q = part / tot
            h -= q * math.log2(q)
    return h


@dataclass
class Tree:
    feature: np.ndarray  # int64, LEAF for leaves
    threshold: np.ndarray  # float64; go left when x <= threshold
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, 2) weighted class totals
    n_samples: np.ndarray
    weighted_n: np.ndarray
    impurity: np.ndarray
    n_features: int

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``x``."""
        node = np.zeros(x.shape[0], dtype=np.int64)
        rows = np.arange(x.shape[0])
        while True:
            feat = self.feature[node]
            internal = feat != LEAF
            if not internal.any():
                return node
            r = rows[internal]
            n = node[internal]
            go_left = x[r, feat[internal]] <= self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        v = self.value[self.apply(x)]
        return v / v.sum(axis=1, keepdims=True)

    def predict(self, x: np.ndarray) -> np.ndarray:
        v = self.value[self.apply(x)]
        # ties go to Normal (class 0)
        return (v[:, 1] > v[:, 0]).astype(np.int8)

    def feature_importances(self) -> np.ndarray:
        """Weighted impurity decrease per feature, normalised to sum to 1
        (all zeros for a single-leaf tree)."""
        imp = np.zeros(self.n_features)
        for i in np.flatnonzero(self.feature != LEAF):
            l, r = self.left[i], self.right[i]
            imp[self.feature[i]] += (
                self.weighted_n[i] * self.impurity[i]
                - self.weighted_n[l] * self.impurity[l]
                - self.weighted_n[r] * self.impurity[r]
            )
        imp = np.maximum(imp, 0.0)
        total = imp.sum()
        return imp / total if total > 0 else imp

    def arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        return {
            prefix + "feature": self.feature, prefix + "threshold": self.threshold,
            prefix + "left": self.left, prefix + "right": self.right,
            prefix + "value": self.value, prefix + "n_samples": self.n_samples,
            prefix + "weighted_n": self.weighted_n, prefix + "impurity": self.impurity,
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray], n_features: int, prefix: str = "") -> "Tree":
        return cls(
            arrays[prefix + "feature"], arrays[prefix + "threshold"], arrays[prefix + "left"],
            arrays[prefix + "right"], arrays[prefix + "value"], arrays[prefix + "n_samples"],
            arrays[prefix + "weighted_n"], arrays[prefix + "impurity"], n_features,
        )


def balanced_weights(y: np.ndarray) -> np.ndarray:
    """n_samples / (n_classes * class_count) per row."""
    counts = np.bincount(y.astype(np.int64), minlength=2).astype(np.float64)
    per_class = len(y) / (2.0 * np.where(counts > 0, counts, 1.0))
    return per_class[y.astype(np.int64)]


def resolve_max_features(max_features, n_features: int) -> int:
    if max_features is None:
        return n_features
    if max_features == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if max_features == "log2":
        return max(1, int(math.log2(n_features)))
    return max(1, min(int(max_features), n_features))


class TreeBuilder:
    """Grow one tree by depth-first greedy splitting.

    Exhaustive splitting evaluates every midpoint between consecutive
    distinct values; ``splitter="random"`` draws one uniform threshold per
    candidate feature. Equal-quality splits resolve to the lowest feature
    index, then the lowest threshold.
    """

    def __init__(self, criterion="gini", splitter="best", min_samples_split=2, min_samples_leaf=1,
                 min_weight_fraction_leaf=0.0, max_depth=None, max_features=None,
                 rng: np.random.Generator | None = None):
        self.criterion = criterion
        self.splitter = splitter
        self.min_samples_split = int(min_samples_split)
        self.min_samples_leaf = int(min_samples_leaf)
        self.min_weight_fraction_leaf = float(min_weight_fraction_leaf)
        self.max_depth = max_depth
        self.max_features = max_features
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def build(self, x: np.ndarray, y: np.ndarray, sample_weight: np.ndarray | None = None) -> Tree:
        n_features = x.shape[1]
        w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
        keep = np.flatnonzero(w > 0)
        x, y, w = x[keep], y[keep].astype(np.int8), w[keep]
        min_weight_leaf = self.min_weight_fraction_leaf * w.sum()
        n_try = resolve_max_features(self.max_features, n_features)
        max_depth = math.inf if self.max_depth is None else self.max_depth

        feature, threshold, left, right = [], [], [], []
        value, n_samples, weighted_n, impurities = [], [], [], []

        def new_node(idx: np.ndarray) -> tuple[int, float, float]:
            wi, yi = w[idx], y[idx]
            pos = float(np.sum(wi[yi == 1]))
            neg = float(np.sum(wi[yi == 0]))
            node = len(feature)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append((neg, pos))
            n_samples.append(len(idx))
            weighted_n.append(neg + pos)
            impurities.append(_node_impurity(neg, pos, self.criterion))
            return node, neg, pos

        root, neg, pos = new_node(np.arange(len(y)))
        stack = [(root, np.arange(len(y)), 0, neg, pos)]
        while stack:
            node, idx, depth, neg, pos = stack.pop()
            n = len(idx)
            if (depth >= max_depth or n < self.min_samples_split or n < 2 * self.min_samples_leaf
                    or neg + pos < 2 * min_weight_leaf or neg == 0 or pos == 0):
                continue
            split = self._best_split(x, y, w, idx, n_try, min_weight_leaf)
            if split is None:
                continue
            feat, thr = split
            go_left = x[idx, feat] <= thr
            li, ri = idx[go_left], idx[~go_left]
            lnode, lneg, lpos = new_node(li)
            rnode, rneg, rpos = new_node(ri)
            feature[node], threshold[node] = feat, thr
            left[node], right[node] = lnode, rnode
            # push right first so the left subtree gets lower node ids
            stack.append((rnode, ri, depth + 1, rneg, rpos))
            stack.append((lnode, li, depth + 1, lneg, lpos))

        return Tree(
            np.asarray(feature, dtype=np.int64), np.asarray(threshold, dtype=np.float64),
            np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
            np.asarray(value, dtype=np.float64).reshape(-1, 2),
            np.asarray(n_samples, dtype=np.int64), np.asarray(weighted_n, dtype=np.float64),
            np.asarray(impurities, dtype=np.float64), n_features,
        )

    def _candidate_features(self, x: np.ndarray, idx: np.ndarray, n_try: int) -> list[int]:
        n_features = x.shape[1]
        if n_try >= n_features:
            order = range(n_features)
        else:
            order = self.rng.permutation(n_features)
        chosen = []
        for f in order:
            col = x[idx, f]
            if col.min() == col.max():
                continue  # constant in this node; does not count toward n_try
            chosen.append(int(f))
            if len(chosen) == n_try:
                break
        return sorted(chosen)

    def _best_split(self, x, y, w, idx, n_try, min_weight_leaf):
        best = None
        best_score = math.inf
        msl = self.min_samples_leaf
        yi, wi = y[idx], w[idx]
        for f in self._candidate_features(x, idx, n_try):
            col = x[idx, f]
            if self.splitter == "random":
                lo, hi = col.min(), col.max()
                thr = self.rng.uniform(lo, hi)
                if thr >= hi:
                    thr = lo
                mask = col <= thr
                nl = int(mask.sum())
                if nl < msl or len(col) - nl < msl:
                    continue
                wl_pos = float(np.sum(wi[mask & (yi == 1)]))
                wl_neg = float(np.sum(wi[mask & (yi == 0)]))
                wr_pos = float(np.sum(wi[~mask & (yi == 1)]))
                wr_neg = float(np.sum(wi[~mask & (yi == 0)]))
                if wl_pos + wl_neg < min_weight_leaf or wr_pos + wr_neg < min_weight_leaf:
                    continue
                score = float(
                    _weighted_child_impurity(np.array([wl_neg]), np.array([wl_pos]), self.criterion)[0]
                    + _weighted_child_impurity(np.array([wr_neg]), np.array([wr_pos]), self.criterion)[0]
                )
                if score < best_score:
                    best_score, best = score, (f, float(thr))
                continue

            order = np.argsort(col, kind="stable")
            xs = col[order]
            ws = wi[order]
            ys = yi[order]
            pos_c = np.cumsum(ws * ys)
            tot_c = np.cumsum(ws)
            neg_c = tot_c - pos_c
            n = len(xs)
            # split after position i: left = [0..i], right = [i+1..n-1]
            i = np.arange(n - 1)
            valid = (xs[:-1] < xs[1:]) & (i + 1 >= msl) & (n - i - 1 >= msl)
            if min_weight_leaf > 0:
                lw = tot_c[:-1]
                rw = tot_c[-1] - lw
                valid &= (lw >= min_weight_leaf) & (rw >= min_weight_leaf)
            if not valid.any():
                continue
            lneg, lpos = neg_c[:-1], pos_c[:-1]
            rneg, rpos = neg_c[-1] - lneg, pos_c[-1] - lpos
            score = (_weighted_child_impurity(lneg, lpos, self.criterion)
                     + _weighted_child_impurity(rneg, rpos, self.criterion))
            score = np.where(valid, score, np.inf)
            j = int(np.argmin(score))
            if score[j] < best_score:
                thr = (xs[j] + xs[j + 1]) / 2.0
                if thr >= xs[j + 1]:
                    thr = xs[j]
                best_score, best = float(score[j]), (f, float(thr))
        return best


class DecisionTree:
    """Single CART tree behind the common estimator interface."""

    def __init__(self, criterion="gini", splitter="best", min_samples_split=2, min_samples_leaf=1,
                 min_weight_fraction_leaf=0.0, class_weight=None, max_depth=None, max_features=None,
                 seed=0):
        self.params = dict(criterion=criterion, splitter=splitter, min_samples_split=min_samples_split,
                           min_samples_leaf=min_samples_leaf,
                           min_weight_fraction_leaf=min_weight_fraction_leaf, max_depth=max_depth,
                           max_features=max_features)
        self.class_weight = class_weight
        self.seed = seed

    def fit(self, x: np.ndarray, y: np.ndarray) -> "DecisionTree":
        w = balanced_weights(y) if self.class_weight == "balanced" else None
        rng = np.random.default_rng(self.seed)
        self.tree = TreeBuilder(**self.params, rng=rng).build(x, y, w)
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.tree.predict(x)

    def feature_importances(self) -> np.ndarray:
        return self.tree.feature_importances()

    def state(self):
        return {"n_features": self.tree.n_features}, self.tree.arrays()

    @classmethod
    def from_state(cls, hp, meta, arrays) -> "DecisionTree":
        model = cls(**{k: hp[k] for k in ("criterion", "splitter", "min_samples_split", "min_samples_leaf",
                                          "min_weight_fraction_leaf", "class_weight", "max_depth",
                                          "max_features")})
        model.tree = Tree.from_arrays(arrays, meta["n_features"])
        return model
