"""k-nearest-neighbour classification with brute-force, kd-tree and
ball-tree search.

All three search paths rank candidates by (distance, training row index)
and compute final distances with the same routine, so on a given dataset
they return identical neighbour sets, including under distance ties.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch

_BOUND_SLACK = 1e-9


def knn_distance(x, y, p: float = 2) -> float:
    """Minkowski distance of order ``p`` (1 = Manhattan, 2 = Euclidean)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"vectors of length {x.size} and {y.size}")
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(row_distances(x, y.reshape(1, -1), p)[0])


def row_distances(q: np.ndarray, rows: np.ndarray, p: float) -> np.ndarray:
    diff = np.abs(rows - q)
    if p == 1:
        return diff.sum(axis=1)
    if p == 2:
        return np.sqrt((diff * diff).sum(axis=1))
    return (diff ** p).sum(axis=1) ** (1.0 / p)


def _norm(v: np.ndarray, p: float) -> float:
    return float(row_distances(np.zeros_like(v), v.reshape(1, -1), p)[0])


class _Best:
    """The k best (distance, index) pairs seen so far."""

    def __init__(self, k: int):
        self.k = k
        self.dist = np.empty(0)
        self.idx = np.empty(0, dtype=np.int64)

    def bound(self) -> float:
        return self.dist[-1] if len(self.dist) == self.k else np.inf

    def push(self, dist: np.ndarray, idx: np.ndarray) -> None:
        d = np.concatenate([self.dist, dist])
        i = np.concatenate([self.idx, idx])
        order = np.lexsort((i, d))[: self.k]
        self.dist, self.idx = d[order], i[order]


def _prunable(lower_bound: float, best: _Best) -> bool:
    bound = best.bound()
    return lower_bound > bound * (1.0 + _BOUND_SLACK) + _BOUND_SLACK


class _SpaceTree:
    """Shared binary space-partitioning layout; subclasses define bounds."""

    def __init__(self, x: np.ndarray, leaf_size: int, p: float):
        self.x = x
        self.p = p
        self.leaf_size = max(1, int(leaf_size))
        self.order = np.arange(len(x))
        self.start, self.end, self.left, self.right = [], [], [], []
        self._init_bounds()
        if len(x):
            self._build(0, len(x))

    def _build(self, start: int, end: int) -> int:
        node = len(self.start)
        self.start.append(start)
        self.end.append(end)
        self.left.append(-1)
        self.right.append(-1)
        pts = self.x[self.order[start:end]]
        self._add_bounds(pts)
        if end - start > self.leaf_size:
            spread = pts.max(axis=0) - pts.min(axis=0)
            if spread.max() > 0:
                dim = int(np.argmax(spread))
                sub = self.order[start:end]
                sub = sub[np.argsort(self.x[sub, dim], kind="stable")]
                self.order[start:end] = sub
                mid = (start + end) // 2
                self.left[node] = self._build(start, mid)
                self.right[node] = self._build(mid, end)
        return node

    def query(self, q: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        best = _Best(k)
        if len(self.x):
            self._search(0, q, best)
        return best.dist, best.idx

    def _search(self, node: int, q: np.ndarray, best: _Best) -> None:
        if self.left[node] == -1:
            pts = self.order[self.start[node]:self.end[node]]
            best.push(row_distances(q, self.x[pts], self.p), pts)
            return
        children = [(self._lower_bound(c, q), c) for c in (self.left[node], self.right[node])]
        children.sort()
        for lb, child in children:
            if not _prunable(lb, best):
                self._search(child, q, best)


class KDTree(_SpaceTree):
    def _init_bounds(self):
        self.lo, self.hi = [], []

    def _add_bounds(self, pts):
        self.lo.append(pts.min(axis=0))
        self.hi.append(pts.max(axis=0))

    def _lower_bound(self, node: int, q: np.ndarray) -> float:
        gap = np.maximum(np.maximum(self.lo[node] - q, q - self.hi[node]), 0.0)
        return _norm(gap, self.p)


class BallTree(_SpaceTree):
    def _init_bounds(self):
        self.centroid, self.radius = [], []

    def _add_bounds(self, pts):
        c = pts.mean(axis=0)
        self.centroid.append(c)
        self.radius.append(float(row_distances(c, pts, self.p).max()))

    def _lower_bound(self, node: int, q: np.ndarray) -> float:
        d = float(row_distances(q, self.centroid[node].reshape(1, -1), self.p)[0])
        return max(0.0, d - self.radius[node])


class KNeighbors:
    def __init__(self, n_neighbors=5, weights="uniform", algorithm="auto", leaf_size=30, p=2,
                 tie_break="Normal"):
        self.n_neighbors = int(n_neighbors)
        self.weights = weights
        self.algorithm = algorithm
        self.leaf_size = int(leaf_size)
        self.p = p
        self.tie_break = tie_break

    def fit(self, x: np.ndarray, y: np.ndarray) -> "KNeighbors":
        self.x = np.ascontiguousarray(x, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int8)
        algo = "kd_tree" if self.algorithm == "auto" else self.algorithm
        if algo == "kd_tree":
            self.index = KDTree(self.x, self.leaf_size, self.p)
        elif algo == "ball_tree":
            self.index = BallTree(self.x, self.leaf_size, self.p)
        else:
            self.index = None
        return self

    def kneighbors(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        k = min(self.n_neighbors, len(self.x))
        if self.index is None:
            d = row_distances(q, self.x, self.p)
            order = np.lexsort((np.arange(len(d)), d))[:k]
            return d[order], order
        return self.index.query(q, k)

    def _vote(self, dist: np.ndarray, idx: np.ndarray) -> int:
        labels = self.y[idx]
        if self.weights == "distance":
            zero = dist == 0
            w = zero.astype(np.float64) if zero.any() else 1.0 / dist
        else:
            w = np.ones(len(idx))
        botnet = float(w[labels == 1].sum())
        normal = float(w[labels == 0].sum())
        if botnet == normal:
            return 1 if self.tie_break == "Botnet" else 0
        return int(botnet > normal)

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(x.shape[0], dtype=np.int8)
        for i, q in enumerate(np.asarray(x, dtype=np.float64)):
            out[i] = self._vote(*self.kneighbors(q))
        return out

    def state(self):
        return {}, {"x": self.x, "y": self.y}

    @classmethod
    def from_state(cls, hp, meta, arrays) -> "KNeighbors":
        model = cls(hp["n_neighbors"], hp["weights"], hp["algorithm"], hp["leaf_size"], hp["p"],
                    hp["tie_break"])
        return model.fit(arrays["x"], arrays["y"])
