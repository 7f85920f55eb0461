from __future__ import annotations

import math

import numpy as np


def gaussian_density(x, mean, var):
    """Normal likelihood of ``x`` for one feature under one class."""
    return np.exp(-((np.asarray(x) - mean) ** 2) / (2.0 * var)) / np.sqrt(2.0 * math.pi * var)


class GaussianNB:
    """Per-class feature means/variances with class priors.

    Variances are population variances plus ``var_smoothing`` times the
    largest feature variance, so that constant features stay finite.
    """

    def __init__(self, var_smoothing: float = 1e-9):
        self.var_smoothing = var_smoothing

    def fit(self, x: np.ndarray, y: np.ndarray) -> "GaussianNB":
        n_features = x.shape[1]
        epsilon = self.var_smoothing * float(np.max(np.var(x, axis=0))) if len(x) else 0.0
        if epsilon <= 0:
            epsilon = self.var_smoothing if self.var_smoothing > 0 else 1e-300
        self.theta = np.zeros((2, n_features))
        self.var = np.zeros((2, n_features))
        self.prior = np.zeros(2)
        for c in (0, 1):
            rows = x[y == c]
            self.theta[c] = rows.mean(axis=0)
            self.var[c] = rows.var(axis=0) + epsilon
            self.prior[c] = len(rows) / len(x)
        self.epsilon = epsilon
        return self

    def joint_log_likelihood(self, x: np.ndarray) -> np.ndarray:
        out = np.empty((x.shape[0], 2))
        for c in (0, 1):
            ll = -0.5 * np.sum(np.log(2.0 * math.pi * self.var[c]))
            ll = ll - 0.5 * np.sum((x - self.theta[c]) ** 2 / self.var[c], axis=1)
            out[:, c] = math.log(self.prior[c]) + ll
        return out

    def predict(self, x: np.ndarray) -> np.ndarray:
        jll = self.joint_log_likelihood(x)
        return (jll[:, 1] > jll[:, 0]).astype(np.int8)

    def state(self):
        return {"epsilon": self.epsilon}, {"theta": self.theta, "var": self.var, "prior": self.prior}

    @classmethod
    def from_state(cls, hp, meta, arrays) -> "GaussianNB":
        model = cls(hp["var_smoothing"])
        model.epsilon = meta["epsilon"]
        model.theta, model.var, model.prior = arrays["theta"], arrays["var"], arrays["prior"]
        return model
