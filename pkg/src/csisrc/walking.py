"""Binary walking detection from SNR time-series features.

Features over an SNR window: sample standard deviation, peak-to-peak
range, max-minus-median, and the third central moment. A small
l2-regularised logistic regression (fitted on standardized features)
separates walking from non-walking windows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .model import CsiError


class InsufficientDataError(CsiError):
    pass


class DegenerateTrainingError(CsiError):
    pass


FEATURE_NAMES = ("std_dev", "peak", "head_size", "third_moment")


@dataclass(frozen=True)
class WalkingFeatures:
    std_dev: float
    peak: float
    head_size: float
    third_moment: float

    def as_array(self) -> np.ndarray:
        return np.array([self.std_dev, self.peak, self.head_size,
                         self.third_moment])


def extract_features(snr_window: Sequence[float]) -> WalkingFeatures:
    s = np.asarray(snr_window, dtype=float)
    if s.size < 2:
        raise InsufficientDataError(
            f"need at least 2 SNR values, got {s.size}")
    mu = s.mean()
    dev = s - mu
    return WalkingFeatures(
        std_dev=float(np.sqrt(np.sum(dev ** 2) / (s.size - 1))),
        peak=float(s.max() - s.min()),
        head_size=float(s.max() - np.median(s)),
        third_moment=float(np.mean(dev ** 3)),
    )


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    threshold: float = 0.5

    def to_json(self) -> str:
        return json.dumps({
            "weights": list(self.weights),
            "bias": self.bias,
            "feature_means": list(self.feature_means),
            "feature_stds": list(self.feature_stds),
            "threshold": self.threshold,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LogisticModel":
        obj = json.loads(text)
        return cls(weights=np.array(obj["weights"]),
                   bias=float(obj["bias"]),
                   feature_means=np.array(obj["feature_means"]),
                   feature_stds=np.array(obj["feature_stds"]),
                   threshold=float(obj.get("threshold", 0.5)))


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def nll_and_grad(params: np.ndarray, X: np.ndarray, labels: np.ndarray,
                 lam: float):
    """Mean negative log-likelihood with l2 penalty on the weights, and
    its gradient. params = [w_0..w_{p-1}, bias]."""
    w = params[:-1]
    b = params[-1]
    margins = X @ w + b
    # log(1 + exp(-m*ysign)) written stably via logaddexp
    ysign = 2.0 * labels - 1.0
    loss = np.mean(np.logaddexp(0.0, -ysign * margins))
    loss += 0.5 * lam * np.dot(w, w)
    p = _sigmoid(margins)
    err = (p - labels) / len(labels)
    grad = np.concatenate([X.T @ err + lam * w, [err.sum()]])
    return loss, grad


def train_on_features(X: np.ndarray, labels: np.ndarray,
                      lam: float = 1e-3, max_iters: int = 500,
                      threshold: float = 0.5) -> LogisticModel:
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if labels.min() == labels.max():
        raise DegenerateTrainingError(
            "training needs at least one positive and one negative window")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds > 0, stds, 1.0)  # constant feature: effectively dropped
    Xs = (X - means) / stds
    x0 = np.zeros(X.shape[1] + 1)
    res = minimize(nll_and_grad, x0, args=(Xs, labels, lam), jac=True,
                   method="L-BFGS-B",
                   options={"maxiter": max_iters, "ftol": 1e-12,
                            "gtol": 1e-10})
    return LogisticModel(weights=res.x[:-1], bias=float(res.x[-1]),
                         feature_means=means, feature_stds=stds,
                         threshold=threshold)


def train(windows: Sequence[tuple], lam: float = 1e-3,
          max_iters: int = 500) -> LogisticModel:
    """Fit from (snr_window, is_walking) pairs."""
    X = np.stack([extract_features(w).as_array() for w, _ in windows])
    labels = np.array([1.0 if flag else 0.0 for _, flag in windows])
    return train_on_features(X, labels, lam=lam, max_iters=max_iters)


def predict(model: LogisticModel, features: WalkingFeatures):
    """Returns (walking probability, decision at the model threshold)."""
    f = (features.as_array() - model.feature_means) / model.feature_stds
    p = float(_sigmoid(np.atleast_1d(model.weights @ f + model.bias))[0])
    return p, p >= model.threshold
