"""Kernel-density naive Bayes and pseudo-inverse linear discriminant analysis."""
from __future__ import annotations

import math

import numpy as np

from ..errors import InputError

DENSITY_FLOOR = 1e-300
BANDWIDTH_RANGE_FLOOR = 1e-6
BANDWIDTH_ABS_FLOOR = 1e-12
PINV_CUTOFF = 1e-12
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def class_priors(y, w, n_classes):
    sums = np.bincount(y, weights=w, minlength=n_classes)
    return sums / sums.sum()


def silverman_bandwidth(values, feature_range):
    n = values.shape[0]
    sigma = values.std(ddof=1) if n > 1 else 0.0
    h = 1.06 * sigma * n ** -0.2
    return max(h, BANDWIDTH_RANGE_FLOOR * feature_range, BANDWIDTH_ABS_FLOOR)


class NaiveBayesModel:
    kind = "nb"

    def __init__(self, samples, labels, bandwidth, log_prior):
        self.samples = np.asarray(samples, dtype=np.float64)  # training rows grouped by class
        self.labels = np.asarray(labels, dtype=np.int64)
        self.bandwidth = np.asarray(bandwidth, dtype=np.float64)  # C x F
        self.log_prior = np.asarray(log_prior, dtype=np.float64)

    @property
    def n_classes(self):
        return self.log_prior.shape[0]

    def log_density(self, X, c) -> np.ndarray:
        """Sum over features of log KDE densities of class ``c`` at each row."""
        X = np.asarray(X, dtype=np.float64)
        pts = self.samples[self.labels == c]
        h = self.bandwidth[c]
        total = np.zeros(X.shape[0])
        for j in range(X.shape[1]):
            z = (X[:, j:j + 1] - pts[None, :, j]) / h[j]
            dens = np.exp(-0.5 * z * z).mean(axis=1) / h[j] * math.exp(-_LOG_SQRT_2PI)
            total += np.log(np.maximum(dens, DENSITY_FLOOR))
        return total

    def scores(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((X.shape[0], self.n_classes))
        for s in range(0, X.shape[0], 512):
            q = X[s:s + 512]
            for c in range(self.n_classes):
                out[s:s + 512, c] = self.log_prior[c] + self.log_density(q, c)
        return out

    def predict(self, X):
        return np.argmax(self.scores(X), axis=1)

    def state(self):
        return {}, {"samples": self.samples, "labels": self.labels, "bandwidth": self.bandwidth,
                    "log_prior": self.log_prior}

    @classmethod
    def from_state(cls, meta, arrays):
        return cls(arrays["samples"], arrays["labels"], arrays["bandwidth"], arrays["log_prior"])


def train_naive_bayes(X, y, w, n_classes) -> NaiveBayesModel:
    """Per-class, per-feature Gaussian KDE with Silverman bandwidths.

    Weights enter through the class priors only.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    w = np.asarray(w, dtype=np.float64)
    counts = np.bincount(y, minlength=n_classes)
    few = np.flatnonzero(counts < 2)
    if few.size:
        raise InputError(f"naive Bayes needs at least 2 samples per class; class {few[0]} has {counts[few[0]]}")
    rng = X.max(axis=0) - X.min(axis=0)
    bw = np.array([[silverman_bandwidth(X[y == c, j], rng[j]) for j in range(X.shape[1])]
                   for c in range(n_classes)])
    with np.errstate(divide="ignore"):
        log_prior = np.log(class_priors(y, w, n_classes))
    return NaiveBayesModel(X, y, bw, log_prior)


def pseudo_inverse_sym(S, cutoff=PINV_CUTOFF):
    vals, vecs = np.linalg.eigh(S)
    top = vals.max() if vals.size else 0.0
    keep = vals > cutoff * top if top > 0 else np.zeros_like(vals, dtype=bool)
    return (vecs[:, keep] / vals[keep]) @ vecs[:, keep].T


class LDAModel:
    kind = "lda"

    def __init__(self, coef, intercept):
        self.coef = np.asarray(coef, dtype=np.float64)  # F x C
        self.intercept = np.asarray(intercept, dtype=np.float64)

    def scores(self, X):
        return np.asarray(X, dtype=np.float64) @ self.coef + self.intercept

    def predict(self, X):
        return np.argmax(self.scores(X), axis=1)

    def state(self):
        return {}, {"coef": self.coef, "intercept": self.intercept}

    @classmethod
    def from_state(cls, meta, arrays):
        return cls(arrays["coef"], arrays["intercept"])


def train_lda(X, y, w, n_classes) -> LDAModel:
    """Shared-covariance linear discriminant with weighted means and covariance."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    w = np.asarray(w, dtype=np.float64)
    if n_classes < 2:
        raise InputError("LDA needs at least 2 classes")
    if X.shape[0] == 0:
        raise InputError("empty training set")
    F = X.shape[1]
    means = np.zeros((n_classes, F))
    sums = np.bincount(y, weights=w, minlength=n_classes)
    for c in range(n_classes):
        if sums[c] > 0:
            means[c] = (w[y == c, None] * X[y == c]).sum(0) / sums[c]
    D = X - means[y]
    cov = (D * w[:, None]).T @ D / w.sum()
    P = pseudo_inverse_sym(cov)
    coef = P @ means.T
    with np.errstate(divide="ignore"):
        log_prior = np.log(sums / sums.sum())
    intercept = -0.5 * np.einsum("cf,fc->c", means, coef) + log_prior
    return LDAModel(coef, intercept)
