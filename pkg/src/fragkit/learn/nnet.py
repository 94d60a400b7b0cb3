"""One-hidden-layer classifier network trained by scaled conjugate gradient."""
from __future__ import annotations

import math

import numpy as np

from ..errors import InputError, NumericError, ParameterError

MAX_EPOCHS = 1000
MAX_FAIL = 6
MIN_GRAD = 1e-6


class Net:
    """tanh hidden layer followed by a softmax output layer.

    Parameters live in one flat vector laid out as W1 (F x H), b1 (H),
    W2 (H x C), b2 (C).
    """

    def __init__(self, n_in, n_hidden, n_out):
        self.n_in, self.n_hidden, self.n_out = int(n_in), int(n_hidden), int(n_out)

    @property
    def n_params(self):
        return (self.n_in + 1) * self.n_hidden + (self.n_hidden + 1) * self.n_out

    def unpack(self, theta):
        F, H, C = self.n_in, self.n_hidden, self.n_out
        a = F * H
        W1 = theta[:a].reshape(F, H)
        b1 = theta[a:a + H]
        W2 = theta[a + H:a + H + H * C].reshape(H, C)
        b2 = theta[a + H + H * C:]
        return W1, b1, W2, b2

    def init(self, rng) -> np.ndarray:
        F, H, C = self.n_in, self.n_hidden, self.n_out
        parts = [
            rng.uniform(-1, 1, F * H) / math.sqrt(F),
            rng.uniform(-1, 1, H) / math.sqrt(F),
            rng.uniform(-1, 1, H * C) / math.sqrt(H),
            np.zeros(C),
        ]
        return np.concatenate(parts)

    def forward(self, theta, X):
        W1, b1, W2, b2 = self.unpack(theta)
        Z = np.tanh(X @ W1 + b1)
        logits = Z @ W2 + b2
        return Z, logits

    def probabilities(self, theta, X):
        _, logits = self.forward(theta, X)
        logits = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        return e / e.sum(axis=1, keepdims=True)

    def loss(self, theta, X, y, w) -> float:
        _, logits = self.forward(theta, X)
        return _cross_entropy(logits, y, w)

    def loss_grad(self, theta, X, y, w):
        """Weighted mean cross-entropy and its gradient."""
        W1, b1, W2, b2 = self.unpack(theta)
        Z, logits = self.forward(theta, X)
        loss = _cross_entropy(logits, y, w)
        P = _softmax(logits)
        G = P
        G[np.arange(y.shape[0]), y] -= 1.0
        G *= (w / w.sum())[:, None]
        gW2 = Z.T @ G
        gb2 = G.sum(0)
        dZ = (G @ W2.T) * (1.0 - Z * Z)
        gW1 = X.T @ dZ
        gb1 = dZ.sum(0)
        return loss, np.concatenate([gW1.ravel(), gb1, gW2.ravel(), gb2])


def _softmax(logits):
    s = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


def _cross_entropy(logits, y, w):
    s = logits - logits.max(axis=1, keepdims=True)
    logp = s - np.log(np.exp(s).sum(axis=1, keepdims=True))
    return float(-(w * logp[np.arange(y.shape[0]), y]).sum() / w.sum())


def scaled_conjugate_gradient(fg, x0, max_iter=MAX_EPOCHS, min_grad=MIN_GRAD, callback=None):
    """Minimise with Moller's scaled conjugate gradient.

    ``fg(x)`` returns (value, gradient).  ``callback(x)`` runs after every
    accepted step and may return True to stop.  Returns the final point.
    """
    sigma0 = 1e-4
    beta, beta_min, beta_max = 1.0, 1e-15, 1e100
    x = x0.copy()
    f_old, g_new = fg(x)
    g_old = g_new
    d = -g_new
    success = True
    n_success = 0
    n = x.shape[0]
    mu = kappa = theta = 0.0
    for _ in range(max_iter):
        if success:
            mu = d @ g_new
            if mu >= 0:
                d = -g_new
                mu = d @ g_new
            kappa = d @ d
            if kappa < np.finfo(float).eps:
                break
            sigma = sigma0 / math.sqrt(kappa)
            _, g_plus = fg(x + sigma * d)
            theta = d @ (g_plus - g_new) / sigma
        delta = theta + beta * kappa
        if delta <= 0:
            delta = beta * kappa
            beta = beta - theta / kappa
        alpha = -mu / delta
        x_new = x + alpha * d
        f_new, g_candidate = fg(x_new)
        if not math.isfinite(f_new):
            raise NumericError("network loss became non-finite")
        Delta = 2.0 * (f_new - f_old) / (alpha * mu)
        if Delta >= 0:
            success = True
            n_success += 1
            x = x_new
            f_old = f_new
            g_old, g_new = g_new, g_candidate
            if callback is not None and callback(x):
                break
            if np.sqrt(g_new @ g_new) < min_grad:
                break
        else:
            success = False
        if Delta < 0.25:
            beta = min(4.0 * beta, beta_max)
        if Delta > 0.75:
            beta = max(0.5 * beta, beta_min)
        if n_success == n:
            d = -g_new
            n_success = 0
        elif success:
            gamma = (g_old - g_new) @ g_new / mu
            d = gamma * d - g_new
    return x


class NeuralNetModel:
    kind = "nn"

    def __init__(self, net: Net, theta):
        self.net = net
        self.theta = np.asarray(theta, dtype=np.float64)

    def probabilities(self, X):
        return self.net.probabilities(self.theta, np.asarray(X, dtype=np.float64))

    def predict(self, X):
        return np.argmax(self.probabilities(X), axis=1)

    def state(self):
        n = self.net
        return {"n_in": n.n_in, "n_hidden": n.n_hidden, "n_out": n.n_out}, {"theta": self.theta}

    @classmethod
    def from_state(cls, meta, arrays):
        return cls(Net(meta["n_in"], meta["n_hidden"], meta["n_out"]), arrays["theta"])


def train_neural_net(X, y, w, n_classes, hidden_dim, X_val=None, y_val=None, w_val=None,
                     rng_seed=0, max_epochs=MAX_EPOCHS) -> NeuralNetModel:
    """Fit with SCG; with validation rows, keep the parameters of lowest
    validation loss and stop after six evaluations without improvement."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    w = np.asarray(w, dtype=np.float64)
    if hidden_dim < 1:
        raise ParameterError("hidden layer size must be >= 1")
    if X.shape[0] == 0:
        raise InputError("empty training set")
    net = Net(X.shape[1], hidden_dim, n_classes)
    theta0 = net.init(np.random.default_rng(rng_seed))

    def fg(t):
        return net.loss_grad(t, X, y, w)

    has_val = X_val is not None and np.asarray(X_val).shape[0] > 0
    best = {"loss": math.inf, "theta": theta0, "fails": 0}
    if has_val:
        X_val = np.asarray(X_val, dtype=np.float64)
        y_val = np.asarray(y_val, dtype=np.int64)
        w_val = np.asarray(w_val, dtype=np.float64)
        best["loss"] = net.loss(theta0, X_val, y_val, w_val)

    def on_step(t):
        if not has_val:
            return False
        v = net.loss(t, X_val, y_val, w_val)
        if v < best["loss"]:
            best.update(loss=v, theta=t.copy(), fails=0)
        else:
            best["fails"] += 1
        return best["fails"] >= MAX_FAIL

    theta = scaled_conjugate_gradient(fg, theta0, max_epochs, callback=on_step)
    if not np.all(np.isfinite(theta)):
        raise NumericError("network parameters became non-finite")
    return NeuralNetModel(net, best["theta"] if has_val else theta)
