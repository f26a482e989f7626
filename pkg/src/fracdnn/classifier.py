"""Softmax classifier, cross-entropy loss, objective and accuracy."""

from __future__ import annotations

import numpy as np

from fracdnn.errors import ShapeError
from fracdnn.network import HyperParams, NetworkParams, forward_propagate
from fracdnn.regularization import regularization


def log_softmax(W, Y) -> np.ndarray:
    """Column-wise ``logit - max - log(sum(exp(logit - max)))``."""
    Z = np.asarray(W) @ np.asarray(Y)
    Z = Z - Z.max(axis=0, keepdims=True)
    return Z - np.log(np.exp(Z).sum(axis=0, keepdims=True))


def softmax(W, Y) -> np.ndarray:
    """Class probabilities ``S(W, Y)``, one column per sample."""
    Z = np.asarray(W) @ np.asarray(Y)
    E = np.exp(Z - Z.max(axis=0, keepdims=True))
    return E / E.sum(axis=0, keepdims=True)


def cross_entropy(W, Y_N, C_obs) -> float:
    """Mean negative log-probability of the observed classes."""
    C_obs = np.asarray(C_obs)
    n = C_obs.shape[1]
    logS = log_softmax(W, Y_N)
    return float(-np.sum(logS[C_obs.argmax(axis=0), np.arange(n)]) / n)


def objective(params: NetworkParams, Y0, C_obs, hyper: HyperParams) -> float:
    """Loss plus penalty, the scalar the optimizer minimizes."""
    Y = forward_propagate(params, Y0, hyper)
    reg, _ = regularization(params, hyper)
    return cross_entropy(params.W, Y[-1], C_obs) + reg


def predict(S) -> np.ndarray:
    """One-hot argmax per column; ties go to the lowest class index."""
    S = np.asarray(S)
    C = np.zeros_like(S, dtype=float)
    C[S.argmax(axis=0), np.arange(S.shape[1])] = 1.0
    return C


def accuracy(C_pred, C_obs):
    """Return ``(n_correct, percent)`` with ``n_correct = n - |C_obs - C_pred|_F^2 / 2``."""
    C_pred = np.asarray(C_pred, dtype=float)
    C_obs = np.asarray(C_obs, dtype=float)
    if C_pred.shape != C_obs.shape:
        raise ShapeError(f"prediction shape {C_pred.shape} != label shape {C_obs.shape}")
    n = C_obs.shape[1]
    n_correct = int(round(n - 0.5 * np.sum((C_obs - C_pred) ** 2)))
    return n_correct, 100.0 * n_correct / n
