"""Adjoint sweeps, design gradients and finite-difference gradient checks.

Two backward sweeps are available:

* :func:`backward_propagate_paper` discretizes the continuous adjoint
  equation with the right-sided L1 scheme (optimize-then-discretize);
* :func:`backward_propagate_exact` transposes the linearized forward
  recursion, so the resulting gradients are exact for the discrete
  objective (discretize-then-optimize).

Both use the sign convention ``P = -dJ/dY``, so the terminal state is
``-(1/n) W^T (S(W, Y_N) - C_obs)``. At ``gamma == 1`` they coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from fracdnn.classifier import cross_entropy, softmax
from fracdnn.errors import NonFiniteError, ShapeError
from fracdnn.fractional import l1_coefficients, right_history_sum
from fracdnn.network import (HyperParams, NetworkParams, activation_derivative,
                             forward_propagate, preactivation)
from fracdnn.optimizer import design_blocks, flatten, unflatten
from fracdnn.regularization import discrete_laplacian, regularization

__all__ = [
    "GradCheckResult",
    "assemble_gradients",
    "backward_propagate",
    "backward_propagate_exact",
    "backward_propagate_paper",
    "directional_check",
    "discrete_laplacian",
    "flat_problem",
    "gradient_check",
    "network_gradient_check",
    "objective_and_gradient",
    "regularization",
    "terminal_adjoint",
]

BACKWARD_MODES = ("exact", "paper")


def terminal_adjoint(W, Y_N, C_obs) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    n = np.shape(C_obs)[1]
    return -(W.T @ (softmax(W, Y_N) - C_obs)) / n


def _check_states(params, states):
    if states.shape[0] != params.n_layers + 1:
        raise ShapeError(f"expected {params.n_layers + 1} states, got {states.shape[0]}")


def _finite(P, j):
    if not np.all(np.isfinite(P)):
        raise NonFiniteError(f"non-finite adjoint at layer {j}", index=j)
    return P


def backward_propagate_paper(params: NetworkParams, states, hyper: HyperParams, C_obs):
    """Right-sided L1 sweep::

        P_j = P_{j+1} + sum_{k=j+1}^{N-1} a_{k-j-1} (P_{k+1} - P_k)
              + c K_j^T (P_{j+1} * sigma'(K_j Y_s + b_j))

    with ``s = j`` or ``s = j+1`` per ``hyper.sigma_index``. In residual
    mode the history term is absent and ``c = tau``.
    """
    if hyper.mode == "plain":
        raise ValueError("the optimize-then-discretize sweep needs a skip connection; use backward='exact'")
    states = np.asarray(states, dtype=float)
    _check_states(params, states)
    N = params.n_layers
    c = hyper.update_scale()
    P = np.empty_like(states)
    P[N] = _finite(terminal_adjoint(params.W, states[N], C_obs), N)
    shift = 1 if hyper.sigma_index == "Y_j+1" else 0
    for j in range(N - 1, -1, -1):
        ds = activation_derivative(preactivation(params, states[j + shift], j))
        nxt = P[j + 1] + c * (params.K[j].T @ (P[j + 1] * ds))
        if hyper.mode == "fractional":
            nxt = nxt + right_history_sum(P, j, N, hyper.gamma)
        P[j] = _finite(nxt, j)
    return P


def backward_propagate_exact(params: NetworkParams, states, hyper: HyperParams, C_obs):
    """Transpose of the linearized forward map, run from layer N down to 0."""
    states = np.asarray(states, dtype=float)
    _check_states(params, states)
    N = params.n_layers
    c = hyper.update_scale()
    frac = hyper.mode == "fractional" and hyper.gamma != 1.0
    a = l1_coefficients(N + 1, hyper.gamma) if frac else None
    P = np.empty_like(states)
    P[N] = _finite(terminal_adjoint(params.W, states[N], C_obs), N)
    for i in range(N - 1, -1, -1):
        ds = activation_derivative(preactivation(params, states[i], i))
        nxt = c * (params.K[i].T @ (P[i + 1] * ds))
        if hyper.mode != "plain":
            nxt = nxt + P[i + 1]
        if frac:
            # Y_i enters later layers through the L1 history of increments
            m = N - i - 1
            if m > 0:
                nxt = nxt + np.tensordot(a[1:m + 1], P[i + 2:] - P[i + 1:N], axes=1)
            if i >= 1:
                nxt = nxt - a[N - i] * P[N]
        P[i] = _finite(nxt, i)
    return P


def backward_propagate(params, states, hyper, C_obs, mode="exact"):
    if mode == "exact":
        return backward_propagate_exact(params, states, hyper, C_obs)
    if mode == "paper":
        return backward_propagate_paper(params, states, hyper, C_obs)
    raise ValueError(f"backward mode must be one of {BACKWARD_MODES}, got {mode!r}")


def assemble_gradients(params: NetworkParams, states, adjoints, C_obs,
                       hyper: HyperParams) -> NetworkParams:
    """Gradients of loss + penalty with respect to ``W``, ``K_j`` and ``b_j``.

    ``dK_j = -c (P_{j+1} * sigma'(K_j Y_j + b_j)) Y_j^T`` and
    ``db_j = -c <sigma'(K_j Y_j + b_j), P_{j+1}>_F`` where ``c`` is the
    layer update scale, so the result is a gradient in the Euclidean inner
    product on the parameter vector.
    """
    states = np.asarray(states, dtype=float)
    C_obs = np.asarray(C_obs, dtype=float)
    N = params.n_layers
    n = C_obs.shape[1]
    if adjoints.shape != states.shape:
        raise ShapeError(f"adjoint shape {adjoints.shape} != state shape {states.shape}")
    c = hyper.update_scale()
    Y_N = states[N]
    dW = (softmax(params.W, Y_N) - C_obs) @ Y_N.T / n
    dK = np.empty_like(params.K)
    db = np.empty_like(params.b)
    for j in range(N):
        Q = adjoints[j + 1] * activation_derivative(preactivation(params, states[j], j))
        dK[j] = -c * (Q @ states[j].T)
        db[j] = -c * Q.sum()
    _, reg = regularization(params, hyper)
    return NetworkParams(dW + reg.W, dK + reg.K, db + reg.b)


def objective_and_gradient(params: NetworkParams, Y0, C_obs, hyper: HyperParams,
                           backward: str = "exact"):
    """One forward and one backward sweep; returns ``(J, grads, states, adjoints)``."""
    Y = forward_propagate(params, Y0, hyper)
    P = backward_propagate(params, Y, hyper, C_obs, backward)
    reg, _ = regularization(params, hyper)
    J = cross_entropy(params.W, Y[-1], C_obs) + reg
    return J, assemble_gradients(params, Y, P, C_obs, hyper), Y, P


def flat_problem(Y0, C_obs, hyper: HyperParams, n_c: int, backward: str = "exact"):
    """Objective and gradient as functions of the flat design vector."""
    n_f = np.shape(Y0)[0]
    N = hyper.n_layers

    def f(x):
        p = unflatten(x, n_f, n_c, N)
        Y = forward_propagate(p, Y0, hyper)
        return cross_entropy(p.W, Y[-1], C_obs) + regularization(p, hyper)[0]

    def grad(x):
        p = unflatten(x, n_f, n_c, N)
        return flatten(objective_and_gradient(p, Y0, C_obs, hyper, backward)[1])

    return f, grad


@dataclass
class GradCheckResult:
    name: str
    steps: np.ndarray
    zeroth: np.ndarray      # |J(x + h d) - J(x)|, averaged over directions
    first: np.ndarray       # |J(x + h d) - J(x) - h <g, d>|
    slope_zeroth: float
    slope_first: float
    passed: bool


def loglog_slope(h, err) -> float:
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def gradient_check(objective: Callable, gradient: Callable, x, blocks=None,
                   steps=(1e-1, 1e-2, 1e-3, 1e-4), n_directions: int = 1, seed=0,
                   margins=(0.1, 0.2), gradient_value=None) -> dict:
    """Taylor test of ``gradient`` against ``objective`` around ``x``.

    For each block of variables, random unit directions supported on that
    block are drawn and the zeroth-order remainder (expected slope 1) and
    first-order remainder (expected slope 2) are fitted on a log-log scale.
    A block fails when either slope misses its target by more than the
    corresponding margin.
    """
    steps = np.asarray(steps, dtype=float)
    if steps.size < 4 or np.any(np.diff(steps) >= 0):
        raise ValueError("need at least 4 strictly decreasing steps")
    x = np.asarray(x, dtype=float)
    if blocks is None:
        blocks = {"all": slice(0, x.size)}
    J0 = objective(x)
    g = np.asarray(gradient(x) if gradient_value is None else gradient_value)
    rng = np.random.default_rng(seed)
    out = {}
    for name, sl in blocks.items():
        e0 = np.zeros(steps.size)
        e1 = np.zeros(steps.size)
        for _ in range(n_directions):
            d = np.zeros_like(x)
            d[sl] = rng.standard_normal(d[sl].size)
            d /= np.linalg.norm(d)
            gd = float(g @ d)
            for i, h in enumerate(steps):
                Jh = objective(x + h * d)
                e0[i] += abs(Jh - J0)
                e1[i] += abs(Jh - J0 - h * gd)
        e0 /= n_directions
        e1 /= n_directions
        s0 = loglog_slope(steps, e0)
        s1 = loglog_slope(steps, np.maximum(e1, np.finfo(float).tiny))
        ok = abs(s0 - 1.0) <= margins[0] and abs(s1 - 2.0) <= margins[1]
        out[name] = GradCheckResult(name, steps, e0, e1, s0, s1, ok)
    return out


def directional_check(objective: Callable, gradient, x, direction, h: float = 1e-5) -> float:
    """Relative error between ``<g, d>`` and a central difference."""
    d = np.asarray(direction, dtype=float)
    g = gradient(x) if callable(gradient) else np.asarray(gradient)
    fd = (objective(x + h * d) - objective(x - h * d)) / (2 * h)
    gd = float(np.dot(g, d))
    return abs(fd - gd) / max(abs(gd), abs(fd), np.finfo(float).tiny)


def network_gradient_check(params: NetworkParams, Y0, C_obs, hyper: HyperParams,
                           backward: str = "exact", **kw) -> dict:
    """:func:`gradient_check` split into the W, K and b blocks."""
    f, g = flat_problem(Y0, C_obs, hyper, params.n_classes, backward)
    blocks = design_blocks(params.n_features, params.n_classes, params.n_layers)
    return gradient_check(f, g, flatten(params), blocks, **kw)
