"""BFGS and steepest descent with Armijo backtracking.

Both minimizers work on flat float vectors; :func:`flatten` and
:func:`unflatten` convert network parameters in the fixed order
``W, K_0..K_{N-1}, b_0..b_{N-1}``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from fracdnn.errors import LineSearchError, ShapeError
from fracdnn.network import NetworkParams

log = logging.getLogger(__name__)


def flatten(params: NetworkParams) -> np.ndarray:
    return np.concatenate([params.W.ravel(), params.K.ravel(), params.b.ravel()])


def n_design(n_f: int, n_c: int, n_layers: int) -> int:
    return n_c * n_f + n_layers * n_f * n_f + n_layers


def unflatten(x, n_f: int, n_c: int, n_layers: int) -> NetworkParams:
    x = np.asarray(x, dtype=float)
    if x.shape != (n_design(n_f, n_c, n_layers),):
        raise ShapeError(
            f"vector of length {x.size} does not match n_f={n_f}, n_c={n_c}, N={n_layers}")
    i = n_c * n_f
    j = i + n_layers * n_f * n_f
    return NetworkParams(x[:i].reshape(n_c, n_f).copy(),
                         x[i:j].reshape(n_layers, n_f, n_f).copy(),
                         x[j:].copy())


def design_blocks(n_f: int, n_c: int, n_layers: int) -> dict:
    """Slices of the flat vector belonging to W, K and b."""
    i = n_c * n_f
    j = i + n_layers * n_f * n_f
    return {"W": slice(0, i), "K": slice(i, j), "b": slice(j, j + n_layers)}


@dataclass(frozen=True)
class OptConfig:
    max_iters: int = 30
    grad_tol: float = 1e-6
    c1: float = 1e-4
    rho: float = 0.5
    max_backtracks: int = 30
    initial_step: float = 1.0

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not 0 < self.c1 < 1:
            raise ValueError(f"c1 must lie in (0, 1), got {self.c1}")
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")


@dataclass
class IterRecord:
    iteration: int
    objective: float
    grad_norm: float
    step: float = 0.0
    backtracks: int = 0
    first_layer_norm: Optional[float] = None
    last_layer_norm: Optional[float] = None


@dataclass
class OptTrace:
    records: list = field(default_factory=list)
    converged: bool = False
    resets: int = 0

    def append(self, rec: IterRecord):
        self.records.append(rec)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    def to_jsonl(self, fh, **extra):
        for r in self.records:
            fh.write(json.dumps({**extra, **asdict(r)}) + "\n")


def armijo_search(f: Callable, x, d, g, config: OptConfig, fx: Optional[float] = None):
    """Backtrack from ``initial_step`` until ``f(x + a d) <= f(x) + c1 a <g, d>``.

    Returns ``(step, x_new, f_new, n_backtracks)``.
    """
    slope = float(np.dot(g, d))
    if not slope < 0:
        raise LineSearchError(f"not a descent direction (<g, d> = {slope:.3e})")
    if fx is None:
        fx = f(x)
    alpha = config.initial_step
    for k in range(config.max_backtracks + 1):
        x_new = x + alpha * d
        try:
            f_new = f(x_new)
        except ArithmeticError:
            f_new = np.inf
        if np.isfinite(f_new) and f_new <= fx + config.c1 * alpha * slope:
            return alpha, x_new, f_new, k
        alpha *= config.rho
    raise LineSearchError(f"no sufficient decrease after {config.max_backtracks} backtracks")


def _minimize(f, grad_f, x0, config, use_bfgs, layer_norms=None):
    x = np.array(x0, dtype=float)
    n = x.size
    H = np.eye(n)
    fx = f(x)
    g = grad_f(x)
    trace = OptTrace()

    def record(it, step=0.0, bt=0):
        rec = IterRecord(it, float(fx), float(np.linalg.norm(g)), step, bt)
        if layer_norms is not None:
            rec.first_layer_norm, rec.last_layer_norm = layer_norms(g)
        trace.append(rec)

    record(0)
    for it in range(1, config.max_iters + 1):
        if np.linalg.norm(g) <= config.grad_tol:
            trace.converged = True
            break
        d = -H @ g if use_bfgs else -g
        if not np.dot(d, g) < 0:
            H = np.eye(n)
            d = -g
            trace.resets += 1
        try:
            step, x_new, f_new, bt = armijo_search(f, x, d, g, config, fx)
        except LineSearchError:
            if not use_bfgs or np.array_equal(d, -g):
                raise
            # one identity reset, then give up
            log.debug("line search failed at iteration %d, resetting BFGS matrix", it)
            H = np.eye(n)
            trace.resets += 1
            d = -g
            step, x_new, f_new, bt = armijo_search(f, x, d, g, config, fx)
        g_new = grad_f(x_new)
        if use_bfgs:
            s = x_new - x
            y = g_new - g
            sy = float(np.dot(s, y))
            if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
                r = 1.0 / sy
                Hy = H @ y
                H = (H - r * (np.outer(s, Hy) + np.outer(Hy, s))
                     + (r * r * float(y @ Hy) + r) * np.outer(s, s))
        x, fx, g = x_new, f_new, g_new
        record(it, step, bt)
    else:
        trace.converged = bool(np.linalg.norm(g) <= config.grad_tol)
    return x, trace


def bfgs_minimize(f, grad_f, x0, config: OptConfig = OptConfig(), layer_norms=None):
    """BFGS on the inverse Hessian, starting from the identity.

    The update is skipped when ``<s, y> <= 1e-10 |s| |y|``. ``layer_norms``
    optionally maps a gradient vector to ``(first, last)`` norms that are
    logged with every iteration.
    """
    return _minimize(f, grad_f, x0, config, True, layer_norms)


def steepest_descent_minimize(f, grad_f, x0, config: OptConfig = OptConfig(), layer_norms=None):
    return _minimize(f, grad_f, x0, config, False, layer_norms)
