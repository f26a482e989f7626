"""L1-scheme building blocks for left and right Caputo derivatives.

The L1 weights are ``a_m = (m+1)**(1-gamma) - m**(1-gamma)``. For ``gamma == 1``
every weight with ``m >= 1`` is zero and the history sums are skipped, which
also sidesteps ``0**0`` in ``a_0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from fracdnn.errors import ConvergenceError, NonFiniteError, ShapeError


def check_order(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"fractional order must lie in (0, 1], got {gamma}")
    return gamma


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_j = j * tau`` for ``j = 0..n_steps``."""

    tau: float
    n_steps: int

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def final_time(self) -> float:
        return self.n_steps * self.tau

    @property
    def t(self) -> np.ndarray:
        return self.tau * np.arange(self.n_steps + 1)


def l1_coefficient(m: int, gamma: float) -> float:
    """Weight of lag ``m`` in the L1 history sum."""
    if m < 0:
        raise ValueError(f"lag must be nonnegative, got {m}")
    gamma = check_order(gamma)
    if gamma == 1.0:
        return 1.0 if m == 0 else 0.0
    p = 1.0 - gamma
    if m == 0:
        return 1.0
    return (m + 1) ** p - m ** p


def l1_coefficients(n: int, gamma: float) -> np.ndarray:
    """Vector ``[a_0, ..., a_{n-1}]``."""
    gamma = check_order(gamma)
    m = np.arange(n, dtype=float)
    if gamma == 1.0:
        a = np.zeros(n)
        if n:
            a[0] = 1.0
        return a
    p = 1.0 - gamma
    # 0**p == 0 for p > 0, so a_0 == 1 comes out of the formula directly
    return (m + 1.0) ** p - m ** p


def step_scale(tau: float, gamma: float) -> float:
    """Multiplier ``tau**gamma * Gamma(2 - gamma)`` of the right-hand side."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    gamma = check_order(gamma)
    return tau ** gamma * math.gamma(2.0 - gamma)


def left_history_sum(states: Sequence, j: int, gamma: float):
    """Return ``sum_{k=1}^{j-1} a_{j-k} (Y_k - Y_{k-1})``.

    ``states`` is indexed by layer and must hold at least ``Y_0..Y_{j-1}``.
    """
    if j < 1:
        raise ValueError(f"layer index must be >= 1, got {j}")
    if len(states) < j:
        raise ShapeError(f"need states Y_0..Y_{j - 1}, got only {len(states)}")
    gamma = check_order(gamma)
    zero = np.zeros_like(np.asarray(states[0], dtype=float))
    if j == 1 or gamma == 1.0:
        return zero
    Y = np.asarray(states[:j], dtype=float)
    diffs = Y[1:] - Y[:-1]                       # index k-1 holds Y_k - Y_{k-1}
    a = l1_coefficients(j, gamma)[j - 1:0:-1]    # a_{j-1}, ..., a_1
    return np.tensordot(a, diffs, axes=1)


def right_history_sum(adjoints: Sequence, j: int, n_steps: int, gamma: float):
    """Return ``sum_{k=j+1}^{N-1} a_{k-j-1} (P_{k+1} - P_k)``.

    ``adjoints`` is indexed by absolute layer number; only entries
    ``j+1..N`` are read.
    """
    N = n_steps
    if not 0 <= j <= N - 1:
        raise ValueError(f"layer index must lie in [0, {N - 1}], got {j}")
    if len(adjoints) < N + 1:
        raise ShapeError(f"need adjoints up to P_{N}, got only {len(adjoints)} entries")
    gamma = check_order(gamma)
    zero = np.zeros_like(np.asarray(adjoints[N], dtype=float))
    if j == N - 1 or gamma == 1.0:
        return zero
    P = np.asarray(adjoints[j + 1:N + 1], dtype=float)
    diffs = P[1:] - P[:-1]                       # P_{k+1} - P_k for k = j+1..N-1
    a = l1_coefficients(N - j - 1, gamma)        # a_0 .. a_{N-j-2}
    return np.tensordot(a, diffs, axes=1)


def mittag_leffler(alpha: float, z: float, tol: float = 1e-15, max_terms: int = 1000,
                   full_output: bool = False):
    """One-parameter Mittag-Leffler function by direct power series.

    Terms are added with exact float summation (``math.fsum``). The series is
    cut once a term is below ``tol`` in magnitude and smaller than its
    predecessor. Adequate for moderate ``|z|``; for alpha = 1/2 and
    ``z = -4`` the largest term is about 2e6, which bounds the attainable
    absolute accuracy near 1e-9.

    With ``full_output`` the return value is ``(value, n_terms, last_term)``.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    z = float(z)
    terms = []
    prev = math.inf
    for k in range(max_terms):
        arg = alpha * k + 1.0
        try:
            term = _ml_term(alpha, z, k, arg)
        except OverflowError:
            raise ConvergenceError(
                f"Mittag-Leffler series for alpha={alpha}, z={z} overflows at term {k}"
            ) from None
        terms.append(term)
        if abs(term) < tol and abs(term) < prev:
            value = math.fsum(terms)
            if full_output:
                return value, k + 1, abs(term)
            return value
        if z == 0:
            # every later term vanishes
            value = math.fsum(terms)
            return (value, k + 1, 0.0) if full_output else value
        prev = abs(term)
    raise ConvergenceError(
        f"Mittag-Leffler series for alpha={alpha}, z={z} did not reach tol={tol} "
        f"in {max_terms} terms (last |term| = {prev:.3e})"
    )


def _ml_term(alpha, z, k, arg):
    if z == 0:
        return 1.0 if k == 0 else 0.0
    if arg > 171.0 or abs(z) > 1e3:
        # math.gamma or z**k would overflow; work in log space
        mag = math.exp(k * math.log(abs(z)) - math.lgamma(arg))
        return mag if (z > 0 or k % 2 == 0) else -mag
    term = z ** k / math.gamma(arg)
    if not math.isfinite(term):
        raise OverflowError
    return term


def solve_caputo_ivp(gamma: float, rhs: Callable, u0, grid: TimeGrid) -> np.ndarray:
    """Explicit L1 scheme for ``d_t^gamma u = rhs(u)``, ``u(0) = u0``.

    Returns an array whose leading axis is the time index ``0..N``.
    """
    gamma = check_order(gamma)
    N = grid.n_steps
    u0 = np.asarray(u0, dtype=float)
    u = np.empty((N + 1,) + u0.shape)
    u[0] = u0
    c = step_scale(grid.tau, gamma)
    a = l1_coefficients(N + 1, gamma)
    diffs = np.empty((N,) + u0.shape)
    for j in range(N):
        nxt = u[j] + c * np.asarray(rhs(u[j]), dtype=float)
        if j > 0 and gamma != 1.0:
            # sum_{k=0}^{j-1} a_{j-k} (u_{k+1} - u_k)
            nxt = nxt - np.tensordot(a[j:0:-1], diffs[:j], axes=1)
        if not np.all(np.isfinite(nxt)):
            raise NonFiniteError(f"non-finite solution value at step {j + 1}", index=j + 1)
        u[j + 1] = nxt
        diffs[j] = nxt - u[j]
    return u
