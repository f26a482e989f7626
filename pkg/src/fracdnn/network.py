"""Network parameters, initialization and forward propagation.

Three propagation modes share the same parameter shapes:

``fractional``  Y_j = Y_{j-1} - hist_j + tau**g Gamma(2-g) tanh(K_{j-1} Y_{j-1} + b_{j-1})
``residual``    Y_j = Y_{j-1} + tau tanh(K_{j-1} Y_{j-1} + b_{j-1})
``plain``       Y_j = tanh(K_{j-1} Y_{j-1} + b_{j-1})

where ``hist_j`` is the L1 left history sum over all earlier increments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fracdnn.errors import NonFiniteError, ShapeError
from fracdnn.fractional import check_order, left_history_sum, step_scale

MODES = ("fractional", "residual", "plain")


@dataclass
class NetworkParams:
    """Design variables: class map ``W`` (n_c x n_f), operators ``K``
    (N x n_f x n_f) and one scalar bias per layer ``b`` (N,)."""

    W: np.ndarray
    K: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.K = np.asarray(self.K, dtype=float)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.W.ndim != 2 or self.K.ndim != 3:
            raise ShapeError("W must be 2-D and K must be 3-D (layer, n_f, n_f)")
        N, nf, nf2 = self.K.shape
        if nf != nf2 or self.W.shape[1] != nf:
            raise ShapeError(f"inconsistent shapes W{self.W.shape}, K{self.K.shape}")
        if self.b.shape[0] != N:
            raise ShapeError(f"{N} operators but {self.b.shape[0]} biases")

    @property
    def n_layers(self) -> int:
        return self.K.shape[0]

    @property
    def n_features(self) -> int:
        return self.K.shape[1]

    @property
    def n_classes(self) -> int:
        return self.W.shape[0]

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.W.copy(), self.K.copy(), self.b.copy())

    @classmethod
    def zeros(cls, n_f: int, n_c: int, n_layers: int) -> "NetworkParams":
        return cls(np.zeros((n_c, n_f)), np.zeros((n_layers, n_f, n_f)), np.zeros(n_layers))


@dataclass(frozen=True)
class HyperParams:
    gamma: float = 0.5
    tau: float = 0.2
    n_layers: int = 5
    mode: str = "fractional"
    xi_W: float = 0.0
    xi_K: float = 0.0
    xi_b: float = 0.0
    # which state the adjoint's sigma' is evaluated at in the optimize-then-discretize
    # backward sweep: "Y_j" (default) or "Y_j+1"
    sigma_index: str = "Y_j"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "fractional":
            check_order(self.gamma)
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.n_layers < 1:
            raise ValueError(f"n_layers must be >= 1, got {self.n_layers}")
        if min(self.xi_W, self.xi_K, self.xi_b) < 0:
            raise ValueError("regularization strengths must be nonnegative")
        if self.sigma_index not in ("Y_j", "Y_j+1"):
            raise ValueError(f"sigma_index must be 'Y_j' or 'Y_j+1', got {self.sigma_index!r}")

    @property
    def final_time(self) -> float:
        return self.n_layers * self.tau

    def update_scale(self) -> float:
        """Factor multiplying the activation term in one layer update."""
        if self.mode == "fractional":
            return step_scale(self.tau, self.gamma)
        if self.mode == "residual":
            return self.tau
        return 1.0


def activation(x):
    return np.tanh(x)


def activation_derivative(x):
    t = np.tanh(x)
    return 1.0 - t * t


def xavier_init(seed, n_f: int, n_c: int, n_layers: int, kind: str = "tanh") -> NetworkParams:
    """Uniform Xavier initialization; biases start at zero.

    Half-width is ``sqrt(3/n_f)`` for tanh and ``1/sqrt(n_f)`` otherwise.
    """
    if min(n_f, n_c, n_layers) < 1:
        raise ValueError("dimensions must be positive")
    a = np.sqrt(3.0 / n_f) if kind == "tanh" else 1.0 / np.sqrt(n_f)
    rng = np.random.default_rng(seed)
    W = rng.uniform(-a, a, size=(n_c, n_f))
    K = rng.uniform(-a, a, size=(n_layers, n_f, n_f))
    return NetworkParams(W, K, np.zeros(n_layers))


def preactivation(params: NetworkParams, Y: np.ndarray, layer: int) -> np.ndarray:
    """``K_layer @ Y + b_layer`` with the scalar bias broadcast."""
    return params.K[layer] @ Y + params.b[layer]


def forward_propagate(params: NetworkParams, Y0, hyper: HyperParams) -> np.ndarray:
    """Run all layers and return the states as an array of shape (N+1, n_f, n)."""
    Y0 = np.asarray(Y0, dtype=float)
    if Y0.ndim != 2 or Y0.shape[0] != params.n_features:
        raise ShapeError(f"input of shape {Y0.shape} does not match n_f={params.n_features}")
    N = params.n_layers
    if hyper.n_layers != N:
        raise ShapeError(f"hyperparameters declare {hyper.n_layers} layers, params have {N}")
    Y = np.empty((N + 1,) + Y0.shape)
    Y[0] = Y0
    c = hyper.update_scale()
    for j in range(1, N + 1):
        act = activation(preactivation(params, Y[j - 1], j - 1))
        if hyper.mode == "plain":
            nxt = act
        elif hyper.mode == "residual":
            nxt = Y[j - 1] + c * act
        else:
            nxt = Y[j - 1] - left_history_sum(Y, j, hyper.gamma) + c * act
        if not np.all(np.isfinite(nxt)):
            raise NonFiniteError(f"non-finite state at layer {j}", index=j)
        Y[j] = nxt
    return Y
