"""Tikhonov-type penalty on the design variables.

    R = xi_W/2 |W|_F^2 + xi_K/(2N) sum_j |L K_j|_F^2 + xi_b/(2N) sum_j b_j^2

``L`` is the 5-point negative Laplacian on the n_f x n_f grid of entries of
``K_j`` with Neumann boundaries, so constant kernels are not penalized.
"""

from __future__ import annotations

import numpy as np

from fracdnn.network import HyperParams, NetworkParams


def discrete_laplacian(K) -> np.ndarray:
    """Negative 5-point Laplacian with unit spacing and Neumann boundary.

    A missing neighbour takes the centre value, so each entry becomes
    ``sum over existing neighbours of (K_pq - K_nbr)``. The operator is
    symmetric, which makes it its own adjoint.
    """
    K = np.asarray(K, dtype=float)
    out = np.zeros_like(K)
    dv = K[1:, :] - K[:-1, :]
    dh = K[:, 1:] - K[:, :-1]
    out[:-1, :] -= dv
    out[1:, :] += dv
    out[:, :-1] -= dh
    out[:, 1:] += dh
    return out


def regularization(params: NetworkParams, hyper: HyperParams):
    """Return ``(value, NetworkParams-shaped gradient)``."""
    N = params.n_layers
    LK = np.stack([discrete_laplacian(k) for k in params.K])
    value = (0.5 * hyper.xi_W * np.sum(params.W ** 2)
             + hyper.xi_K / (2 * N) * np.sum(LK ** 2)
             + hyper.xi_b / (2 * N) * np.sum(params.b ** 2))
    gW = hyper.xi_W * params.W
    gK = hyper.xi_K / N * np.stack([discrete_laplacian(lk) for lk in LK])
    gb = hyper.xi_b / N * params.b
    return float(value), NetworkParams(gW, gK, gb)
