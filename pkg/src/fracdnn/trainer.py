"""Mini-batch training loop, testing phase and the layer-gradient experiment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from fracdnn.adjoint import flat_problem
from fracdnn.classifier import accuracy, predict, softmax
from fracdnn.data import Dataset, batch_normalize, sample_minibatch
from fracdnn.errors import LineSearchError, NonFiniteError, ShapeError
from fracdnn.network import HyperParams, NetworkParams, forward_propagate, xavier_init
from fracdnn.optimizer import (OptConfig, OptTrace, bfgs_minimize, design_blocks, flatten,
                               steepest_descent_minimize, unflatten)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    hyper: HyperParams = field(default_factory=HyperParams)
    m1: int = 6
    m2: int = 30
    batch_fraction: float = 0.5
    seed: int = 0
    backward: str = "exact"
    optimizer: str = "bfgs"
    opt: OptConfig = field(default_factory=OptConfig)

    def __post_init__(self):
        if self.m1 < 1 or self.m2 < 0:
            raise ValueError("m1 must be >= 1 and m2 >= 0")
        if not 0 < self.batch_fraction <= 1:
            raise ValueError(f"batch fraction must lie in (0, 1], got {self.batch_fraction}")
        if self.backward not in ("exact", "paper"):
            raise ValueError(f"backward must be 'exact' or 'paper', got {self.backward!r}")
        if self.optimizer not in ("bfgs", "steepest"):
            raise ValueError(f"optimizer must be 'bfgs' or 'steepest', got {self.optimizer!r}")

    def opt_config(self) -> OptConfig:
        return replace(self.opt, max_iters=self.m2)


@dataclass
class TrainedModel:
    params: NetworkParams
    hyper: HyperParams
    class_names: Optional[list] = None
    summary: dict = field(default_factory=dict)
    traces: list = field(default_factory=list, repr=False, compare=False)


def layer_norm_fn(n_f: int, n_c: int, n_layers: int) -> Callable:
    """Map a flat gradient to the 2-norms of (dK_0, db_0) and (dK_{N-1}, db_{N-1})."""
    blocks = design_blocks(n_f, n_c, n_layers)
    k0 = blocks["K"].start
    b0 = blocks["b"].start
    sz = n_f * n_f

    def norms(g):
        first = np.concatenate([g[k0:k0 + sz], g[b0:b0 + 1]])
        last = np.concatenate([g[k0 + (n_layers - 1) * sz:k0 + n_layers * sz],
                               g[b0 + n_layers - 1:b0 + n_layers]])
        return float(np.linalg.norm(first)), float(np.linalg.norm(last))

    return norms


def train(dataset: Dataset, config: TrainConfig, on_iteration: Optional[Callable] = None,
          init: Optional[NetworkParams] = None) -> TrainedModel:
    """Outer loop over random normalized mini-batches, inner BFGS (or steepest
    descent) solve on each, parameters carried over between batches.

    ``on_iteration(i, trace, alpha)`` is called after every outer iteration.
    """
    hyper = config.hyper
    n_f, n_c, N = dataset.n_features, dataset.n_classes, hyper.n_layers
    params = init.copy() if init is not None else xavier_init(config.seed, n_f, n_c, N)
    if params.n_features != n_f or params.n_classes != n_c or params.n_layers != N:
        raise ShapeError("initial parameters do not match the dataset and depth")
    minimize = bfgs_minimize if config.optimizer == "bfgs" else steepest_descent_minimize
    norms = layer_norm_fn(n_f, n_c, N)
    x = flatten(params)
    alphas, objectives, traces = [], [], []

    for i in range(config.m1):
        batch = sample_minibatch(dataset, config.batch_fraction, config.seed, i)
        f, g = flat_problem(batch.Y, batch.C, hyper, n_c, config.backward)
        try:
            x, trace = minimize(f, g, x, config.opt_config(), layer_norms=norms)
        except NonFiniteError as exc:
            raise NonFiniteError(f"outer iteration {i + 1}: {exc}", index=exc.index) from exc
        except LineSearchError as exc:
            raise LineSearchError(f"outer iteration {i + 1}: {exc}") from exc
        params = unflatten(x, n_f, n_c, N)
        Y = forward_propagate(params, batch.Y, hyper)
        _, alpha = accuracy(predict(softmax(params.W, Y[-1])), batch.C)
        alphas.append(alpha)
        objectives.append(float(trace.records[-1].objective))
        traces.append(trace)
        log.info("outer %d/%d: objective %.6g, alpha_train %.2f%%, %d inner iterations",
                 i + 1, config.m1, objectives[-1], alpha, len(trace.records) - 1)
        if on_iteration is not None:
            on_iteration(i, trace, alpha)

    model = TrainedModel(params, hyper, dataset.class_names)
    _, alpha_full = test(model, dataset)
    model.summary = {
        "alpha_train_batches": alphas,
        "objective_history": objectives,
        "alpha_train": alphas[-1],
        "alpha_train_full": alpha_full,
    }
    model.traces = traces
    return model


def test(model: TrainedModel, dataset: Dataset):
    """Normalize the whole set as one batch, propagate, and score.

    Returns ``(C_test, alpha_test)``; labels are only used for the score.
    """
    if dataset.n_features != model.params.n_features:
        raise ShapeError(f"data has {dataset.n_features} features, model expects "
                         f"{model.params.n_features}")
    if dataset.n_classes != model.params.n_classes:
        raise ShapeError(f"data has {dataset.n_classes} classes, model expects "
                         f"{model.params.n_classes}")
    Y = forward_propagate(model.params, batch_normalize(dataset.Y), model.hyper)
    C_test = predict(softmax(model.params.W, Y[-1]))
    _, alpha = accuracy(C_test, dataset.C)
    return C_test, alpha


test.__test__ = False  # keep pytest from collecting it when imported into test modules


def confusion_counts(C_pred, C_obs) -> np.ndarray:
    """``counts[i, j]`` = samples of true class i predicted as class j."""
    n_c = C_obs.shape[0]
    out = np.zeros((n_c, n_c), dtype=int)
    np.add.at(out, (np.argmax(C_obs, axis=0), np.argmax(C_pred, axis=0)), 1)
    return out


def vanishing_gradient_experiment(dataset: Dataset, n_layers: int,
                                  modes=("plain", "residual", "fractional"),
                                  config: Optional[TrainConfig] = None) -> dict:
    """Train each mode from the same initialization with steepest descent and
    no regularization; return ``{mode: OptTrace}`` with first- and last-layer
    gradient norms on every iteration."""
    config = config or TrainConfig()
    base = replace(config.hyper, n_layers=n_layers, xi_W=0.0, xi_K=0.0, xi_b=0.0)
    init = xavier_init(config.seed, dataset.n_features, dataset.n_classes, n_layers)
    out = {}
    for mode in modes:
        cfg = replace(config, hyper=replace(base, mode=mode), optimizer="steepest")
        model = train(dataset, cfg, init=init)
        merged = OptTrace()
        for t in model.traces:
            merged.records.extend(t.records)
            merged.resets += t.resets
        out[mode] = merged
    return out


def median_layer_ratio(trace: OptTrace) -> float:
    """Median over iterations of first-layer / last-layer gradient norm."""
    r = [rec.first_layer_norm / rec.last_layer_norm for rec in trace.records
         if rec.last_layer_norm]
    return float(np.median(r))


__all__ = [
    "TrainConfig",
    "TrainedModel",
    "confusion_counts",
    "median_layer_ratio",
    "test",
    "train",
    "vanishing_gradient_experiment",
]
