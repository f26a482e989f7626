"""Fractional-order deep neural networks trained with discrete adjoints.

Each layer of the network is one step of the L1 discretization of a Caputo
fractional ODE, so a layer sees the increments of every layer before it.
"""

from fracdnn.errors import (
    ConvergenceError,
    FracDNNError,
    LineSearchError,
    NonFiniteError,
    ShapeError,
)
from fracdnn.network import HyperParams, NetworkParams, forward_propagate, xavier_init
from fracdnn.classifier import accuracy, cross_entropy, objective, predict, softmax
from fracdnn.data import (Dataset, batch_normalize, generate_cls, generate_perfume_standin,
                          load_csv)
from fracdnn.trainer import TrainConfig, TrainedModel, test, train

__all__ = [
    "ConvergenceError",
    "Dataset",
    "FracDNNError",
    "HyperParams",
    "LineSearchError",
    "NetworkParams",
    "NonFiniteError",
    "ShapeError",
    "TrainConfig",
    "TrainedModel",
    "accuracy",
    "batch_normalize",
    "cross_entropy",
    "forward_propagate",
    "generate_cls",
    "generate_perfume_standin",
    "load_csv",
    "objective",
    "predict",
    "softmax",
    "test",
    "train",
    "xavier_init",
]
