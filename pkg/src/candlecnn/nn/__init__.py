"""From-scratch CNN: layers, model, optimisers, training and checkpoints."""
from candlecnn.nn.layers import (
    MissingCache,
    NonFinite,
    OddDimension,
    ShapeMismatch,
    softmax,
    softmax_cross_entropy,
)
from candlecnn.nn.model import LayerSpec, Model, ModelSpec, predict_one, default_spec
from candlecnn.nn.optim import SGD, Adam, adam_step, sgd_step
from candlecnn.nn.training import EmptyDataset, NonFiniteLoss, TrainConfig, train

__all__ = [
    "Adam", "EmptyDataset", "LayerSpec", "MissingCache", "Model", "ModelSpec",
    "NonFinite", "NonFiniteLoss", "OddDimension", "SGD", "ShapeMismatch",
    "TrainConfig", "adam_step", "predict_one", "sgd_step", "softmax",
    "softmax_cross_entropy", "default_spec", "train",
]
