"""Mini-batch training loop."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from candlecnn.nn.layers import NNError, NonFinite, softmax_cross_entropy
from candlecnn.nn.model import Model
from candlecnn.nn.optim import make_optimizer

log = logging.getLogger(__name__)


class EmptyDataset(NNError):
    pass


class NonFiniteLoss(NNError):
    def __init__(self, epoch, batch, detail=""):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"training diverged at epoch {epoch}, batch {batch}" + (f": {detail}" if detail else ""))


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    epochs: int = 20
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    seed: int = 0
    dropout: bool = True
    precision: str = "float32"
    # stop once an epoch's running train accuracy reaches this, if set
    target_accuracy: float | None = None

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if self.precision not in ("float32", "float64"):
            raise ValueError(f"precision must be float32 or float64, got {self.precision}")

    @property
    def dtype(self):
        return np.dtype(self.precision)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


def train(spec, x, y, config, model=None):
    """Fit ``spec`` on ``x`` (``(N, C, H, W)``) and labels ``y``.

    Returns ``(model, history)``. The run is a pure function of the data and
    ``config``: the same seed reproduces the same history bit for bit.
    Accuracy in the history is measured on the training-mode forward passes
    of each epoch (dropout active when enabled).
    """
    if x is None or len(x) == 0:
        raise EmptyDataset("no training samples")
    x = np.asarray(x, dtype=config.dtype)
    y = np.asarray(y, dtype=np.int64)
    if model is None:
        model = Model(spec, dtype=config.dtype, seed=config.seed)
    opt = make_optimizer(config.optimizer, config.learning_rate)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    dropout_rng = np.random.default_rng([config.seed, 2])
    n = x.shape[0]
    history = []
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        total_loss = 0.0
        correct = 0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            xb, yb = x[idx], y[idx]
            try:
                logits = model.forward(xb, train=config.dropout, rng=dropout_rng)
            except NonFinite as exc:
                raise NonFiniteLoss(epoch, b, str(exc)) from exc
            loss, probs, dlogits = softmax_cross_entropy(logits, yb)
            if not np.isfinite(loss):
                raise NonFiniteLoss(epoch, b, f"loss={loss}")
            grads = model.backward(dlogits)
            opt.step(model.params, grads)
            total_loss += loss * len(idx)
            correct += int((np.argmax(probs, axis=1) == yb).sum())
        stats = EpochStats(epoch, total_loss / n, correct / n)
        history.append(stats)
        log.info("epoch %d loss %.6f acc %.4f", epoch, stats.loss, stats.accuracy)
        if config.target_accuracy is not None and stats.accuracy >= config.target_accuracy:
            break
    return model, history


def evaluate_accuracy(model, x, y, batch_size=64):
    classes, _ = model.predict(x, batch_size)
    return float((classes == np.asarray(y)).mean())
