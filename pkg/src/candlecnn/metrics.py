"""Confusion counts and the derived binary-classification scores.

Class 1 ("price rises") is the positive class. Every score is total: a
zero denominator yields 0.0 instead of raising.
"""
import math
from dataclasses import dataclass

import numpy as np


class LengthMismatch(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    def swapped(self):
        """The same outcomes with the positive and negative classes exchanged."""
        return Confusion(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


def confusion(predictions, labels):
    p = np.asarray(predictions).astype(np.int64).ravel()
    y = np.asarray(labels).astype(np.int64).ravel()
    if p.shape != y.shape:
        raise LengthMismatch(f"{p.shape[0]} predictions vs {y.shape[0]} labels")
    if p.shape[0] == 0:
        raise EmptyInput("nothing to evaluate")
    if not (np.isin(p, (0, 1)).all() and np.isin(y, (0, 1)).all()):
        raise ValueError("classes must be 0 or 1")
    return Confusion(
        tp=int(np.sum((p == 1) & (y == 1))),
        fp=int(np.sum((p == 1) & (y == 0))),
        tn=int(np.sum((p == 0) & (y == 0))),
        fn=int(np.sum((p == 0) & (y == 1))),
    )


def sensitivity(c):
    d = c.tp + c.fn
    return c.tp / d if d else 0.0


def specificity(c):
    d = c.tn + c.fp
    return c.tn / d if d else 0.0


def accuracy(c):
    return (c.tp + c.tn) / c.total if c.total else 0.0


def mcc(c):
    factors = ((c.tp + c.fp), (c.tp + c.fn), (c.tn + c.fp), (c.tn + c.fn))
    if 0 in factors:
        return 0.0
    num = c.tp * c.tn - c.fp * c.fn
    # integer product keeps the radicand exact for any realistic count
    return num / math.sqrt(math.prod(factors))


def scores(c):
    return {
        "sensitivity": sensitivity(c),
        "specificity": specificity(c),
        "accuracy": accuracy(c),
        "mcc": mcc(c),
    }
