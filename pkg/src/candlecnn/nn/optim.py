import numpy as np

from candlecnn.nn.layers import ShapeMismatch


def _check(params, grads):
    if params.keys() != grads.keys():
        raise ShapeMismatch("params and grads have different keys")
    for k in params:
        if params[k].shape != grads[k].shape:
            raise ShapeMismatch(f"{k}: param {params[k].shape} vs grad {grads[k].shape}")


def sgd_step(params, grads, rate):
    """In-place ``p -= rate * g``."""
    _check(params, grads)
    for k, p in params.items():
        p -= p.dtype.type(rate) * grads[k]


class SGD:
    def __init__(self, rate):
        self.rate = rate

    def step(self, params, grads):
        sgd_step(params, grads, self.rate)


class Adam:
    """Bias-corrected Adam; ``m``, ``v`` and ``t`` persist across steps."""

    def __init__(self, rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.rate = rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads):
        _check(params, grads)
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for k, p in params.items():
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(p)
                self.v[k] = np.zeros_like(p)
            m, v = self.m[k], self.v[k]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            step = (self.rate / c1) * m / (np.sqrt(v / c2) + self.eps)
            p -= step.astype(p.dtype, copy=False)


def adam_step(params, grads, state, rate):
    """Functional form: ``state`` is an :class:`Adam` instance (or None)."""
    if state is None:
        state = Adam(rate)
    state.rate = rate
    state.step(params, grads)
    return state


def make_optimizer(name, rate):
    name = name.lower()
    if name == "sgd":
        return SGD(rate)
    if name == "adam":
        return Adam(rate)
    raise ValueError(f"unknown optimizer {name!r}")
