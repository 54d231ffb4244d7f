"""Layers with explicit forward/backward passes.

Every layer caches what its backward pass needs during ``forward`` and
raises :class:`MissingCache` if ``backward`` is called first. Parameter
gradients land in ``layer.grads`` under the same keys as ``layer.params``.
"""
import numpy as np

from candlecnn import kernels


class NNError(ValueError):
    pass


class ShapeMismatch(NNError):
    pass


class OddDimension(NNError):
    pass


class MissingCache(NNError):
    pass


class NonFinite(NNError):
    pass


class Layer:
    params = {}

    def __init__(self):
        self.grads = {}
        self._cache = None

    def _take_cache(self):
        if self._cache is None:
            raise MissingCache(f"{type(self).__name__}.backward called before forward")
        cache, self._cache = self._cache, None
        return cache

    def output_shape(self, input_shape):
        return input_shape


def conv2d_forward(x, w, b):
    """Same-padded stride-1 convolution of a batch ``(N, C, H, W)``.

    Returns the output and the im2col columns for reuse in backward.
    """
    f, c, k, k2 = w.shape
    if k != k2 or k % 2 == 0:
        raise ShapeMismatch(f"kernel must be square and odd, got {k}x{k2}")
    if x.ndim != 4 or x.shape[1] != c:
        raise ShapeMismatch(f"input {x.shape} does not match weights {w.shape}")
    n, _, h, wd = x.shape
    cols = kernels.im2col(np.ascontiguousarray(x), k)
    out = cols @ w.reshape(f, -1).T
    out += b
    return np.ascontiguousarray(out.reshape(n, h, wd, f).transpose(0, 3, 1, 2)), cols


def conv2d_backward(dout, x_shape, w, cols, need_dx=True):
    f, c, k, _ = w.shape
    d2 = dout.transpose(0, 2, 3, 1).reshape(-1, f)
    dw = (d2.T @ cols).reshape(w.shape)
    db = d2.sum(axis=0)
    dx = kernels.col2im(d2 @ w.reshape(f, -1), x_shape, k) if need_dx else None
    return dx, dw, db


class Conv2D(Layer):
    def __init__(self, in_channels, filters, kernel_size=3, activation="relu"):
        super().__init__()
        self.in_channels = in_channels
        self.filters = filters
        self.kernel_size = kernel_size
        self.activation = activation
        self.params = {
            "w": np.zeros((filters, in_channels, kernel_size, kernel_size)),
            "b": np.zeros(filters),
        }
        self.need_dx = True

    @property
    def fan_in(self):
        return self.in_channels * self.kernel_size ** 2

    def forward(self, x, train=False, rng=None):
        out, cols = conv2d_forward(x, self.params["w"], self.params["b"])
        if self.activation == "relu":
            np.maximum(out, 0, out=out)
        self._cache = (x.shape, cols, out if self.activation == "relu" else None)
        return out

    def backward(self, dout):
        x_shape, cols, act = self._take_cache()
        if act is not None:
            dout = dout * (act > 0)
        dx, dw, db = conv2d_backward(dout, x_shape, self.params["w"], cols, self.need_dx)
        self.grads = {"w": dw, "b": db}
        return dx

    def output_shape(self, input_shape):
        c, h, w = input_shape
        if c != self.in_channels:
            raise ShapeMismatch(f"conv expects {self.in_channels} channels, got {c}")
        return (self.filters, h, w)


def maxpool2d_forward(x):
    if x.shape[-1] % 2 or x.shape[-2] % 2:
        raise OddDimension(f"2x2 pooling needs even height and width, got {x.shape}")
    return kernels.maxpool_forward(np.ascontiguousarray(x))


class MaxPool2D(Layer):
    def forward(self, x, train=False, rng=None):
        out, arg = maxpool2d_forward(x)
        self._cache = arg
        return out

    def backward(self, dout):
        arg = self._take_cache()
        return kernels.maxpool_backward(np.ascontiguousarray(dout), arg)

    def output_shape(self, input_shape):
        c, h, w = input_shape
        if h % 2 or w % 2:
            raise OddDimension(f"2x2 pooling needs even height and width, got {input_shape}")
        return (c, h // 2, w // 2)


def relu(x):
    return np.maximum(x, 0)


class ReLU(Layer):
    def forward(self, x, train=False, rng=None):
        self._cache = x > 0
        return np.maximum(x, 0)

    def backward(self, dout):
        return dout * self._take_cache()


def dropout(x, rate, train, rng):
    """Inverted dropout; returns ``(output, mask)`` where mask is None in eval."""
    if not 0.0 <= rate < 1.0:
        raise NNError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return x, None
    keep = rng.random(x.shape, dtype=np.float64 if x.dtype == np.float64 else np.float32) >= rate
    mask = keep.astype(x.dtype) * x.dtype.type(1.0 / (1.0 - rate))
    return x * mask, mask


class Dropout(Layer):
    def __init__(self, rate):
        super().__init__()
        self.rate = rate

    def forward(self, x, train=False, rng=None):
        out, mask = dropout(x, self.rate, train, rng)
        self._cache = (mask,)
        return out

    def backward(self, dout):
        (mask,) = self._take_cache()
        return dout if mask is None else dout * mask


class Flatten(Layer):
    def forward(self, x, train=False, rng=None):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._take_cache())

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)


def dense(x, w, b):
    if x.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeMismatch(f"dense input {x.shape} does not match weights {w.shape}")
    return x @ w.T + b


class Dense(Layer):
    def __init__(self, in_features, units, activation=None):
        super().__init__()
        self.in_features = in_features
        self.units = units
        self.activation = activation
        self.params = {"w": np.zeros((units, in_features)), "b": np.zeros(units)}
        self.need_dx = True

    @property
    def fan_in(self):
        return self.in_features

    def forward(self, x, train=False, rng=None):
        out = dense(x, self.params["w"], self.params["b"])
        if self.activation == "relu":
            np.maximum(out, 0, out=out)
        self._cache = (x, out if self.activation == "relu" else None)
        return out

    def backward(self, dout):
        x, act = self._take_cache()
        if act is not None:
            dout = dout * (act > 0)
        self.grads = {"w": dout.T @ x, "b": dout.sum(axis=0)}
        return dout @ self.params["w"] if self.need_dx else None

    def output_shape(self, input_shape):
        if input_shape != (self.in_features,):
            raise ShapeMismatch(f"dense expects ({self.in_features},), got {input_shape}")
        return (self.units,)


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy over the batch, the probabilities, and d(loss)/d(logits)."""
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeMismatch(f"logits {logits.shape} vs labels {labels.shape}")
    n = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_p = z - log_z
    probs = np.exp(log_p)
    loss = -log_p[np.arange(n), labels].mean()
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    return float(loss), probs, grad
