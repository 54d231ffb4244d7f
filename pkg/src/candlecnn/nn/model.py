"""Layer-stack description, parameter initialisation and the model wrapper."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from candlecnn.nn.layers import (
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    MaxPool2D,
    MissingCache,
    NonFinite,
    ShapeMismatch,
    softmax,
)


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # conv | pool | dropout | flatten | dense
    size: int = 0
    activation: str | None = None
    rate: float = 0.0


@dataclass(frozen=True)
class ModelSpec:
    layers: tuple
    input_shape: tuple = (3, 96, 96)
    kernel_size: int = 3

    def descriptor(self):
        """Canonical JSON text; two specs are equal iff descriptors are."""
        return json.dumps(
            {
                "input_shape": list(self.input_shape),
                "kernel_size": self.kernel_size,
                "layers": [
                    [l.kind, l.size, l.activation, l.rate] for l in self.layers
                ],
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_descriptor(cls, text):
        d = json.loads(text)
        layers = tuple(LayerSpec(k, s, a, r) for k, s, a, r in d["layers"])
        return cls(layers, tuple(d["input_shape"]), d["kernel_size"])


def default_spec(input_shape=(3, 96, 96), dropout=(0.25, 0.25, 0.5)):
    """The stock-trend CNN: four conv/pool blocks, Dense-256, Dense-2."""
    d1, d2, d3 = dropout
    return ModelSpec(
        (
            LayerSpec("conv", 32, "relu"),
            LayerSpec("pool"),
            LayerSpec("conv", 48, "relu"),
            LayerSpec("pool"),
            LayerSpec("dropout", rate=d1),
            LayerSpec("conv", 64, "relu"),
            LayerSpec("pool"),
            LayerSpec("conv", 96, "relu"),
            LayerSpec("pool"),
            LayerSpec("dropout", rate=d2),
            LayerSpec("flatten"),
            LayerSpec("dense", 256, "relu"),
            LayerSpec("dropout", rate=d3),
            LayerSpec("dense", 2),
        ),
        tuple(input_shape),
    )


def _build(spec):
    layers = []
    shape = tuple(spec.input_shape)
    for ls in spec.layers:
        if ls.kind == "conv":
            layer = Conv2D(shape[0], ls.size, spec.kernel_size, ls.activation)
        elif ls.kind == "pool":
            layer = MaxPool2D()
        elif ls.kind == "dropout":
            layer = Dropout(ls.rate)
        elif ls.kind == "flatten":
            layer = Flatten()
        elif ls.kind == "dense":
            if len(shape) != 1:
                raise ShapeMismatch(f"dense layer needs flat input, got {shape}")
            layer = Dense(shape[0], ls.size, ls.activation)
        else:
            raise ValueError(f"unknown layer kind {ls.kind!r}")
        shape = layer.output_shape(shape)
        layers.append(layer)
    return layers, shape


class Model:
    """A built :class:`ModelSpec` with its parameters.

    ``params`` maps ``"<index>.<name>"`` (e.g. ``"0.w"``) to the arrays
    owned by the layers, so optimisers can update them in place.
    """

    def __init__(self, spec, dtype=np.float32, seed=0):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.layers, self.output_shape = _build(spec)
        # input gradient of the first trainable layer is never needed
        for layer in self.layers:
            if hasattr(layer, "need_dx"):
                layer.need_dx = False
                break
        self.init_params(seed)

    def init_params(self, seed):
        """He-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        for layer in self.layers:
            if not layer.params:
                continue
            limit = np.sqrt(6.0 / layer.fan_in)
            w = rng.uniform(-limit, limit, size=layer.params["w"].shape)
            layer.params["w"] = w.astype(self.dtype)
            layer.params["b"] = np.zeros(layer.params["b"].shape, dtype=self.dtype)

    @property
    def params(self):
        return {
            f"{i}.{name}": arr
            for i, layer in enumerate(self.layers)
            for name, arr in layer.params.items()
        }

    def set_params(self, values):
        for key, arr in values.items():
            i, name = key.split(".")
            layer = self.layers[int(i)]
            if layer.params[name].shape != arr.shape:
                raise ShapeMismatch(f"{key}: {arr.shape} != {layer.params[name].shape}")
            layer.params[name] = np.asarray(arr, dtype=self.dtype).copy()

    def param_count(self):
        return sum(a.size for a in self.params.values())

    def forward(self, x, train=False, rng=None):
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[1:] != tuple(self.spec.input_shape):
            raise ShapeMismatch(f"input {x.shape[1:]} != {tuple(self.spec.input_shape)}")
        if train and rng is None:
            raise ValueError("training-mode forward needs an rng for dropout")
        for i, layer in enumerate(self.layers):
            x = layer.forward(x, train=train, rng=rng)
            if not np.isfinite(x).all():
                raise NonFinite(f"non-finite activation after layer {i} ({type(layer).__name__})")
        return x

    def backward(self, dlogits):
        """Backpropagate d(loss)/d(logits); returns grads keyed like ``params``."""
        d = np.asarray(dlogits, dtype=self.dtype)
        for layer in reversed(self.layers):
            if d is None:
                raise MissingCache("gradient chain broken before the first layer")
            d = layer.backward(d)
        return {
            f"{i}.{name}": layer.grads[name]
            for i, layer in enumerate(self.layers)
            for name in layer.params
        }

    def predict_proba(self, x, batch_size=64):
        x = np.asarray(x, dtype=self.dtype)
        out = []
        for s in range(0, x.shape[0], batch_size):
            out.append(softmax(self.forward(x[s:s + batch_size], train=False)))
        for layer in self.layers:
            layer._cache = None
        return np.concatenate(out) if out else np.zeros((0, 2), dtype=self.dtype)

    def predict(self, x, batch_size=64):
        """``(classes, probabilities)``; ties go to class 0 (first index)."""
        probs = self.predict_proba(x, batch_size)
        return np.argmax(probs, axis=1), probs


def predict_one(model, tensor):
    """Class and probability pair for a single ``(C, H, W)`` tensor."""
    tensor = np.asarray(tensor)
    if tensor.shape != tuple(model.spec.input_shape):
        raise ShapeMismatch(f"tensor {tensor.shape} != {tuple(model.spec.input_shape)}")
    classes, probs = model.predict(tensor[None])
    return int(classes[0]), (float(probs[0, 0]), float(probs[0, 1]))
