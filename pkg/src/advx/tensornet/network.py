"""Network container plus inference, loss, and input-gradient operations.

A network is an ordered layer list ending in exactly one SoftmaxOutput.
Parameters and forward activations are float32; softmax, loss, and all
gradient accumulation run in float64 so the input gradient survives a
finite-difference check at 1e-3 relative error.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import ShapeError
from .layers import Conv2D, Dense, Layer, ReLU, SoftmaxOutput


class Network:
    """Immutable-after-training feedforward classifier.

    The penultimate embedding layer is the layer feeding the final Dense:
    its (post-nonlinearity) output is what the projector consumes after the
    output layer is detached.
    """

    def __init__(self, layers: Sequence[Layer]):
        layers = list(layers)
        if not layers or not isinstance(layers[-1], SoftmaxOutput):
            raise ShapeError("network must end in a single softmax output layer")
        if sum(isinstance(l, SoftmaxOutput) for l in layers) != 1:
            raise ShapeError("network must contain exactly one softmax output layer")
        dense_idx = [i for i, l in enumerate(layers) if isinstance(l, Dense)]
        if not dense_idx:
            raise ShapeError("network needs a final dense classifier layer")
        self.layers = layers
        self.final_dense_index = dense_idx[-1]
        # Output of this layer is the embedding (input of the final dense).
        self.embedding_index = dense_idx[-1] - 1

    @property
    def class_count(self) -> int:
        return self.layers[self.final_dense_index].weight.shape[0]

    def validate_shapes(self, input_shape) -> tuple:
        """Run the shape algebra through every layer; raises ShapeError on
        any incompatibility, returns the logits shape."""
        shape = tuple(input_shape)
        for layer in self.layers:
            shape = layer.output_shape(shape)
        return shape

    def _check_batch(self, xb: np.ndarray, dtype=np.float32) -> np.ndarray:
        xb = np.asarray(xb, dtype=dtype)
        if xb.ndim != 4:
            raise ShapeError(f"expected (B, C, H, W) batch, got shape {xb.shape}")
        self.validate_shapes(xb.shape[1:])
        return xb

    def forward_batch(self, xb: np.ndarray, cache=None, dtype=np.float32) -> np.ndarray:
        """Pre-softmax logits for a batch (float32 unless asked otherwise)."""
        out = self._check_batch(xb, dtype)
        sink = cache if cache is not None else []
        for layer in self.layers:
            out = layer.forward(out, sink)
        return out

    def embed_batch(self, xb: np.ndarray) -> np.ndarray:
        """Post-nonlinearity activations of the embedding layer."""
        out = self._check_batch(xb)
        sink = []
        for layer in self.layers[: self.embedding_index + 1]:
            out = layer.forward(out, sink)
        return out

    def parameters(self):
        for layer in self.layers:
            if layer.params:
                yield layer


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, computed and normalized in float64."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, y: int) -> float:
    """-log softmax(logits)[y], float64."""
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    if not 0 <= int(y) < logits.shape[0]:
        raise ShapeError(f"label {y} out of range for {logits.shape[0]} classes")
    m = logits.max()
    return float(np.log(np.exp(logits - m).sum()) - (logits[int(y)] - m))


def batch_cross_entropy(logits: np.ndarray, ys: np.ndarray) -> float:
    """Mean cross-entropy over a batch, accumulated in float64."""
    z = np.asarray(logits, dtype=np.float64)
    ys = np.asarray(ys)
    if ys.min() < 0 or ys.max() >= z.shape[1]:
        raise ShapeError(f"labels out of range for {z.shape[1]} classes")
    m = z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z - m).sum(axis=1)) + m[:, 0]
    return float(np.mean(lse - z[np.arange(len(ys)), ys]))


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Logits for a single (C, H, W) image."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 3:
        raise ShapeError(f"expected (C, H, W) image, got shape {x.shape}")
    return net.forward_batch(x[None])[0]

def predict(net: Network, x: np.ndarray):
    """(label, confidences) with lowest-index argmax tie-break."""
    probs = softmax(forward(net, x))
    return int(np.argmax(probs)), probs


def predict_batch(net: Network, xb: np.ndarray):
    probs = softmax(net.forward_batch(xb))
    return np.argmax(probs, axis=1), probs


def penultimate_embedding(net: Network, x: np.ndarray) -> np.ndarray:
    """Embedding of one image: the network output with the final classifier
    detached."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 3:
        raise ShapeError(f"expected (C, H, W) image, got shape {x.shape}")
    return net.embed_batch(x[None])[0]


def input_gradient_batch(net: Network, xb: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """d mean-loss/d x for every image, backpropagated in float64,
    scaled so each row is the gradient of its own (un-averaged) loss."""
    ys = np.asarray(ys, dtype=np.int64)
    cache = []
    logits = net.forward_batch(xb, cache=cache)
    if ys.shape[0] != logits.shape[0]:
        raise ShapeError("one label per image required")
    if ys.min() < 0 or ys.max() >= logits.shape[1]:
        raise ShapeError(f"labels out of range for {logits.shape[1]} classes")
    probs = softmax(logits)
    dlogits = probs.copy()
    dlogits[np.arange(len(ys)), ys] -= 1.0  # softmax - onehot, float64
    dout = dlogits
    for layer in reversed(net.layers):
        dout, _ = layer.backward(dout, cache, want_param_grads=False)
    return dout


def input_gradient(net: Network, x: np.ndarray, y: int) -> np.ndarray:
    """Gradient of softmax_cross_entropy(forward(net, x), y) w.r.t. x."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 3:
        raise ShapeError(f"expected (C, H, W) image, got shape {x.shape}")
    return input_gradient_batch(net, x[None], np.asarray([y]))[0]
