"""Fixture architectures and seeded initialization.

cnn_a: conv(3->16)-relu-pool-conv(16->32)-relu-pool-flatten-dense(2048->128)-relu-dense(128->10)
cnn_b: same with a third conv block (32->64), dense input 1024.

Both assume (3, 32, 32) inputs. Weights are uniform in
+-sqrt(6 / (fan_in + fan_out)) from one seeded generator, biases zero.
"""

from __future__ import annotations

import numpy as np

from .layers import Conv2D, Dense, Flatten, MaxPool2x2, ReLU, SoftmaxOutput
from .network import Network


def _glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(np.float32)


def _conv(rng, in_c, out_c, k=3):
    w = _glorot_uniform(rng, (out_c, in_c, k, k), in_c * k * k, out_c * k * k)
    return Conv2D(w, np.zeros(out_c, dtype=np.float32))


def _dense(rng, in_d, out_d):
    w = _glorot_uniform(rng, (out_d, in_d), in_d, out_d)
    return Dense(w, np.zeros(out_d, dtype=np.float32))


def cnn_a(seed: int, classes: int = 10, in_shape=(3, 32, 32)) -> Network:
    rng = np.random.default_rng(seed)
    c, h, w = in_shape
    flat = 32 * (h // 4) * (w // 4)
    net = Network([
        _conv(rng, c, 16), ReLU(), MaxPool2x2(),
        _conv(rng, 16, 32), ReLU(), MaxPool2x2(),
        Flatten(),
        _dense(rng, flat, 128), ReLU(),
        _dense(rng, 128, classes),
        SoftmaxOutput(),
    ])
    net.validate_shapes(in_shape)
    return net


def cnn_b(seed: int, classes: int = 10, in_shape=(3, 32, 32)) -> Network:
    rng = np.random.default_rng(seed)
    c, h, w = in_shape
    flat = 64 * (h // 8) * (w // 8)
    net = Network([
        _conv(rng, c, 16), ReLU(), MaxPool2x2(),
        _conv(rng, 16, 32), ReLU(), MaxPool2x2(),
        _conv(rng, 32, 64), ReLU(), MaxPool2x2(),
        Flatten(),
        _dense(rng, flat, 128), ReLU(),
        _dense(rng, 128, classes),
        SoftmaxOutput(),
    ])
    net.validate_shapes(in_shape)
    return net


ARCHITECTURES = {"cnn-a": cnn_a, "cnn-b": cnn_b}
