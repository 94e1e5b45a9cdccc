"""Weight-file serialization.

Little-endian binary layout:

    8 bytes  magic "ADVXNET1"
    u32      layer count
    per layer:
        u8   kind tag (1 conv2d, 2 relu, 3 maxpool2x2, 4 flatten,
                       5 dense, 6 softmax-output)
        conv2d: u32 x4 (out_c, in_c, kh, kw), f32 weights, f32 biases
        dense:  u32 x2 (out, in), f32 weights (row-major out x in), f32 biases
        others: no payload

Conv layers are stride 1 with pad (k-1)//2, so the tags above pin the
architecture completely. Round-trips are parameter-exact.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import DataFormatError
from .layers import (KIND_CONV2D, KIND_DENSE, KIND_FLATTEN, KIND_MAXPOOL2X2,
                     KIND_RELU, KIND_SOFTMAX, Conv2D, Dense, Flatten,
                     MaxPool2x2, ReLU, SoftmaxOutput)
from .network import Network

MAGIC = b"ADVXNET1"


def save_weights(net: Network, path) -> None:
    parts = [MAGIC, struct.pack("<I", len(net.layers))]
    for layer in net.layers:
        parts.append(struct.pack("<B", layer.kind))
        if isinstance(layer, Conv2D):
            parts.append(struct.pack("<4I", *layer.weight.shape))
            parts.append(layer.weight.astype("<f4").tobytes())
            parts.append(layer.bias.astype("<f4").tobytes())
        elif isinstance(layer, Dense):
            parts.append(struct.pack("<2I", *layer.weight.shape))
            parts.append(layer.weight.astype("<f4").tobytes())
            parts.append(layer.bias.astype("<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise DataFormatError(f"truncated weight file while reading {what}",
                                  offset=self.pos)
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def f32s(self, count: int, what: str) -> np.ndarray:
        raw = self.take(4 * count, what)
        return np.frombuffer(raw, dtype="<f4").copy()


def load_weights(path) -> Network:
    with open(path, "rb") as fh:
        rd = _Reader(fh.read())
    magic = rd.take(8, "magic")
    if magic != MAGIC:
        raise DataFormatError(
            f"bad magic {magic!r}; expected {MAGIC!r} (wrong file or version)", offset=0)
    count = rd.u32("layer count")
    layers = []
    for i in range(count):
        kind = rd.u8(f"layer {i} kind")
        if kind == KIND_CONV2D:
            oc = rd.u32("conv out channels")
            ic = rd.u32("conv in channels")
            kh = rd.u32("conv kernel height")
            kw = rd.u32("conv kernel width")
            w = rd.f32s(oc * ic * kh * kw, f"layer {i} conv weights").reshape(oc, ic, kh, kw)
            b = rd.f32s(oc, f"layer {i} conv biases")
            layers.append(Conv2D(w, b))
        elif kind == KIND_DENSE:
            out_d = rd.u32("dense out features")
            in_d = rd.u32("dense in features")
            w = rd.f32s(out_d * in_d, f"layer {i} dense weights").reshape(out_d, in_d)
            b = rd.f32s(out_d, f"layer {i} dense biases")
            layers.append(Dense(w, b))
        elif kind == KIND_RELU:
            layers.append(ReLU())
        elif kind == KIND_MAXPOOL2X2:
            layers.append(MaxPool2x2())
        elif kind == KIND_FLATTEN:
            layers.append(Flatten())
        elif kind == KIND_SOFTMAX:
            layers.append(SoftmaxOutput())
        else:
            raise DataFormatError(f"unknown layer kind tag {kind}", offset=rd.pos - 1)
    if rd.pos != len(rd.data):
        raise DataFormatError("trailing bytes after last layer", offset=rd.pos)
    return Network(layers)
