"""Layer primitives for the dense-tensor network core.

All layers operate on batched inputs. Images are (B, C, H, W) float32,
flat features are (B, D). Forward passes run in float32; backward passes
accept a dtype so gradient paths can accumulate in float64.

Conv2D is stride-1 with same-padding ((k-1)//2), which is the only
configuration the fixture architectures use.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError

# Serialization kind tags (see weights_io).
KIND_CONV2D = 1
KIND_RELU = 2
KIND_MAXPOOL2X2 = 3
KIND_FLATTEN = 4
KIND_DENSE = 5
KIND_SOFTMAX = 6


def _im2col(x: np.ndarray, kh: int, kw: int, pad: int) -> np.ndarray:
    """Return (B, H*W, C*kh*kw) patch matrix for stride-1 convolution."""
    b, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))  # (B, C, H, W, kh, kw)
    col = win.transpose(0, 2, 3, 1, 4, 5).reshape(b, h * w, c * kh * kw)
    return np.ascontiguousarray(col)


def _col2im(cols: np.ndarray, shape, kh: int, kw: int, pad: int) -> np.ndarray:
    """Scatter-add (B, H*W, C*kh*kw) patch gradients back to (B, C, H, W)."""
    b, c, h, w = shape
    dxp = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    cols = cols.reshape(b, h, w, c, kh, kw)
    for di in range(kh):
        for dj in range(kw):
            dxp[:, :, di:di + h, dj:dj + w] += cols[:, :, :, :, di, dj].transpose(0, 3, 1, 2)
    if pad:
        return dxp[:, :, pad:-pad, pad:-pad]
    return dxp


class Layer:
    """Base layer: stateless apart from parameters."""

    kind: int
    params: tuple = ()

    def output_shape(self, in_shape):
        raise NotImplementedError

    def forward(self, x, cache):
        raise NotImplementedError

    def backward(self, dout, cache, want_param_grads):
        """Return (dx, param_grads or None). dtype follows dout."""
        raise NotImplementedError


class Conv2D(Layer):
    kind = KIND_CONV2D

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        weight = np.asarray(weight, dtype=np.float32)
        bias = np.asarray(bias, dtype=np.float32)
        if weight.ndim != 4:
            raise ShapeError(f"conv weight must be 4-D, got {weight.shape}")
        if bias.shape != (weight.shape[0],):
            raise ShapeError(f"conv bias {bias.shape} does not match {weight.shape[0]} filters")
        if weight.shape[2] % 2 == 0 or weight.shape[3] % 2 == 0:
            raise ShapeError("conv kernels must be odd-sized for same-padding")
        self.weight = weight
        self.bias = bias

    @property
    def params(self):
        return (self.weight, self.bias)

    @property
    def pad(self) -> int:
        return (self.weight.shape[2] - 1) // 2

    def output_shape(self, in_shape):
        if len(in_shape) != 3 or in_shape[0] != self.weight.shape[1]:
            raise ShapeError(
                f"conv expects ({self.weight.shape[1]}, H, W) input, got {in_shape}")
        return (self.weight.shape[0], in_shape[1], in_shape[2])

    def forward(self, x, cache):
        oc, ic, kh, kw = self.weight.shape
        b, c, h, w = x.shape
        col = _im2col(x, kh, kw, self.pad)
        wmat = self.weight.reshape(oc, -1).astype(x.dtype, copy=False)
        out = col @ wmat.T + self.bias.astype(x.dtype, copy=False)
        cache.append((col, x.shape))
        return out.transpose(0, 2, 1).reshape(b, oc, h, w)

    def backward(self, dout, cache, want_param_grads):
        col, x_shape = cache.pop()
        oc, ic, kh, kw = self.weight.shape
        b, c, h, w = x_shape
        dtype = dout.dtype
        dmat = dout.reshape(b, oc, h * w).transpose(0, 2, 1)  # (B, HW, OC)
        wmat = self.weight.reshape(oc, -1).astype(dtype)
        dcol = dmat @ wmat
        dx = _col2im(dcol, x_shape, kh, kw, self.pad)
        grads = None
        if want_param_grads:
            col64 = col.astype(dtype, copy=False)
            dw = np.einsum("bpo,bpk->ok", dmat, col64).reshape(self.weight.shape)
            db = dmat.sum(axis=(0, 1))
            grads = (dw, db)
        return dx, grads


class ReLU(Layer):
    kind = KIND_RELU

    def output_shape(self, in_shape):
        return in_shape

    def forward(self, x, cache):
        out = np.maximum(x, 0)
        cache.append(x > 0)
        return out

    def backward(self, dout, cache, want_param_grads):
        mask = cache.pop()
        return dout * mask, None


class MaxPool2x2(Layer):
    kind = KIND_MAXPOOL2X2

    def output_shape(self, in_shape):
        c, h, w = in_shape
        if h % 2 or w % 2:
            raise ShapeError(f"maxpool2x2 needs even spatial dims, got {in_shape}")
        return (c, h // 2, w // 2)

    def forward(self, x, cache):
        b, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ShapeError(f"maxpool2x2 needs even spatial dims, got {x.shape}")
        win = x.reshape(b, c, h // 2, 2, w // 2, 2)
        flat = win.transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h // 2, w // 2, 4)
        idx = flat.argmax(axis=-1)
        out = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
        cache.append((idx, x.shape))
        return out

    def backward(self, dout, cache, want_param_grads):
        idx, x_shape = cache.pop()
        b, c, h, w = x_shape
        dflat = np.zeros((b, c, h // 2, w // 2, 4), dtype=dout.dtype)
        np.put_along_axis(dflat, idx[..., None], dout[..., None], axis=-1)
        dx = dflat.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        return dx.reshape(b, c, h, w), None


class Flatten(Layer):
    kind = KIND_FLATTEN

    def output_shape(self, in_shape):
        n = 1
        for d in in_shape:
            n *= d
        return (n,)

    def forward(self, x, cache):
        cache.append(x.shape)
        return x.reshape(x.shape[0], -1)

    def backward(self, dout, cache, want_param_grads):
        shape = cache.pop()
        return dout.reshape(shape), None


class Dense(Layer):
    kind = KIND_DENSE

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        weight = np.asarray(weight, dtype=np.float32)  # (out, in)
        bias = np.asarray(bias, dtype=np.float32)
        if weight.ndim != 2 or bias.shape != (weight.shape[0],):
            raise ShapeError(f"dense weight {weight.shape} / bias {bias.shape} mismatch")
        self.weight = weight
        self.bias = bias

    @property
    def params(self):
        return (self.weight, self.bias)

    def output_shape(self, in_shape):
        if len(in_shape) != 1 or in_shape[0] != self.weight.shape[1]:
            raise ShapeError(
                f"dense expects ({self.weight.shape[1]},) input, got {in_shape}")
        return (self.weight.shape[0],)

    def forward(self, x, cache):
        cache.append(x)
        return x @ self.weight.T.astype(x.dtype, copy=False) + self.bias.astype(x.dtype, copy=False)

    def backward(self, dout, cache, want_param_grads):
        x = cache.pop()
        dtype = dout.dtype
        dx = dout @ self.weight.astype(dtype)
        grads = None
        if want_param_grads:
            dw = dout.T @ x.astype(dtype, copy=False)
            db = dout.sum(axis=0)
            grads = (dw, db)
        return dx, grads


class SoftmaxOutput(Layer):
    """Marker output layer. forward() of the network stops before it;
    predict() applies the softmax."""

    kind = KIND_SOFTMAX

    def output_shape(self, in_shape):
        return in_shape

    def forward(self, x, cache):
        return x

    def backward(self, dout, cache, want_param_grads):
        return dout, None
