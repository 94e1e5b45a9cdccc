"""Fast confidence evaluation for many single-pixel perturbations of one image.

Zeroth-order attacks probe the model with thousands of images that differ
from a base image in exactly one coordinate. Re-running the full forward
pass per probe is wasteful: through a stack of 3x3 same-padding convs and
2x2 maxpools, a one-pixel change only touches a small, growing window of
each feature map. PixelProbe caches the base activations once and
recomputes only fixed-size windows around each probed pixel, vectorized
across probes, in float64 (finite differencing of log-probabilities needs
the headroom).

Supported topology: [Conv2D(3x3, same), ReLU, MaxPool2x2] blocks on square
inputs, then Flatten, Dense, ReLU, Dense, SoftmaxOutput (the fixture
family). Callers check PixelProbe.supports(net) and fall back to batched
full forwards otherwise. Attack loops that probe many images of one net
should share a PixelProbeFactory so weight preparation happens once.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from .layers import Conv2D, Dense, Flatten, MaxPool2x2, ReLU, SoftmaxOutput
from .network import Network


def _parse_blocks(net: Network):
    """Split the layer list into conv blocks + dense head, or None."""
    layers = net.layers
    blocks = []
    i = 0
    while (i + 2 < len(layers) and isinstance(layers[i], Conv2D)
           and isinstance(layers[i + 1], ReLU) and isinstance(layers[i + 2], MaxPool2x2)):
        if layers[i].weight.shape[2:] != (3, 3):
            return None
        blocks.append(layers[i])
        i += 3
    if not blocks:
        return None
    rest = layers[i:]
    if (len(rest) == 5 and isinstance(rest[0], Flatten) and isinstance(rest[1], Dense)
            and isinstance(rest[2], ReLU) and isinstance(rest[3], Dense)
            and isinstance(rest[4], SoftmaxOutput)):
        return blocks, rest[1], rest[3]
    return None


def _softmax64(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _gather_patches(base: np.ndarray, rows, cols, size: int) -> np.ndarray:
    """Gather (B, C, size, size) patches of base (C, H, W) at per-probe
    top-left corners (rows, cols). Always returns a private copy."""
    c, hh, ww = base.shape
    nb = len(rows)
    r = rows[:, None] + np.arange(size)
    cc = cols[:, None] + np.arange(size)
    flat = (r[:, :, None] * ww + cc[:, None, :]).reshape(nb, -1)
    out = base.reshape(c, -1)[:, flat]  # advanced indexing: copies
    return out.transpose(1, 0, 2).reshape(nb, c, size, size)


def _scatter_window(patch: np.ndarray, vals: np.ndarray, rel_r, rel_c) -> None:
    """Write per-probe (B, C, s, s) vals into (B, C, S, S) patches at
    per-probe offsets (rel_r, rel_c)."""
    nb, _, s = vals.shape[:3]
    b_i = np.arange(nb)[:, None, None]
    r_i = (np.asarray(rel_r)[:, None] + np.arange(s))[:, :, None]
    c_i = (np.asarray(rel_c)[:, None] + np.arange(s))[:, None, :]
    patch[b_i, :, r_i, c_i] = vals.transpose(0, 2, 3, 1)


class PixelProbeFactory:
    """Float64 weight views for one network, shared across PixelProbes."""

    def __init__(self, net: Network):
        parsed = _parse_blocks(net)
        if parsed is None:
            raise ShapeError("network topology not supported by PixelProbe")
        self.net = net
        self.convs, dense1, dense2 = parsed
        self.wmats = [c.weight.astype(np.float64).reshape(c.weight.shape[0], -1).T.copy()
                      for c in self.convs]
        self.biases = [c.bias.astype(np.float64) for c in self.convs]
        self.conv_weights = [c.weight.astype(np.float64) for c in self.convs]
        self.w1 = dense1.weight.astype(np.float64)
        self.b1 = dense1.bias.astype(np.float64)
        self.w2t = dense2.weight.astype(np.float64).T.copy()
        self.b2 = dense2.bias.astype(np.float64)
        self.w1_grid = None      # reshaped lazily once the map shape is known
        self._w1_subs = {}       # (size, row, col) -> (128, C*size*size) block

    def probe(self, x: np.ndarray) -> "PixelProbe":
        return PixelProbe(self.net, x, factory=self)

    def w1_sub(self, size: int, r: int, c: int) -> np.ndarray:
        key = (size, r, c)
        sub = self._w1_subs.get(key)
        if sub is None:
            sub = self.w1_grid[:, :, r:r + size, c:c + size].reshape(len(self.w1), -1).copy()
            self._w1_subs[key] = sub
        return sub


class PixelProbe:
    @staticmethod
    def supports(net: Network) -> bool:
        return _parse_blocks(net) is not None

    def __init__(self, net: Network, x: np.ndarray, factory: PixelProbeFactory | None = None):
        self.f = factory if factory is not None else PixelProbeFactory(net)
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1] != x.shape[2]:
            raise ShapeError(f"expected square (C, H, H) image, got {x.shape}")
        self.x = x
        self.shape = x.shape

        # Base activations per block: padded input and post-relu conv maps.
        self._padded_inputs = []
        self._relu_outputs = []
        cur = x
        for w, b in zip(self.f.conv_weights, self.f.biases):
            oc = w.shape[0]
            c, h, wd = cur.shape
            padded = np.pad(cur, ((0, 0), (1, 1), (1, 1)))
            self._padded_inputs.append(padded)
            win = sliding_window_view(padded, (3, 3), axis=(1, 2))  # (C, H, W, 3, 3)
            pre = np.einsum("chwpq,ocpq->ohw", win, w, optimize=True) + b[:, None, None]
            post = np.maximum(pre, 0.0)
            self._relu_outputs.append(post)
            cur = post.reshape(oc, h // 2, 2, wd // 2, 2).max(axis=(2, 4))
        self._final_pool = cur  # (C_f, Hf, Wf)
        if self.f.w1_grid is None:
            self.f.w1_grid = self.f.w1.reshape(self.f.w1.shape[0], *cur.shape)

        self._h1_pre = self.f.w1 @ cur.reshape(-1) + self.f.b1
        h1 = np.maximum(self._h1_pre, 0.0)
        self.base_logits = h1 @ self.f.w2t + self.f.b2
        self.base_probs = _softmax64(self.base_logits)

    def probs(self, coords: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        """Class probabilities for x with x.flat[coords[b]] += deltas[b],
        one row per probe."""
        coords = np.asarray(coords, dtype=np.int64)
        deltas = np.asarray(deltas, dtype=np.float64)
        nb = coords.shape[0]
        c0, h0, _ = self.shape
        if nb == 0:
            return np.zeros((0, self.base_probs.shape[0]))
        if coords.min() < 0 or coords.max() >= c0 * h0 * h0:
            raise ShapeError("probe coordinate out of range")
        ch = coords // (h0 * h0)
        pr = (coords % (h0 * h0)) // h0
        pc = coords % h0

        # Initial changed window: the probed pixel, all channels, 1x1.
        vals = self.x[:, pr, pc].T[:, :, None, None].copy()  # (B, C, 1, 1)
        vals[np.arange(nb), ch, 0, 0] += deltas
        size = 1
        h = h0

        for k, (padded, relu_out) in enumerate(zip(self._padded_inputs,
                                                   self._relu_outputs)):
            wmat = self.f.wmats[k]
            b64 = self.f.biases[k]
            oc = b64.shape[0]
            ic = padded.shape[0]

            # Recompute conv outputs on a window two cells wider than the
            # changed region; the window is clamped in-bounds, so it always
            # contains every valid affected output cell.
            t = min(size + 2, h)
            cpos_r = np.clip(pr - 1, 0, h - t)
            cpos_c = np.clip(pc - 1, 0, h - t)
            # Conv inputs for that window form a t+2 patch whose top-left in
            # padded coordinates is exactly (cpos_r, cpos_c): always in range.
            patch = _gather_patches(padded, cpos_r, cpos_c, t + 2)
            _scatter_window(patch, vals, pr + 1 - cpos_r, pc + 1 - cpos_c)

            win = sliding_window_view(patch, (3, 3), axis=(2, 3))
            gemm = win.transpose(0, 2, 3, 1, 4, 5).reshape(nb * t * t, ic * 9)
            pre = gemm @ wmat
            pre = pre.reshape(nb, t, t, oc).transpose(0, 3, 1, 2) + b64[None, :, None, None]
            post = np.maximum(pre, 0.0, out=pre)

            # Pool window covering the recomputed conv window.
            hp = h // 2
            sp = min(t // 2 + 1, hp)
            ppos_r = np.clip(cpos_r // 2, 0, hp - sp)
            ppos_c = np.clip(cpos_c // 2, 0, hp - sp)
            pool_in = _gather_patches(relu_out, 2 * ppos_r, 2 * ppos_c, 2 * sp)
            _scatter_window(pool_in, post, cpos_r - 2 * ppos_r, cpos_c - 2 * ppos_c)
            rows = np.maximum(pool_in[:, :, 0::2, :], pool_in[:, :, 1::2, :])
            vals = np.maximum(rows[:, :, :, 0::2], rows[:, :, :, 1::2])

            pr, pc, size, h = ppos_r, ppos_c, sp, hp

        # Dense head: group probes by window position so each group
        # contracts only against the weight sub-block it touches.
        hf = self._final_pool.shape[1]
        base_patch = _gather_patches(self._final_pool, pr, pc, size)
        dvals = (vals - base_patch).reshape(nb, -1)
        h1_pre = np.tile(self._h1_pre, (nb, 1))
        keys = pr * hf + pc
        for key in np.unique(keys):
            grp = np.nonzero(keys == key)[0]
            sub = self.f.w1_sub(size, int(key) // hf, int(key) % hf)
            h1_pre[grp] += dvals[grp] @ sub.T
        h1 = np.maximum(h1_pre, 0.0, out=h1_pre)
        logits = h1 @ self.f.w2t + self.f.b2
        return _softmax64(logits)
