"""Plain minibatch SGD training for the fixture models.

Deterministic given the config seed: init comes from the architecture
builders, shuffle order from one generator here. adversarial_fraction > 0
turns on adversarial-example augmentation: that fraction of every batch is
replaced in place by FGSM examples at adv_epsilon, generated against the
current parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network, batch_cross_entropy, softmax


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int
    learning_rate: float
    seed: int
    adversarial_fraction: float = 0.0
    adv_epsilon: float = 0.03

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.adversarial_fraction <= 1.0:
            raise ValueError("adversarial_fraction must be in [0, 1]")


def train(net: Network, images: np.ndarray, labels: np.ndarray, cfg: TrainConfig,
          epoch_losses: list | None = None) -> Network:
    """SGD-train net in place and return it.

    images: (N, C, H, W) float32 in [0, 1]; labels: (N,) ints < class count.
    """
    images = np.asarray(images, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.int64)
    if images.ndim != 4 or len(images) == 0:
        raise ValueError("training set must be a nonempty (N, C, H, W) array")
    if labels.shape != (len(images),):
        raise ValueError("one label per image required")
    if labels.min() < 0 or labels.max() >= net.class_count:
        raise ValueError(f"labels must be < {net.class_count}")

    if cfg.adversarial_fraction > 0.0:
        from ..attacks import fgsm_batch  # deferred: attacks depends on tensornet

    rng = np.random.default_rng(cfg.seed)
    n = len(images)
    lr = cfg.learning_rate
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            xb = images[idx]
            yb = labels[idx]
            if cfg.adversarial_fraction > 0.0:
                k = int(round(cfg.adversarial_fraction * len(xb)))
                if k:
                    xb = xb.copy()
                    xb[:k] = fgsm_batch(net, xb[:k], yb[:k], cfg.adv_epsilon)

            cache = []
            logits = net.forward_batch(xb, cache=cache)
            total += batch_cross_entropy(logits, yb) * len(xb)

            probs = softmax(logits)
            dlogits = probs
            dlogits[np.arange(len(yb)), yb] -= 1.0
            dlogits /= len(yb)
            dout = dlogits
            updates = []
            for layer in reversed(net.layers):
                dout, grads = layer.backward(dout, cache, want_param_grads=True)
                if grads is not None:
                    updates.append((layer, grads))
            for layer, (dw, db) in updates:
                layer.weight -= (lr * dw).astype(np.float32)
                layer.bias -= (lr * db).astype(np.float32)
        if epoch_losses is not None:
            epoch_losses.append(total / n)
    return net
