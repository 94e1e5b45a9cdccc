"""Procedural desk-scale image dataset in the CIFAR-10 binary layout.

Each class carries two signals. A smooth low-frequency color pattern of
large amplitude is the robust cue: a 0.03-sized perturbation cannot undo
it. A per-class pixel-sign watermark of small amplitude is the non-robust
cue: perfectly predictive on clean data, fully reversible by an L-inf
perturbation of its own amplitude. Standard training gravitates to the
watermark and collapses under attack; adversarial training is forced onto
the robust pattern. Instances add a random gain, a smooth distractor
pattern, and pixel noise.
"""

from __future__ import annotations

import numpy as np

from .dataset import CIFAR10_CLASSES, IMAGE_SHAPE, write_cifar10_bin

SIGNAL_AMPLITUDE = 0.08
WATERMARK_AMPLITUDE = 0.03
DISTRACTOR_AMPLITUDE = 0.12
PIXEL_NOISE = 0.11
WAVES_PER_PATTERN = 6


def _smooth_pattern(rng: np.random.Generator, shape=IMAGE_SHAPE) -> np.ndarray:
    """Random low-frequency pattern, RMS-normalized per channel."""
    c, h, w = shape
    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    pattern = np.zeros(shape)
    for ch in range(c):
        acc = np.zeros((h, w))
        for _ in range(WAVES_PER_PATTERN):
            u, v = rng.integers(0, 3, size=2)
            if u == 0 and v == 0:
                u = 1
            phase = rng.uniform(0, 2 * np.pi)
            acc += rng.normal(0, 1) * np.sin(2 * np.pi * (u * ii + v * jj) / h + phase)
        pattern[ch] = acc / max(np.sqrt(np.mean(acc ** 2)), 1e-9)
    return pattern


def class_templates(seed: int, classes: int = 10) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC1A55]))
    return np.stack([_smooth_pattern(rng) for _ in range(classes)])


def class_watermarks(seed: int, classes: int = 10) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x3A7E3]))
    return rng.choice([-1.0, 1.0], size=(classes, *IMAGE_SHAPE))


def generate(n: int, seed: int, classes: int = 10):
    """(images_u8 (N,3,32,32), labels (N,)) with round-robin class labels."""
    templates = class_templates(seed, classes)
    watermarks = class_watermarks(seed, classes)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xDA7A]))
    labels = np.arange(n) % classes
    images = np.empty((n, *IMAGE_SHAPE), dtype=np.uint8)
    for i in range(n):
        gain = rng.uniform(0.7, 1.3)
        img = 0.5 + SIGNAL_AMPLITUDE * gain * templates[labels[i]]
        img = img + WATERMARK_AMPLITUDE * watermarks[labels[i]]
        img = img + DISTRACTOR_AMPLITUDE * _smooth_pattern(rng)
        img = img + rng.normal(0.0, PIXEL_NOISE, IMAGE_SHAPE)
        images[i] = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    return images, labels


def write_synthetic_dataset(path, n: int, seed: int, classes: int = 10) -> tuple:
    """Generate and persist a synthetic dataset; returns its class names."""
    images, labels = generate(n, seed, classes)
    write_cifar10_bin(path, images, labels)
    return CIFAR10_CLASSES[:classes]
