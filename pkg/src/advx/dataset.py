"""Dataset loading: the CIFAR-10 binary record format.

Each record is 3073 bytes: one label byte (< 10) followed by 3072 pixel
bytes (1024 red, 1024 green, 1024 blue; each plane row-major 32x32).
Pixels are scaled by 1/255 into [0, 1]. Any file in this format works,
which keeps the pipeline dataset-agnostic up to 12 classes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError

RECORD_BYTES = 3073
IMAGE_SHAPE = (3, 32, 32)

CIFAR10_CLASSES = ("airplane", "automobile", "bird", "cat", "deer",
                   "dog", "frog", "horse", "ship", "truck")

MAX_CLASSES = 12


@dataclass
class Dataset:
    images: np.ndarray  # (N, 3, 32, 32) float32 in [0, 1]
    labels: np.ndarray  # (N,) int64
    class_names: tuple

    def __post_init__(self):
        if len(self.class_names) > MAX_CLASSES:
            raise DataFormatError(
                f"{len(self.class_names)} classes exceed the {MAX_CLASSES}-class limit")
        if self.images.ndim != 4 or len(self.images) != len(self.labels):
            raise DataFormatError("images and labels do not align")
        if len(self.labels) and int(self.labels.max()) >= len(self.class_names):
            raise DataFormatError("label outside class range")

    def __len__(self) -> int:
        return len(self.images)


def stratified_limit(labels: np.ndarray, limit: int, class_count: int) -> np.ndarray:
    """Indices of a stratified prefix: per-class quotas of limit//C (+1 for
    the first limit%C classes) filled in file order, then any shortfall
    topped up with the earliest remaining records."""
    if limit <= 0:
        raise ValueError("limit must be positive")
    quotas = {c: limit // class_count + (1 if c < limit % class_count else 0)
              for c in range(class_count)}
    picked = []
    skipped = []
    for idx, label in enumerate(labels):
        if quotas.get(int(label), 0) > 0:
            quotas[int(label)] -= 1
            picked.append(idx)
        else:
            skipped.append(idx)
        if len(picked) == limit:
            break
    for idx in skipped:
        if len(picked) == limit:
            break
        picked.append(idx)
    return np.array(sorted(picked), dtype=np.int64)


def ingest(path, fmt: str = "cifar10-bin", limit: int | None = None,
           class_names: tuple = CIFAR10_CLASSES) -> Dataset:
    """Parse a CIFAR-10 binary file into a Dataset."""
    if fmt != "cifar10-bin":
        raise DataFormatError(f"unknown dataset format {fmt!r}")
    raw = Path(path).read_bytes()
    if len(raw) == 0 or len(raw) % RECORD_BYTES != 0:
        raise DataFormatError(
            f"file length {len(raw)} is not a positive multiple of {RECORD_BYTES}",
            offset=len(raw) - len(raw) % RECORD_BYTES)
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    bad = np.nonzero(labels >= len(class_names))[0]
    if bad.size:
        raise DataFormatError(
            f"label {int(labels[bad[0]])} out of range (< {len(class_names)})",
            offset=int(bad[0]) * RECORD_BYTES)
    images = records[:, 1:].reshape(-1, *IMAGE_SHAPE)
    if limit is not None and limit < len(images):
        keep = stratified_limit(labels, limit, len(class_names))
        images = images[keep]
        labels = labels[keep]
    return Dataset(images=images.astype(np.float32) / 255.0,
                   labels=labels, class_names=tuple(class_names))


def write_cifar10_bin(path, images_u8: np.ndarray, labels: np.ndarray) -> None:
    """Write records in the CIFAR-10 binary layout (u8 CHW planes)."""
    images_u8 = np.asarray(images_u8, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n = len(images_u8)
    if images_u8.shape != (n, *IMAGE_SHAPE) or labels.shape != (n,):
        raise DataFormatError("expected (N, 3, 32, 32) u8 images and (N,) labels")
    out = np.empty((n, RECORD_BYTES), dtype=np.uint8)
    out[:, 0] = labels
    out[:, 1:] = images_u8.reshape(n, -1)
    Path(path).write_bytes(out.tobytes())
