"""Multi-level binned aggregation over normalized 2-D coordinates.

Level k covers [0,1)^2 with a (10*(k+1)) x (10*(k+1)) grid of half-open
bins (the top edge 1.0 clamps into the last bin). Each nonempty bin keeps
its count, a per-class prediction histogram, the modal predicted class,
and a representative instance: the lowest-id member predicted as that
modal class. Cubes are immutable after build and safe to query
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

DEFAULT_LEVELS = 4


def grid_size(level: int) -> int:
    return 10 * (level + 1)


def bin_index(coord, level: int, level_count: int = DEFAULT_LEVELS):
    """(i, j) bin of an (x, y) coordinate at a zoom level."""
    if not 0 <= level < level_count:
        raise ShapeError(f"level {level} outside [0, {level_count})")
    x, y = float(coord[0]), float(coord[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ShapeError(f"coordinate {(x, y)} outside [0, 1]^2")
    g = grid_size(level)
    return min(int(x * g), g - 1), min(int(y * g), g - 1)


@dataclass(frozen=True)
class BinAgg:
    count: int
    histogram: tuple
    mode_class: int
    representative_id: int


@dataclass(frozen=True)
class ViewResult:
    representatives: list  # (i, j, instance_id, prediction) per nonempty bin
    density: list          # (cx, cy, count, radius_hint) per nonempty bin


class BinCube:
    def __init__(self, levels, instance_count: int, class_count: int):
        self.levels = levels  # list of {(i, j): BinAgg}
        self.instance_count = instance_count
        self.class_count = class_count

    @property
    def level_count(self) -> int:
        return len(self.levels)

    def to_dict(self) -> dict:
        return {
            "instance_count": self.instance_count,
            "class_count": self.class_count,
            "levels": [
                {
                    "grid": grid_size(k),
                    "bins": [
                        {"i": i, "j": j, "count": b.count,
                         "histogram": list(b.histogram),
                         "mode_class": b.mode_class,
                         "representative_id": b.representative_id}
                        for (i, j), b in sorted(bins.items())
                    ],
                }
                for k, bins in enumerate(self.levels)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BinCube":
        levels = []
        for entry in data["levels"]:
            bins = {}
            for b in entry["bins"]:
                bins[(b["i"], b["j"])] = BinAgg(
                    count=b["count"], histogram=tuple(b["histogram"]),
                    mode_class=b["mode_class"],
                    representative_id=b["representative_id"])
            levels.append(bins)
        return cls(levels, data["instance_count"], data["class_count"])


def build_cube(coords, predictions, instance_ids=None,
               level_count: int = DEFAULT_LEVELS,
               class_count: int | None = None) -> BinCube:
    """Aggregate instances into every level's grid."""
    coords = np.asarray(coords, dtype=np.float64)
    predictions = np.asarray(predictions, dtype=np.int64)
    n = len(coords)
    if instance_ids is None:
        instance_ids = np.arange(n)
    instance_ids = np.asarray(instance_ids, dtype=np.int64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ShapeError(f"coords must be (N, 2), got {coords.shape}")
    if len(predictions) != n or len(instance_ids) != n:
        raise ShapeError("coords, predictions, and instance_ids must align")
    if n and (coords.min() < 0.0 or coords.max() > 1.0):
        raise ShapeError("coordinates must be normalized into [0, 1]")
    if class_count is None:
        class_count = int(predictions.max()) + 1 if n else 0

    levels = []
    for level in range(level_count):
        g = grid_size(level)
        ii = np.minimum((coords[:, 0] * g).astype(np.int64), g - 1)
        jj = np.minimum((coords[:, 1] * g).astype(np.int64), g - 1)
        bins: dict = {}
        members: dict = {}
        for idx in range(n):
            members.setdefault((int(ii[idx]), int(jj[idx])), []).append(idx)
        for key, idxs in members.items():
            hist = np.bincount(predictions[idxs], minlength=class_count)
            mode = int(np.argmax(hist))  # argmax: lowest class index wins ties
            candidates = [instance_ids[i] for i in idxs if predictions[i] == mode]
            bins[key] = BinAgg(count=len(idxs), histogram=tuple(int(c) for c in hist),
                               mode_class=mode,
                               representative_id=int(min(candidates)))
        levels.append(bins)
    return BinCube(levels, instance_count=n, class_count=class_count)


def density_map(cube: BinCube, level: int):
    """(bin center, count, radius hint) per nonempty bin; the hint is
    sqrt(count / max count) within the level, in (0, 1]."""
    if not 0 <= level < cube.level_count:
        raise ShapeError(f"level {level} outside [0, {cube.level_count})")
    bins = cube.levels[level]
    if not bins:
        return []
    g = grid_size(level)
    max_count = max(b.count for b in bins.values())
    return [((i + 0.5) / g, (j + 0.5) / g, b.count,
             float(np.sqrt(b.count / max_count)))
            for (i, j), b in sorted(bins.items())]


def query_view(cube: BinCube, viewport, zoom_level: int) -> ViewResult:
    """Representatives and density of every nonempty bin at zoom_level that
    intersects the viewport (x0, y0, x1, y1)."""
    x0, y0, x1, y1 = (float(v) for v in viewport)
    if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
        raise ShapeError(f"invalid viewport {viewport}")
    if not 0 <= zoom_level < cube.level_count:
        raise ShapeError(f"level {zoom_level} outside [0, {cube.level_count})")
    g = grid_size(zoom_level)
    i_lo = min(int(x0 * g), g - 1)
    i_hi = min(int(x1 * g), g - 1)
    j_lo = min(int(y0 * g), g - 1)
    j_hi = min(int(y1 * g), g - 1)

    bins = cube.levels[zoom_level]
    max_count = max((b.count for b in bins.values()), default=0)
    reps = []
    density = []
    for (i, j) in sorted(bins):
        if i_lo <= i <= i_hi and j_lo <= j <= j_hi:
            b = bins[(i, j)]
            reps.append((i, j, b.representative_id, b.mode_class))
            density.append(((i + 0.5) / g, (j + 0.5) / g, b.count,
                            float(np.sqrt(b.count / max_count))))
    return ViewResult(representatives=reps, density=density)
