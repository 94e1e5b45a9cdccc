"""2-D projection of penultimate embeddings.

PCA (default) and an exact t-SNE reduce embeddings to plane coordinates.
To keep one coordinate frame across perturbation levels, fits are joint:
PCA fits on clean plus max-epsilon embeddings and transforms every level;
t-SNE optimizes all levels together in one run. Multiple seeded runs are
aligned by orthogonal Procrustes (rotation/reflection plus translation,
no scaling) and averaged, then min-max scaled into [0.01, 0.99].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, ShapeError


@dataclass
class ProjectionRun:
    method: str
    seed: int
    coords: np.ndarray  # (N, 2)
    fitted_on: str = "joint"

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ShapeError(f"coords must be (N, 2), got {coords.shape}")
        if not np.isfinite(coords).all():
            raise ValueError("projection produced non-finite coordinates")
        self.coords = coords


def pca_fit(embeddings: np.ndarray):
    """Top-2 principal axes of the sample covariance.

    Returns (basis, mean): basis is (D, 2) orthonormal, eigenvalues
    descending, and each column's largest-magnitude entry is positive.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3 or x.shape[1] < 2:
        raise ShapeError(f"need an (N >= 3, D >= 2) matrix, got {x.shape}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order[:2]]
    basis = eigvecs[:, order[:2]]
    # Rank 0 leaves even the first axis undefined; rank 1 is allowed (the
    # second axis is then an arbitrary orthonormal complement).
    if eigvals[0] <= max(1e-12, 1e-10 * abs(cov).max()):
        raise DegenerateDataError("covariance has rank 0: all points identical")
    for k in range(2):
        col = basis[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            basis[:, k] = -col
    return basis, mean


def pca_transform(basis: np.ndarray, mean: np.ndarray,
                  embeddings: np.ndarray) -> np.ndarray:
    x = np.asarray(embeddings, dtype=np.float64)
    basis = np.asarray(basis, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != basis.shape[0] or mean.shape != (basis.shape[0],):
        raise ShapeError(
            f"dimension mismatch: embeddings {x.shape}, basis {basis.shape}")
    return (x - mean) @ basis


def _conditional_probabilities(sq_dists: np.ndarray, perplexity: float,
                               tol: float = 1e-4, max_steps: int = 128):
    """Per-point Gaussian conditionals whose perplexity matches the target
    within tol, found by bisection on the precision beta."""
    n = sq_dists.shape[0]
    target = float(perplexity)
    p = np.zeros((n, n))
    for i in range(n):
        d = np.delete(sq_dists[i], i)
        beta, beta_min, beta_max = 1.0, 0.0, np.inf
        row = None
        for _ in range(max_steps):
            w = np.exp(-d * beta)
            s = w.sum()
            if s <= 0:
                # beta past the concentration limit: mass on nearest point
                achieved = 1.0
                row = np.zeros_like(d)
                row[np.argmin(d)] = 1.0
            else:
                row = w / s
                h = -np.sum(row * np.log(np.maximum(row, 1e-300)))
                achieved = np.exp(h)
            if abs(achieved - target) <= tol:
                break
            if achieved > target:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = (beta + beta_min) / 2.0
        else:
            raise DegenerateDataError(
                f"perplexity bisection did not reach {target} within {tol} "
                f"for point {i}")
        p[i, np.arange(n) != i] = row
    return p


def tsne(embeddings: np.ndarray, perplexity: float, seed: int,
         iterations: int = 500) -> np.ndarray:
    """Exact t-SNE to 2-D; deterministic for a given seed."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"need an (N, D) matrix, got {x.shape}")
    n = x.shape[0]
    if not 3 <= perplexity < n / 3:
        raise ValueError(f"perplexity {perplexity} infeasible for {n} points "
                         "(need 3 <= perplexity < N/3)")

    sq = np.sum(x * x, axis=1)
    sq_dists = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
    cond = _conditional_probabilities(sq_dists, perplexity)
    p = (cond + cond.T) / (2.0 * n)
    p = np.maximum(p, 1e-300)

    rng = np.random.default_rng(seed)
    y = rng.normal(0.0, 1e-4, size=(n, 2))
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    lr = 200.0
    exaggeration_until = min(100, iterations // 2)
    p_run = p * 4.0

    for it in range(iterations):
        if it == exaggeration_until:
            p_run = p
        ysq = np.sum(y * y, axis=1)
        num = 1.0 / (1.0 + ysq[:, None] + ysq[None, :] - 2.0 * (y @ y.T))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), 1e-300)
        pq = (p_run - q) * num
        grad = 4.0 * ((np.diag(pq.sum(axis=1)) - pq) @ y)
        momentum = 0.5 if it < 250 else 0.8
        dir_match = np.sign(grad) == np.sign(update)
        gains = np.where(dir_match, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        update = momentum * update - lr * gains * grad
        y = y + update
        y = y - y.mean(axis=0)
    return y


def procrustes_align(coords: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rigid alignment (rotation/reflection + translation, no scaling) of
    coords onto reference."""
    a = np.asarray(coords, dtype=np.float64)
    b = np.asarray(reference, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"layouts differ in shape: {a.shape} vs {b.shape}")
    a_mean = a.mean(axis=0)
    b_mean = b.mean(axis=0)
    u, _, vt = np.linalg.svd((a - a_mean).T @ (b - b_mean))
    rot = u @ vt
    return (a - a_mean) @ rot + b_mean


def align_and_average(runs: list) -> np.ndarray:
    """Average projection runs after aligning each onto the first."""
    if not runs:
        raise ValueError("need at least one projection run")
    mats = [r.coords if isinstance(r, ProjectionRun) else np.asarray(r, dtype=np.float64)
            for r in runs]
    if any(m.shape != mats[0].shape for m in mats):
        raise ShapeError("all runs must project the same number of points")
    if len(mats) == 1:
        return mats[0].copy()
    ref = mats[0]
    aligned = [ref] + [procrustes_align(m, ref) for m in mats[1:]]
    return np.mean(aligned, axis=0)


def normalize_coords(coords: np.ndarray) -> np.ndarray:
    """Min-max scale each axis into [0.01, 0.99]; a collapsed axis maps
    to 0.5."""
    c = np.asarray(coords, dtype=np.float64)
    if not np.isfinite(c).all():
        raise ValueError("coordinates must be finite")
    lo = c.min(axis=0)
    hi = c.max(axis=0)
    out = np.empty_like(c)
    for axis in range(c.shape[1]):
        if hi[axis] == lo[axis]:
            out[:, axis] = 0.5
        else:
            out[:, axis] = 0.01 + 0.98 * (c[:, axis] - lo[axis]) / (hi[axis] - lo[axis])
    return out


def joint_project(level_embeddings: list, method: str = "pca", runs: int = 3,
                  seed: int = 0, perplexity: float = 30.0,
                  iterations: int = 500) -> list:
    """Project every perturbation level into one shared frame.

    level_embeddings: per-level (N, D) matrices, level 0 being the clean
    (epsilon = 0) embeddings. Returns per-level (N, 2) normalized coords.
    An instance whose embedding never changes keeps identical coordinates
    at every level.
    """
    mats = [np.asarray(m, dtype=np.float64) for m in level_embeddings]
    if not mats or any(m.shape != mats[0].shape for m in mats):
        raise ShapeError("levels must be nonempty and share one shape")
    n = mats[0].shape[0]
    stacked = np.concatenate(mats, axis=0)

    run_list = []
    for r in range(max(1, runs)):
        run_seed = seed + r
        if method == "pca":
            basis, mean = pca_fit(np.concatenate([mats[0], mats[-1]], axis=0))
            coords = pca_transform(basis, mean, stacked)
        elif method == "tsne":
            coords = tsne(stacked, perplexity=perplexity, seed=run_seed,
                          iterations=iterations)
        else:
            raise ValueError(f"unknown projection method {method!r}")
        run_list.append(ProjectionRun(method=method, seed=run_seed, coords=coords))

    averaged = align_and_average(run_list)
    normalized = normalize_coords(averaged)
    return [normalized[k * n:(k + 1) * n] for k in range(len(mats))]
