"""Evasion attacks: FGSM (white-box, L-inf) and ZOO (black-box, L2).

FGSM perturbs every pixel by epsilon in the direction of the loss
gradient's sign, then clips into [0, 1]. ZOO never touches gradients: it
estimates them from confidence queries by central finite differences over
randomly sampled coordinates and descends the objective

    || x' - x ||_2^2  +  c * max(log p_y - max_{i != y} log p_i, -kappa)

projecting each iterate back into the [0,1] box and the L2 epsilon-ball.

attack_sweep runs one attack over an ascending epsilon grid (0 first) and
fully populates per-instance records: predictions, confidences, and
penultimate embeddings for both the clean and attacked images.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ShapeError
from .tensornet import (Network, input_gradient_batch, predict_batch, softmax)
from .tensornet.probe import PixelProbe, PixelProbeFactory

# Perturbation grids used for the demo sweeps (RobustBench-style limits).
FGSM_EPSILONS = (0.0, 0.01, 0.02, 0.03)
ZOO_EPSILONS = (0.0, 0.1, 0.3, 0.5)

PROB_FLOOR = 1e-12


@dataclass
class ZooParams:
    c: float = 1.0
    kappa: float = 0.0
    iterations: int = 300
    step_size: float = 0.01
    coords_per_iter: int = 128
    h: float = 1e-4

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("c must be > 0")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.iterations < 1 or self.coords_per_iter < 1:
            raise ValueError("iterations and coords_per_iter must be >= 1")
        if self.step_size <= 0 or self.h <= 0:
            raise ValueError("step_size and h must be > 0")


@dataclass
class AttackConfig:
    method: str
    epsilons: tuple = ()
    norm: str = ""
    zoo: ZooParams = field(default_factory=ZooParams)

    def __post_init__(self):
        if self.method not in ("fgsm", "zoo"):
            raise ValueError(f"unknown attack method {self.method!r}")
        if not self.norm:
            self.norm = "linf" if self.method == "fgsm" else "l2"
        expected = {"fgsm": "linf", "zoo": "l2"}[self.method]
        if self.norm != expected:
            raise ValueError(f"{self.method} requires {expected} norm, got {self.norm}")
        if not self.epsilons:
            self.epsilons = FGSM_EPSILONS if self.method == "fgsm" else ZOO_EPSILONS
        self.epsilons = tuple(float(e) for e in self.epsilons)
        if self.epsilons[0] != 0.0:
            raise ValueError("epsilon grid must start at 0.0 (identity baseline)")
        if any(b <= a for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ValueError("epsilon grid must be strictly ascending")


@dataclass
class AdversarialInstance:
    instance_id: int
    original: np.ndarray
    adversarial: np.ndarray
    noise: np.ndarray
    true_label: int
    clean_prediction: int
    adv_prediction: int
    clean_confidences: np.ndarray
    adv_confidences: np.ndarray
    clean_embedding: np.ndarray
    adv_embedding: np.ndarray


def _check_image(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 3:
        raise ShapeError(f"expected (C, H, W) image, got {x.shape}")
    return x.astype(np.float32, copy=False)


def canonicalize_noise(x: np.ndarray, x_raw: np.ndarray):
    """(adversarial, noise) such that adversarial == clip(x + noise) bitwise.

    The stored noise is the float32 difference; the adversarial image is
    always *defined* as clip(original + noise), which is exactly how the
    bundle reconstructs it before prediction.
    """
    noise = np.asarray(x_raw - x.astype(x_raw.dtype), dtype=np.float32)
    adv = np.clip(x + noise, 0.0, 1.0).astype(np.float32)
    return adv, noise


def fgsm(net: Network, x: np.ndarray, y: int, epsilon: float) -> np.ndarray:
    """x + epsilon * sign(grad_x loss), clipped into [0, 1]."""
    x = _check_image(x)
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if epsilon == 0.0:
        return x.copy()
    return fgsm_batch(net, x[None], np.asarray([y]), epsilon)[0]


def fgsm_batch(net: Network, xb: np.ndarray, ys: np.ndarray, epsilon: float) -> np.ndarray:
    xb = np.asarray(xb, dtype=np.float32)
    if epsilon == 0.0:
        return xb.copy()
    grad = input_gradient_batch(net, xb, ys)
    step = (epsilon * np.sign(grad)).astype(np.float32)  # sign(0) == 0
    return np.clip(xb + step, 0.0, 1.0)


def zoo_loss(confidences: np.ndarray, y: int, kappa: float = 0.0) -> float:
    """Untargeted hinge on log-confidences; <= 0 once the attack succeeds
    (at kappa = 0)."""
    p = np.maximum(np.asarray(confidences, dtype=np.float64), PROB_FLOOR)
    logp = np.log(p)
    others = np.delete(logp, y)
    return float(max(logp[y] - others.max(), -kappa))


def _zoo_loss_rows(probs: np.ndarray, y: int, kappa: float) -> np.ndarray:
    logp = np.log(np.maximum(probs, PROB_FLOOR))
    target = logp[:, y].copy()
    logp[:, y] = -np.inf
    return np.maximum(target - logp.max(axis=1), -kappa)


def zoo_gradient_estimate(objective: Callable[[np.ndarray], np.ndarray],
                          x_adv: np.ndarray, coords: Sequence[int],
                          h: float) -> np.ndarray:
    """Central-difference gradient of a black-box objective along coords.

    objective maps a (B, C, H, W) batch to a (B,) vector of values; it is
    queried at x_adv +- h on each coordinate and never asked for gradients.
    """
    if h <= 0:
        raise ValueError("h must be > 0")
    x_adv = np.asarray(x_adv, dtype=np.float64)
    coords = np.asarray(coords, dtype=np.int64)
    if coords.size and (coords.min() < 0 or coords.max() >= x_adv.size):
        raise ShapeError("coordinate out of range")
    batch = np.repeat(x_adv[None], 2 * coords.size, axis=0)
    flat = batch.reshape(2 * coords.size, -1)
    rows = np.arange(coords.size)
    flat[2 * rows, coords] += h
    flat[2 * rows + 1, coords] -= h
    values = np.asarray(objective(batch), dtype=np.float64)
    return (values[0::2] - values[1::2]) / (2.0 * h)


class _ZooObjectiveProbe:
    """Probe-backed confidence oracle for one base point (fast path)."""

    def __init__(self, factory, x_adv):
        self.probe = factory.probe(x_adv)

    def base(self):
        return self.probe.base_probs

    def probs_at(self, coords, deltas):
        return self.probe.probs(coords, deltas)


class _ZooObjectiveFull:
    """Batched full-forward fallback for topologies the probe rejects."""

    def __init__(self, net, x_adv):
        self.net = net
        self.x_adv = np.asarray(x_adv, dtype=np.float64)

    def base(self):
        logits = self.net.forward_batch(self.x_adv[None], dtype=np.float64)
        return softmax(logits)[0]

    def probs_at(self, coords, deltas):
        batch = np.repeat(self.x_adv[None], len(coords), axis=0)
        batch.reshape(len(coords), -1)[np.arange(len(coords)), coords] += deltas
        return softmax(self.net.forward_batch(batch, dtype=np.float64))


def zoo_attack(net: Network, x: np.ndarray, y: int, epsilon: float,
               cfg: AttackConfig | None = None, seed: int = 0,
               factory: PixelProbeFactory | None = None) -> np.ndarray:
    """Coordinate-descent ZOO attack inside the L2 epsilon-ball.

    Returns the lowest-objective misclassifying iterate seen, else the
    final iterate. Queries only model outputs (class confidences).
    """
    x = _check_image(x)
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if epsilon == 0.0:
        return x.copy()
    cfg = cfg or AttackConfig(method="zoo")
    z = cfg.zoo
    rng = np.random.default_rng(seed)
    p = x.size
    k = min(z.coords_per_iter, p)

    fast = factory is not None or PixelProbe.supports(net)
    if fast and factory is None:
        factory = PixelProbeFactory(net)

    x64 = x.astype(np.float64)
    x_adv = x64.copy()
    best = None
    best_obj = np.inf

    def track(oracle):
        nonlocal best, best_obj
        probs = oracle.base()
        noise = x_adv - x64
        obj = float(np.dot(noise.reshape(-1), noise.reshape(-1))
                    + z.c * zoo_loss(probs, y, z.kappa))
        if int(np.argmax(probs)) != y and obj < best_obj:
            best, best_obj = x_adv.copy(), obj
        return probs

    for _ in range(z.iterations):
        oracle = (_ZooObjectiveProbe(factory, x_adv) if fast
                  else _ZooObjectiveFull(net, x_adv))
        track(oracle)

        coords = rng.choice(p, size=k, replace=False)
        pair_coords = np.repeat(coords, 2)
        pair_deltas = np.tile(np.array([z.h, -z.h]), k)
        probs = oracle.probs_at(pair_coords, pair_deltas)
        f_vals = _zoo_loss_rows(probs, y, z.kappa)

        noise_flat = (x_adv - x64).reshape(-1)
        base_sq = float(np.dot(noise_flat, noise_flat))
        dist_plus = base_sq + 2 * z.h * noise_flat[coords] + z.h * z.h
        dist_minus = base_sq - 2 * z.h * noise_flat[coords] + z.h * z.h
        obj_plus = dist_plus + z.c * f_vals[0::2]
        obj_minus = dist_minus + z.c * f_vals[1::2]
        grad = (obj_plus - obj_minus) / (2.0 * z.h)

        x_adv.reshape(-1)[coords] -= z.step_size * grad
        np.clip(x_adv, 0.0, 1.0, out=x_adv)
        noise = x_adv - x64
        l2 = float(np.linalg.norm(noise))
        if l2 > epsilon:
            x_adv = x64 + noise * (epsilon / l2)

    track(_ZooObjectiveProbe(factory, x_adv) if fast else _ZooObjectiveFull(net, x_adv))
    out = best if best is not None else x_adv
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def _instance_seed(seed: int, eps_index: int, instance_index: int) -> int:
    return int(np.random.SeedSequence([seed, eps_index, instance_index])
               .generate_state(1)[0])


_WORKER_STATE: dict = {}


def _zoo_worker_init(net):
    _WORKER_STATE["net"] = net
    _WORKER_STATE["factory"] = (PixelProbeFactory(net)
                                if PixelProbe.supports(net) else None)


def _zoo_worker(args):
    x, y, epsilon, cfg, seed = args
    return zoo_attack(_WORKER_STATE["net"], x, y, epsilon, cfg, seed=seed,
                      factory=_WORKER_STATE["factory"])


def worker_count() -> int:
    """Worker cap from ADVX_THREADS (defaults to 1)."""
    try:
        return max(1, int(os.environ.get("ADVX_THREADS", "1")))
    except ValueError:
        return 1


def _zoo_batch(net, images, labels, epsilon, cfg, seed, eps_index):
    seeds = [_instance_seed(seed, eps_index, i) for i in range(len(images))]
    workers = min(worker_count(), os.cpu_count() or 1)
    if workers > 1 and len(images) > 1:
        tasks = [(images[i], int(labels[i]), epsilon, cfg, seeds[i])
                 for i in range(len(images))]
        with ProcessPoolExecutor(max_workers=workers, initializer=_zoo_worker_init,
                                 initargs=(net,)) as pool:
            return list(pool.map(_zoo_worker, tasks, chunksize=4))
    factory = PixelProbeFactory(net) if PixelProbe.supports(net) else None
    return [zoo_attack(net, images[i], int(labels[i]), epsilon, cfg,
                       seed=seeds[i], factory=factory)
            for i in range(len(images))]


def attack_sweep(net: Network, images: np.ndarray, labels: np.ndarray,
                 cfg: AttackConfig, seed: int = 0):
    """Run cfg.method at every epsilon of the grid over the whole dataset.

    Returns [(epsilon, [AdversarialInstance...])] preserving input order at
    every level; deterministic given seed.
    """
    images = np.asarray(images, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.int64)
    if images.ndim != 4 or len(images) == 0:
        raise ValueError("dataset must be a nonempty (N, C, H, W) array")
    if labels.shape != (len(images),):
        raise ValueError("one label per image required")

    clean_pred, clean_conf = predict_batch(net, images)
    clean_emb = net.embed_batch(images)

    results = []
    for eps_index, epsilon in enumerate(cfg.epsilons):
        if epsilon == 0.0:
            adv = images.copy()
            noise = np.zeros_like(images)
            adv_pred, adv_conf, adv_emb = clean_pred, clean_conf, clean_emb
        else:
            if cfg.method == "fgsm":
                raw = fgsm_batch(net, images, labels, epsilon)
            else:
                raw = np.stack(_zoo_batch(net, images, labels, epsilon, cfg,
                                          seed, eps_index))
            adv, noise = canonicalize_noise(images, raw)
            adv_pred, adv_conf = predict_batch(net, adv)
            adv_emb = net.embed_batch(adv)

        instances = [
            AdversarialInstance(
                instance_id=i,
                original=images[i],
                adversarial=adv[i],
                noise=noise[i],
                true_label=int(labels[i]),
                clean_prediction=int(clean_pred[i]),
                adv_prediction=int(adv_pred[i]),
                clean_confidences=clean_conf[i],
                adv_confidences=adv_conf[i],
                clean_embedding=clean_emb[i],
                adv_embedding=adv_emb[i],
            )
            for i in range(len(images))
        ]
        results.append((epsilon, instances))
    return results


def robust_accuracy(instances: Sequence[AdversarialInstance]) -> float:
    """Fraction of instances still predicted as their true label after the
    attack."""
    if not instances:
        raise ValueError("robust_accuracy needs a nonempty instance list")
    hits = sum(1 for inst in instances if inst.adv_prediction == inst.true_label)
    return hits / len(instances)


def natural_accuracy(instances: Sequence[AdversarialInstance]) -> float:
    if not instances:
        raise ValueError("natural_accuracy needs a nonempty instance list")
    hits = sum(1 for inst in instances if inst.clean_prediction == inst.true_label)
    return hits / len(instances)
