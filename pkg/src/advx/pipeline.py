"""Offline orchestration: sweeps -> projections -> cubes -> bundle.

All heavy computation happens here (or in the CLI driving it); the server
only reads the finished bundle.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from .attacks import AttackConfig, ZooParams, attack_sweep, robust_accuracy
from .bundle import ArtifactGroup, EpsilonArtifact, write_bundle
from .cube import DEFAULT_LEVELS, build_cube
from .dataset import Dataset
from .projection import joint_project
from .tensornet import ARCHITECTURES, Network, TrainConfig, save_weights, train


def train_fixture(arch: str, dataset: Dataset, cfg: TrainConfig) -> Network:
    if arch not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {arch!r} "
                         f"(know {sorted(ARCHITECTURES)})")
    net = ARCHITECTURES[arch](seed=cfg.seed, classes=len(dataset.class_names),
                              in_shape=dataset.images.shape[1:])
    return train(net, dataset.images, dataset.labels, cfg)


def sweep_to_group(model_name: str, sweep_results, cfg: AttackConfig,
                   projection: str = "pca", runs: int = 3, seed: int = 0,
                   levels: int = DEFAULT_LEVELS, perplexity: float = 30.0,
                   tsne_iterations: int = 500) -> ArtifactGroup:
    """Project a finished sweep into cubes and pack an ArtifactGroup.

    Coordinates are projected jointly across epsilon levels (one frame),
    then rounded to float32 before cube building so the stored coordinates
    and the cube bins can never disagree.
    """
    level_embeddings = [np.stack([inst.adv_embedding for inst in instances])
                        for _, instances in sweep_results]
    coords_per_level = joint_project(level_embeddings, method=projection,
                                     runs=runs, seed=seed,
                                     perplexity=perplexity,
                                     iterations=tsne_iterations)

    group = ArtifactGroup(model=model_name, attack=cfg.method, norm=cfg.norm)
    for (epsilon, instances), coords in zip(sweep_results, coords_per_level):
        coords32 = coords.astype(np.float32).astype(np.float64)
        preds = np.array([inst.adv_prediction for inst in instances])
        ids = np.array([inst.instance_id for inst in instances])
        class_count = len(instances[0].adv_confidences)
        cube = build_cube(coords32, preds, ids, level_count=levels,
                          class_count=class_count)
        group.levels.append(EpsilonArtifact(
            epsilon=epsilon,
            noise=np.stack([inst.noise for inst in instances]),
            predictions=preds,
            confidences=np.stack([inst.adv_confidences for inst in instances]),
            coords=coords32,
            cube=cube,
            robust_accuracy=robust_accuracy(instances)))
    return group


def run_demo(out_dir, dataset: Dataset, seed: int = 0, epochs: int = 10,
             batch_size: int = 32, learning_rate: float = 0.06,
             adv_fraction: float = 0.5, adv_epochs: int | None = None,
             projection: str = "pca", runs: int = 3,
             levels: int = DEFAULT_LEVELS, zoo: ZooParams | None = None,
             fgsm_epsilons=None, zoo_epsilons=None) -> dict:
    """The documented comparison recipe: CNN-A vs CNN-B (depth pair) and
    CNN-A vs adversarially trained CNN-A, each swept with FGSM and ZOO.

    The adversarially trained variant defaults to a 3x epoch budget:
    training against a moving adversary converges slower than fitting
    clean data.
    """
    zoo = zoo or ZooParams()
    fgsm_cfg = AttackConfig(method="fgsm", epsilons=fgsm_epsilons or ())
    zoo_cfg = AttackConfig(method="zoo", epsilons=zoo_epsilons or (), zoo=zoo)
    adv_eps = fgsm_cfg.epsilons[-1]
    if adv_epochs is None:
        adv_epochs = 3 * epochs

    models = {
        "cnn-a": train_fixture("cnn-a", dataset, TrainConfig(
            epochs=epochs, batch_size=batch_size, learning_rate=learning_rate,
            seed=seed)),
        "cnn-b": train_fixture("cnn-b", dataset, TrainConfig(
            epochs=epochs, batch_size=batch_size, learning_rate=learning_rate,
            seed=seed)),
        "cnn-a-adv": train_fixture("cnn-a", dataset, TrainConfig(
            epochs=adv_epochs, batch_size=batch_size,
            learning_rate=learning_rate, seed=seed,
            adversarial_fraction=adv_fraction, adv_epsilon=adv_eps)),
    }

    groups = []
    for name, net in models.items():
        for cfg in (fgsm_cfg, zoo_cfg):
            sweep = attack_sweep(net, dataset.images, dataset.labels, cfg,
                                 seed=seed)
            groups.append(sweep_to_group(name, sweep, cfg,
                                         projection=projection, runs=runs,
                                         seed=seed, levels=levels))

    images_u8 = np.clip(np.round(dataset.images * 255.0), 0, 255).astype(np.uint8)
    with tempfile.TemporaryDirectory() as tmp:
        model_files = {}
        for name, net in models.items():
            path = Path(tmp) / f"{name}.advxnet"
            save_weights(net, path)
            model_files[name] = path
        manifest = write_bundle(out_dir, images_u8, dataset.labels,
                                dataset.class_names, model_files, groups,
                                seed=seed)
    return manifest
