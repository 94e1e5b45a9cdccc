import numpy as np
import pytest

from advx.attacks import AttackConfig, ZooParams, attack_sweep
from advx.dataset import CIFAR10_CLASSES, Dataset
from advx.pipeline import sweep_to_group
from advx.synth import generate
from advx.tensornet import TrainConfig, cnn_a, save_weights, train


@pytest.fixture(scope="session")
def fixture_net():
    """Untrained seeded CNN-A used wherever training does not matter."""
    return cnn_a(seed=7)


@pytest.fixture(scope="session")
def fixture_image():
    rng = np.random.default_rng(11)
    return rng.random((3, 32, 32), dtype=np.float32)


@pytest.fixture(scope="session")
def small_dataset():
    images_u8, labels = generate(80, seed=21)
    return Dataset(images=images_u8.astype(np.float32) / 255.0,
                   labels=labels, class_names=CIFAR10_CLASSES)


@pytest.fixture(scope="session")
def small_trained_net(small_dataset):
    net = cnn_a(seed=3)
    train(net, small_dataset.images, small_dataset.labels,
          TrainConfig(epochs=3, batch_size=16, learning_rate=0.06, seed=3))
    return net


@pytest.fixture(scope="session")
def small_bundle_dir(tmp_path_factory, small_dataset, small_trained_net):
    """A real (small) bundle: one model, FGSM grid plus a short ZOO grid."""
    from advx.bundle import write_bundle

    out = tmp_path_factory.mktemp("bundle") / "demo"
    ds = small_dataset
    net = small_trained_net

    groups = []
    fgsm_cfg = AttackConfig(method="fgsm")
    sweep = attack_sweep(net, ds.images, ds.labels, fgsm_cfg, seed=9)
    groups.append(sweep_to_group("cnn-a", sweep, fgsm_cfg, seed=9))

    zoo_cfg = AttackConfig(method="zoo", epsilons=(0.0, 0.3),
                           zoo=ZooParams(iterations=12, coords_per_iter=32))
    sweep = attack_sweep(net, ds.images, ds.labels, zoo_cfg, seed=9)
    groups.append(sweep_to_group("cnn-a", sweep, zoo_cfg, seed=9))

    weights = out.parent / "cnn-a.advxnet"
    save_weights(net, weights)
    images_u8 = np.clip(np.round(ds.images * 255.0), 0, 255).astype(np.uint8)
    write_bundle(out, images_u8, ds.labels, ds.class_names,
                 {"cnn-a": weights}, groups, seed=9)
    return out
