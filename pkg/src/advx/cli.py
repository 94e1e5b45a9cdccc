"""Command-line driver for the offline pipeline and the API server.

Stages hand work off through files: ingest writes a dataset .npz,
train-model writes .advxnet weights, attack/project/build-cube grow an
artifact .npz, bundle assembles the on-disk bundle, serve reads it.
Exit codes: 0 ok, 2 usage, 3 data-format, 4 consistency.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import synth
from .attacks import AttackConfig, ZooParams, attack_sweep
from .bundle import ArtifactGroup, BinCube, EpsilonArtifact, write_bundle
from .cube import DEFAULT_LEVELS, build_cube
from .dataset import CIFAR10_CLASSES, Dataset, ingest
from .errors import ConsistencyError, DataFormatError
from .pipeline import run_demo, sweep_to_group, train_fixture
from .projection import joint_project
from .tensornet import TrainConfig, load_weights, save_weights

EXIT_FORMAT = 3
EXIT_CONSISTENCY = 4


def _fail(stage: str, exc: Exception, code: int):
    click.echo(f"advx {stage}: {exc}", err=True)
    sys.exit(code)


def _load_dataset(path) -> Dataset:
    data = np.load(path, allow_pickle=False)
    return Dataset(images=data["images_u8"].astype(np.float32) / 255.0,
                   labels=data["labels"].astype(np.int64),
                   class_names=tuple(str(c) for c in data["class_names"]))


def _save_dataset(path, dataset: Dataset):
    np.savez_compressed(
        path,
        images_u8=np.clip(np.round(dataset.images * 255.0), 0, 255).astype(np.uint8),
        labels=dataset.labels.astype(np.int64),
        class_names=np.array(dataset.class_names))


def _parse_epsilons(text: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise click.UsageError(f"bad epsilon list {text!r}")


@click.group()
def main():
    """Adversarial-attack workbench pipeline."""


@main.command()
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--count", default=1000, show_default=True)
@click.option("--classes", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
def synth_data(out, count, classes, seed):
    """Generate a synthetic fixture dataset in CIFAR-10 binary format."""
    synth.write_synthetic_dataset(out, count, seed, classes)
    click.echo(f"wrote {count} records to {out}")


@main.command(name="ingest")
@click.option("--dataset", "dataset_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", default="cifar10-bin", show_default=True,
              type=click.Choice(["cifar10-bin"]))
@click.option("--limit", default=None, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def ingest_cmd(dataset_path, fmt, limit, out):
    """Parse a CIFAR-10 binary file into a dataset .npz."""
    try:
        ds = ingest(dataset_path, fmt=fmt, limit=limit)
    except DataFormatError as exc:
        _fail("ingest", exc, EXIT_FORMAT)
    _save_dataset(out, ds)
    click.echo(f"ingested {len(ds)} instances "
               f"({len(ds.class_names)} classes) -> {out}")


@main.command(name="train-model")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "arch", default="cnn-a", show_default=True,
              type=click.Choice(["cnn-a", "cnn-b"]))
@click.option("--epochs", default=10, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--learning-rate", default=0.06, show_default=True)
@click.option("--adv-train-fraction", default=0.0, show_default=True)
@click.option("--adv-epsilon", default=0.03, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def train_model(data, arch, epochs, batch_size, learning_rate,
                adv_train_fraction, adv_epsilon, seed, out):
    """Train a fixture classifier and save its weights."""
    ds = _load_dataset(data)
    try:
        cfg = TrainConfig(epochs=epochs, batch_size=batch_size,
                          learning_rate=learning_rate, seed=seed,
                          adversarial_fraction=adv_train_fraction,
                          adv_epsilon=adv_epsilon)
        net = train_fixture(arch, ds, cfg)
    except ValueError as exc:
        _fail("train-model", exc, EXIT_CONSISTENCY)
    save_weights(net, out)
    from .tensornet import predict_batch
    pred, _ = predict_batch(net, ds.images)
    acc = float((pred == ds.labels).mean())
    click.echo(f"trained {arch}: clean accuracy {acc:.3f} -> {out}")


@main.command(name="attack")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model-file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model-name", default=None, help="defaults to the weight file stem")
@click.option("--method", required=True, type=click.Choice(["fgsm", "zoo"]))
@click.option("--epsilons", default="", help="comma list; empty = method default")
@click.option("--zoo-iterations", default=300, show_default=True)
@click.option("--zoo-step-size", default=0.01, show_default=True)
@click.option("--zoo-coords", default=128, show_default=True)
@click.option("--zoo-c", default=1.0, show_default=True)
@click.option("--zoo-kappa", default=0.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def attack_cmd(data, model_file, model_name, method, epsilons, zoo_iterations,
               zoo_step_size, zoo_coords, zoo_c, zoo_kappa, seed, out):
    """Sweep one attack over its epsilon grid; write a raw artifact .npz."""
    ds = _load_dataset(data)
    try:
        net = load_weights(model_file)
    except DataFormatError as exc:
        _fail("attack", exc, EXIT_FORMAT)
    try:
        cfg = AttackConfig(method=method, epsilons=_parse_epsilons(epsilons),
                           zoo=ZooParams(c=zoo_c, kappa=zoo_kappa,
                                         iterations=zoo_iterations,
                                         step_size=zoo_step_size,
                                         coords_per_iter=zoo_coords))
        results = attack_sweep(net, ds.images, ds.labels, cfg, seed=seed)
    except ValueError as exc:
        _fail("attack", exc, EXIT_CONSISTENCY)

    name = model_name or Path(model_file).stem
    payload = {
        "meta": np.array(json.dumps({
            "model": name, "method": cfg.method, "norm": cfg.norm,
            "epsilons": list(cfg.epsilons), "seed": seed,
            "instance_count": len(ds)})),
    }
    for k, (epsilon, instances) in enumerate(results):
        payload[f"noise_{k}"] = np.stack([i.noise for i in instances])
        payload[f"pred_{k}"] = np.array([i.adv_prediction for i in instances])
        payload[f"conf_{k}"] = np.stack([i.adv_confidences for i in instances])
        payload[f"emb_{k}"] = np.stack([i.adv_embedding for i in instances])
    np.savez_compressed(out, **payload)
    click.echo(f"attacked {len(ds)} instances with {method} "
               f"at {len(cfg.epsilons)} epsilon levels -> {out}")


def _load_artifact(path):
    data = np.load(path, allow_pickle=False)
    meta = json.loads(str(data["meta"]))
    return data, meta


@main.command(name="project")
@click.option("--artifact", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--projection", default="pca", show_default=True,
              type=click.Choice(["pca", "tsne"]))
@click.option("--runs", default=3, show_default=True)
@click.option("--perplexity", default=30.0, show_default=True)
@click.option("--iterations", default=500, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def project_cmd(artifact, projection, runs, perplexity, iterations, seed, out):
    """Add joint 2-D coordinates for every epsilon level of an artifact."""
    data, meta = _load_artifact(artifact)
    levels = [data[f"emb_{k}"] for k in range(len(meta["epsilons"]))]
    try:
        coords = joint_project(levels, method=projection, runs=runs, seed=seed,
                               perplexity=perplexity, iterations=iterations)
    except ValueError as exc:
        _fail("project", exc, EXIT_CONSISTENCY)
    payload = {k: data[k] for k in data.files}
    for k, c in enumerate(coords):
        payload[f"coords_{k}"] = c.astype(np.float32)
    meta["projection"] = {"method": projection, "runs": runs, "seed": seed}
    payload["meta"] = np.array(json.dumps(meta))
    np.savez_compressed(out, **payload)
    click.echo(f"projected {len(levels)} levels with {projection} -> {out}")


@main.command(name="build-cube")
@click.option("--artifact", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--levels", default=DEFAULT_LEVELS, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def build_cube_cmd(artifact, levels, out):
    """Bin every epsilon level's coordinates into a multi-level cube."""
    data, meta = _load_artifact(artifact)
    if "coords_0" not in data.files:
        _fail("build-cube", ConsistencyError("artifact has no coordinates; "
                                             "run `advx project` first"),
              EXIT_CONSISTENCY)
    payload = {k: data[k] for k in data.files}
    for k in range(len(meta["epsilons"])):
        coords = data[f"coords_{k}"].astype(np.float64)
        preds = data[f"pred_{k}"]
        cube = build_cube(coords, preds, np.arange(len(preds)),
                          level_count=levels)
        payload[f"cube_{k}"] = np.array(json.dumps(cube.to_dict()))
    meta["cube_levels"] = levels
    payload["meta"] = np.array(json.dumps(meta))
    np.savez_compressed(out, **payload)
    click.echo(f"built {levels}-level cubes for {len(meta['epsilons'])} "
               f"epsilon levels -> {out}")


@main.command(name="bundle")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "models", multiple=True, required=True,
              help="name=weights.advxnet (repeatable)")
@click.option("--artifact", "artifacts", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def bundle_cmd(data, models, artifacts, seed, out):
    """Validate cross-component consistency and write the bundle."""
    ds = _load_dataset(data)
    model_files = {}
    for entry in models:
        if "=" not in entry:
            raise click.UsageError(f"--model needs name=path, got {entry!r}")
        name, path = entry.split("=", 1)
        if not Path(path).is_file():
            raise click.UsageError(f"no weight file at {path}")
        model_files[name] = path

    groups = []
    try:
        for art_path in artifacts:
            data_npz, meta = _load_artifact(art_path)
            if meta["instance_count"] != len(ds):
                raise ConsistencyError(
                    f"{art_path}: artifact holds {meta['instance_count']} "
                    f"instances, dataset has {len(ds)}")
            if "cube_0" not in data_npz.files:
                raise ConsistencyError(f"{art_path}: missing cubes; "
                                       "run `advx build-cube` first")
            group = ArtifactGroup(model=meta["model"], attack=meta["method"],
                                  norm=meta["norm"])
            preds0 = data_npz["pred_0"]
            natural = float((preds0 == ds.labels).mean())
            for k, epsilon in enumerate(meta["epsilons"]):
                preds = data_npz[f"pred_{k}"]
                group.levels.append(EpsilonArtifact(
                    epsilon=float(epsilon),
                    noise=data_npz[f"noise_{k}"],
                    predictions=preds,
                    confidences=data_npz[f"conf_{k}"],
                    coords=data_npz[f"coords_{k}"].astype(np.float64),
                    cube=BinCube.from_dict(json.loads(str(data_npz[f"cube_{k}"]))),
                    robust_accuracy=float((preds == ds.labels).mean())))
            groups.append(group)
        images_u8 = np.clip(np.round(ds.images * 255.0), 0, 255).astype(np.uint8)
        manifest = write_bundle(out, images_u8, ds.labels, ds.class_names,
                                model_files, groups, seed=seed)
    except ConsistencyError as exc:
        _fail("bundle", exc, EXIT_CONSISTENCY)
    except DataFormatError as exc:
        _fail("bundle", exc, EXIT_FORMAT)
    click.echo(f"bundle with {len(manifest['artifacts'])} artifact groups -> {out}")


@main.command(name="serve")
@click.option("--bundle", "bundle_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--port", default=8787, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui", "ui_dir", default=None, type=click.Path(file_okay=False),
              help="static frontend directory (defaults to ./frontend/dist)")
def serve_cmd(bundle_dir, port, host, ui_dir):
    """Serve a bundle over HTTP."""
    import uvicorn

    from .server import create_app
    try:
        if ui_dir is None and Path("frontend/dist").is_dir():
            ui_dir = "frontend/dist"
        app = create_app(bundle_dir, ui_dir=ui_dir)
    except DataFormatError as exc:
        _fail("serve", exc, EXIT_FORMAT)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command(name="demo")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--dataset", "dataset_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="CIFAR-10 binary file; omitted = synthetic fixture data")
@click.option("--limit", default=1000, show_default=True)
@click.option("--epochs", default=10, show_default=True)
@click.option("--learning-rate", default=0.06, show_default=True)
@click.option("--adv-train-fraction", default=0.5, show_default=True)
@click.option("--projection", default="pca", show_default=True,
              type=click.Choice(["pca", "tsne"]))
@click.option("--runs", default=3, show_default=True)
@click.option("--levels", default=DEFAULT_LEVELS, show_default=True)
@click.option("--zoo-iterations", default=300, show_default=True)
@click.option("--quick", is_flag=True,
              help="small preset: 120 instances, 40 ZOO iterations")
@click.option("--seed", default=0, show_default=True)
def demo_cmd(out, dataset_path, limit, epochs, learning_rate,
             adv_train_fraction, projection, runs, levels, zoo_iterations,
             quick, seed):
    """End-to-end recipe: ingest, train CNN-A / CNN-B / CNN-A-adv, sweep
    FGSM and ZOO, project, cube, bundle."""
    if quick:
        limit = min(limit, 120)
        zoo_iterations = min(zoo_iterations, 40)
    try:
        if dataset_path is None:
            import tempfile
            with tempfile.TemporaryDirectory() as tmp:
                raw = Path(tmp) / "synthetic.bin"
                synth.write_synthetic_dataset(raw, max(limit, 1000), seed)
                ds = ingest(raw, limit=limit)
        else:
            ds = ingest(dataset_path, limit=limit)
    except DataFormatError as exc:
        _fail("demo", exc, EXIT_FORMAT)
    try:
        manifest = run_demo(out, ds, seed=seed, epochs=epochs,
                            learning_rate=learning_rate,
                            adv_fraction=adv_train_fraction,
                            projection=projection, runs=runs, levels=levels,
                            zoo=ZooParams(iterations=zoo_iterations))
    except (ConsistencyError, ValueError) as exc:
        _fail("demo", exc, EXIT_CONSISTENCY)
    click.echo(f"demo bundle ready: {manifest['instance_count']} instances, "
               f"{len(manifest['artifacts'])} artifact groups -> {out}")
    click.echo(f"serve it with: advx serve --bundle {out}")


if __name__ == "__main__":
    main()
