"""On-disk artifact bundle: everything the API server serves.

Layout under one directory:

    manifest.json
    images/clean.bin                       u8 CHW records
    models/<name>.advxnet                  weight files
    artifacts/<model>/<attack>/<eps>/
        noise.f32   pred.json   conf.f32   coords.f32   cube.json   accuracy.json

Binary files are little-endian with an 8-byte magic and a u32 record-count
header. The manifest carries a sha256 per file; reads verify them. The
adversarial image for any instance is reconstructed as
clip(original + noise, 0, 1), bitwise identical to what predictions were
computed on.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cube import BinCube
from .dataset import MAX_CLASSES
from .errors import ConsistencyError, DataFormatError, IntegrityError

FORMAT_NAME = "advx-bundle"
FORMAT_VERSION = 1

MAGIC_IMAGES = b"ADVXIMG1"
MAGIC_NOISE = b"ADVXNSE1"
MAGIC_CONF = b"ADVXCNF1"
MAGIC_COORDS = b"ADVXCRD1"

# 12 paired categorical colors; the 12-class cap keeps them distinguishable.
CLASS_PALETTE = (
    "#a6cee3", "#1f78b4", "#b2df8a", "#33a02c", "#fb9a99", "#e31a1c",
    "#fdbf6f", "#ff7f00", "#cab2d6", "#6a3d9a", "#ffff99", "#b15928",
)


def eps_key(epsilon: float) -> str:
    """Canonical directory name for an epsilon level."""
    return str(float(epsilon))


def write_binary(path: Path, magic: bytes, count: int, payload: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<I", count))
        fh.write(payload.tobytes())


def read_binary(path: Path, magic: bytes, dtype, record_shape) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise DataFormatError(f"{path}: too short for header", offset=len(data))
    if data[:8] != magic:
        raise DataFormatError(f"{path}: bad magic {data[:8]!r}, expected {magic!r}",
                              offset=0)
    count = struct.unpack("<I", data[8:12])[0]
    record_size = int(np.prod(record_shape)) * np.dtype(dtype).itemsize
    expected = 12 + count * record_size
    if len(data) != expected:
        raise DataFormatError(
            f"{path}: payload is {len(data) - 12} bytes, expected {count} records "
            f"of {record_size}", offset=min(len(data), expected))
    arr = np.frombuffer(data, dtype=dtype, offset=12)
    return arr.reshape(count, *record_shape).copy()


@dataclass
class EpsilonArtifact:
    """Raw per-epsilon arrays for one (model, attack)."""
    epsilon: float
    noise: np.ndarray        # (N, C, H, W) float32
    predictions: np.ndarray  # (N,) adversarial predictions
    confidences: np.ndarray  # (N, classes) float32
    coords: np.ndarray       # (N, 2) float64, normalized
    cube: BinCube
    robust_accuracy: float


@dataclass
class ArtifactGroup:
    model: str
    attack: str              # "fgsm" | "zoo"
    norm: str
    levels: list = field(default_factory=list)  # [EpsilonArtifact]

    @property
    def epsilons(self):
        return [lv.epsilon for lv in self.levels]

    def level(self, epsilon: float) -> EpsilonArtifact:
        for lv in self.levels:
            if lv.epsilon == float(epsilon):
                return lv
        raise KeyError(f"epsilon {epsilon} not in group {self.model}/{self.attack}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _validate(images_u8, labels, class_names, model_files, groups):
    n = len(images_u8)
    if n == 0:
        raise ConsistencyError("bundle needs at least one instance")
    if len(labels) != n:
        raise ConsistencyError("labels do not align with images")
    if len(class_names) > MAX_CLASSES:
        raise ConsistencyError(f"class count {len(class_names)} exceeds {MAX_CLASSES}")
    names = {g.model for g in groups}
    missing = names - set(model_files)
    if missing:
        raise ConsistencyError(f"artifact groups reference unknown models {sorted(missing)}")
    for g in groups:
        if not g.levels:
            raise ConsistencyError(f"{g.model}/{g.attack}: no epsilon levels")
        if g.levels[0].epsilon != 0.0:
            raise ConsistencyError(f"{g.model}/{g.attack}: grid must include epsilon 0")
        eps = g.epsilons
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise ConsistencyError(f"{g.model}/{g.attack}: epsilons must ascend")
        for lv in g.levels:
            for arr, what in ((lv.noise, "noise"), (lv.predictions, "predictions"),
                              (lv.confidences, "confidences"), (lv.coords, "coords")):
                if len(arr) != n:
                    raise ConsistencyError(
                        f"{g.model}/{g.attack}/{lv.epsilon}: {what} has "
                        f"{len(arr)} rows, expected {n}")
            if lv.confidences.shape[1] != len(class_names):
                raise ConsistencyError(
                    f"{g.model}/{g.attack}/{lv.epsilon}: confidence width "
                    f"{lv.confidences.shape[1]} != {len(class_names)} classes")
            if int(lv.predictions.max()) >= len(class_names):
                raise ConsistencyError(
                    f"{g.model}/{g.attack}/{lv.epsilon}: prediction out of range")
            if lv.coords.min() < 0.0 or lv.coords.max() > 1.0:
                raise ConsistencyError(
                    f"{g.model}/{g.attack}/{lv.epsilon}: coords not normalized")
            if lv.cube.instance_count != n:
                raise ConsistencyError(
                    f"{g.model}/{g.attack}/{lv.epsilon}: cube counts "
                    f"{lv.cube.instance_count} instances, expected {n}")


def write_bundle(out_dir, images_u8: np.ndarray, labels: np.ndarray,
                 class_names, model_files: dict, groups: list,
                 seed: int = 0) -> dict:
    """Validate all components, lay the bundle on disk, return the manifest.

    model_files maps model name -> existing .advxnet path (copied in).
    Nothing is written if validation fails.
    """
    images_u8 = np.asarray(images_u8, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.int64)
    _validate(images_u8, labels, class_names, model_files, groups)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rel_files: list = []

    img_path = out / "images" / "clean.bin"
    write_binary(img_path, MAGIC_IMAGES, len(images_u8), images_u8)
    rel_files.append("images/clean.bin")

    for name, src in model_files.items():
        dst = out / "models" / f"{name}.advxnet"
        dst.parent.mkdir(parents=True, exist_ok=True)
        dst.write_bytes(Path(src).read_bytes())
        rel_files.append(f"models/{name}.advxnet")

    for g in groups:
        natural = g.levels[0].robust_accuracy
        for lv in g.levels:
            rel = Path("artifacts") / g.model / g.attack / eps_key(lv.epsilon)
            base = out / rel
            write_binary(base / "noise.f32", MAGIC_NOISE, len(labels),
                         lv.noise.astype("<f4"))
            write_binary(base / "conf.f32", MAGIC_CONF, len(labels),
                         lv.confidences.astype("<f4"))
            write_binary(base / "coords.f32", MAGIC_COORDS, len(labels),
                         lv.coords.astype("<f4"))
            (base / "pred.json").write_text(json.dumps({
                "epsilon": lv.epsilon,
                "predictions": [int(p) for p in lv.predictions],
            }))
            (base / "cube.json").write_text(json.dumps(lv.cube.to_dict()))
            (base / "accuracy.json").write_text(json.dumps({
                "epsilon": lv.epsilon,
                "robust_accuracy": lv.robust_accuracy,
                "natural_accuracy": natural,
            }))
            for fname in ("noise.f32", "conf.f32", "coords.f32", "pred.json",
                          "cube.json", "accuracy.json"):
                rel_files.append(str(rel / fname))

    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "seed": seed,
        "instance_count": int(len(images_u8)),
        "image_shape": list(images_u8.shape[1:]),
        "classes": [{"name": str(name), "color": CLASS_PALETTE[i]}
                    for i, name in enumerate(class_names)],
        "true_labels": [int(l) for l in labels],
        "models": sorted(model_files),
        "attacks": sorted({g.attack for g in groups}),
        "artifacts": [{"model": g.model, "attack": g.attack, "norm": g.norm,
                       "epsilons": g.epsilons} for g in groups],
        "checksums": {rel: _sha256(out / rel) for rel in sorted(rel_files)},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return manifest


class Bundle:
    """Read-side view of a bundle directory, fully loaded and verified."""

    def __init__(self, manifest: dict, images_u8: np.ndarray, groups: dict):
        self.manifest = manifest
        self.images_u8 = images_u8
        self.images = images_u8.astype(np.float32) / 255.0
        self.groups = groups  # (model, attack) -> ArtifactGroup
        self.labels = np.asarray(manifest["true_labels"], dtype=np.int64)

    @property
    def instance_count(self) -> int:
        return int(self.manifest["instance_count"])

    def group(self, model: str, attack: str) -> ArtifactGroup:
        key = (model, attack)
        if key not in self.groups:
            raise KeyError(f"no artifact for model={model} attack={attack}")
        return self.groups[key]

    def adversarial_image(self, model: str, attack: str, epsilon: float,
                          index: int) -> np.ndarray:
        lv = self.group(model, attack).level(epsilon)
        return np.clip(self.images[index] + lv.noise[index], 0.0, 1.0)


def read_bundle(path, verify: bool = True) -> Bundle:
    root = Path(path)
    mf_path = root / "manifest.json"
    if not mf_path.is_file():
        raise DataFormatError(f"{root}: no manifest.json (not a bundle)")
    manifest = json.loads(mf_path.read_text())
    if manifest.get("format") != FORMAT_NAME or manifest.get("version") != FORMAT_VERSION:
        raise DataFormatError(f"{root}: unsupported bundle format/version")

    if verify:
        for rel, want in manifest["checksums"].items():
            fpath = root / rel
            if not fpath.is_file():
                raise IntegrityError(f"missing bundle file {rel}")
            got = _sha256(fpath)
            if got != want:
                raise IntegrityError(f"checksum mismatch for {rel}: "
                                     f"expected {want}, got {got}")

    shape = tuple(manifest["image_shape"])
    images_u8 = read_binary(root / "images" / "clean.bin", MAGIC_IMAGES,
                            np.uint8, shape)
    n = manifest["instance_count"]
    classes = len(manifest["classes"])

    groups = {}
    for entry in manifest["artifacts"]:
        g = ArtifactGroup(model=entry["model"], attack=entry["attack"],
                          norm=entry["norm"])
        for epsilon in entry["epsilons"]:
            base = root / "artifacts" / g.model / g.attack / eps_key(epsilon)
            noise = read_binary(base / "noise.f32", MAGIC_NOISE, "<f4", shape)
            conf = read_binary(base / "conf.f32", MAGIC_CONF, "<f4", (classes,))
            coords = read_binary(base / "coords.f32", MAGIC_COORDS, "<f4", (2,))
            pred = json.loads((base / "pred.json").read_text())
            acc = json.loads((base / "accuracy.json").read_text())
            cube = BinCube.from_dict(json.loads((base / "cube.json").read_text()))
            g.levels.append(EpsilonArtifact(
                epsilon=float(epsilon), noise=noise,
                predictions=np.asarray(pred["predictions"], dtype=np.int64),
                confidences=conf.astype(np.float64),
                coords=coords.astype(np.float64),
                cube=cube, robust_accuracy=float(acc["robust_accuracy"])))
        groups[(g.model, g.attack)] = g

    bundle = Bundle(manifest, images_u8, groups)
    if bundle.instance_count != len(images_u8) or n != len(images_u8):
        raise DataFormatError("manifest instance_count disagrees with images")
    return bundle
