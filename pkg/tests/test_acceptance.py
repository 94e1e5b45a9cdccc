"""Acceptance suite: every release criterion, one printed line each.

Heavy fixtures (the 1000-image fixture set, trained models, attack
sweeps) are module-scoped and shared across criteria. Stated runtime
budgets are asserted where the criterion carries one.
"""

import time

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

import advx.tensornet.network as network_mod
from advx.attacks import (AttackConfig, attack_sweep, natural_accuracy,
                          robust_accuracy)
from advx.bundle import read_bundle
from advx.cli import main as cli_main
from advx.cube import build_cube, query_view
from advx.dataset import ingest
from advx.projection import (ProjectionRun, _conditional_probabilities,
                             align_and_average, pca_fit, pca_transform,
                             procrustes_align, tsne)
from advx.server import create_app
from advx.synth import write_synthetic_dataset
from advx.tensornet import (TrainConfig, cnn_a, input_gradient, load_weights,
                            predict_batch, train)

from .oracles import fd_input_gradient
from .test_api import decode_png
from .test_cube import brute_force_bins
from .test_projection import cluster_separation, two_clusters
from .test_tensornet import small_net

FIXTURE_SEED = 42


def report(name, ok, detail=""):
    print(f"\nACCEPTANCE {'PASS' if ok else 'FAIL'} - {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def fixture_1000(tmp_path_factory):
    path = tmp_path_factory.mktemp("acc") / "fixture.bin"
    write_synthetic_dataset(path, 1000, FIXTURE_SEED)
    ds = ingest(path, limit=1000)
    counts = np.bincount(ds.labels, minlength=10)
    assert list(counts) == [100] * 10  # stratified
    return ds


@pytest.fixture(scope="module")
def trained_cnn_a(fixture_1000):
    net = cnn_a(seed=1)
    train(net, fixture_1000.images, fixture_1000.labels,
          TrainConfig(epochs=10, batch_size=32, learning_rate=0.06, seed=1))
    return net


@pytest.fixture(scope="module")
def fgsm_sweep(trained_cnn_a, fixture_1000):
    return attack_sweep(trained_cnn_a, fixture_1000.images, fixture_1000.labels,
                        AttackConfig(method="fgsm"), seed=FIXTURE_SEED)


@pytest.fixture(scope="module")
def zoo_subset(fixture_1000):
    labels = fixture_1000.labels
    idx = np.concatenate([np.nonzero(labels == c)[0][:5] for c in range(10)])
    return idx


@pytest.fixture(scope="module")
def zoo_sweep(trained_cnn_a, fixture_1000, zoo_subset, monkeypatch_session):
    counter = {"gradient_calls": 0}
    real = network_mod.input_gradient_batch

    def spy(*args, **kwargs):
        counter["gradient_calls"] += 1
        return real(*args, **kwargs)

    monkeypatch_session.setattr(network_mod, "input_gradient_batch", spy)
    monkeypatch_session.setattr("advx.attacks.input_gradient_batch", spy)
    t0 = time.perf_counter()
    sweep = attack_sweep(trained_cnn_a, fixture_1000.images[zoo_subset],
                         fixture_1000.labels[zoo_subset],
                         AttackConfig(method="zoo"), seed=FIXTURE_SEED)
    elapsed = time.perf_counter() - t0
    monkeypatch_session.undo()
    return sweep, counter["gradient_calls"], elapsed


@pytest.fixture(scope="module")
def monkeypatch_session():
    from _pytest.monkeypatch import MonkeyPatch
    mp = MonkeyPatch()
    yield mp
    mp.undo()


def test_gradient_fidelity():
    t0 = time.perf_counter()
    worst = 0.0
    rng = np.random.default_rng(100)
    for case in range(10):
        net = small_net(seed=case, blocks=1 + case % 2, h=8)
        x = rng.random((3, 8, 8), dtype=np.float32)
        y = int(rng.integers(0, 4))
        g = input_gradient(net, x, y).reshape(-1)
        coords = rng.choice(g.size, size=100, replace=False)
        fd = fd_input_gradient(net, x, y, h=1e-4, coords=coords)
        scale = np.abs(g).max()
        for i, want in fd.items():
            err = abs(g[i] - want) / max(abs(g[i]), abs(want), 1e-4 * scale)
            worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    report("gradient fidelity",
           worst < 1e-3 and elapsed < 30,
           f"max relative error {worst:.2e} over 10 cases x 100 coords "
           f"(< 1e-3), {elapsed:.1f}s (< 30s)")


def test_fgsm_contract_suite(trained_cnn_a, fixture_1000):
    t0 = time.perf_counter()
    images = fixture_1000.images[:200]
    labels = fixture_1000.labels[:200]
    sweep = attack_sweep(trained_cnn_a, images, labels,
                         AttackConfig(method="fgsm"), seed=FIXTURE_SEED)
    ok = True
    details = []
    for eps, instances in sweep:
        diffs = np.stack([inst.adversarial.astype(np.float64)
                          - inst.original.astype(np.float64)
                          for inst in instances])
        linf = np.abs(diffs).max()
        in_box = all(inst.adversarial.min() >= 0.0 and inst.adversarial.max() <= 1.0
                     for inst in instances)
        ok &= linf <= eps + 1e-6 and in_box
        if eps == 0.0:
            ok &= all(np.array_equal(inst.adversarial, inst.original)
                      for inst in instances)
        details.append(f"eps={eps}: linf={linf:.4f}")
    elapsed = time.perf_counter() - t0
    report("fgsm contract suite", ok and elapsed < 60,
           "; ".join(details) + f"; eps=0 bit-identical; {elapsed:.1f}s (< 60s)")


def test_zoo_contract_suite(zoo_sweep):
    sweep, gradient_calls, elapsed = zoo_sweep
    ok = gradient_calls == 0
    details = [f"gradient-oracle calls={gradient_calls}"]
    for eps, instances in sweep:
        l2 = max(np.linalg.norm((inst.adversarial.astype(np.float64)
                                 - inst.original.astype(np.float64)).reshape(-1))
                 for inst in instances)
        ok &= l2 <= eps + 1e-6
        if eps == 0.0:
            ok &= all(np.array_equal(inst.adversarial, inst.original)
                      for inst in instances)
        details.append(f"eps={eps}: l2={l2:.4f}")
    ok &= elapsed < 20 * 60
    report("zoo contract suite", ok,
           "; ".join(details) + f"; {elapsed:.0f}s (< 1200s)")


def test_attack_effectiveness(fgsm_sweep, zoo_sweep, fixture_1000):
    natural = natural_accuracy(fgsm_sweep[0][1])
    robust = [robust_accuracy(instances) for _, instances in fgsm_sweep]
    ok = natural >= 0.60
    ok &= robust[-1] <= natural - 0.20
    ok &= all(b <= a + 0.02 for a, b in zip(robust, robust[1:]))
    ok &= robust[-1] < robust[0]

    zoo_results, _, _ = zoo_sweep
    zoo_natural = natural_accuracy(zoo_results[0][1])
    zoo_small = robust_accuracy(zoo_results[1][1])
    zoo_at_max = robust_accuracy(zoo_results[-1][1])
    ok &= zoo_at_max < zoo_natural
    ok &= zoo_at_max < zoo_small  # strictly more misclassifications than at 0.1
    report("attack effectiveness", ok,
           f"natural={natural:.3f} (>= 0.60); fgsm robust={[f'{r:.3f}' for r in robust]} "
           f"(drop {100 * (natural - robust[-1]):.1f}pt >= 20, non-increasing +-2pt); "
           f"zoo@0.5 {zoo_at_max:.3f} < natural {zoo_natural:.3f} and < "
           f"zoo@0.1 {zoo_small:.3f}")


def test_robustness_comparison(trained_cnn_a, fixture_1000, fgsm_sweep):
    adv_net = cnn_a(seed=1)
    train(adv_net, fixture_1000.images, fixture_1000.labels,
          TrainConfig(epochs=30, batch_size=32, learning_rate=0.06, seed=1,
                      adversarial_fraction=0.5, adv_epsilon=0.03))
    std_clean = natural_accuracy(fgsm_sweep[0][1])
    std_robust = robust_accuracy(fgsm_sweep[-1][1])

    adv_sweep = attack_sweep(adv_net, fixture_1000.images, fixture_1000.labels,
                             AttackConfig(method="fgsm"), seed=FIXTURE_SEED)
    adv_clean = natural_accuracy(adv_sweep[0][1])
    adv_robust = robust_accuracy(adv_sweep[-1][1])

    ok = adv_robust >= std_robust + 0.10
    ok &= adv_clean >= std_clean - 0.10
    report("robustness comparison", ok,
           f"adv-trained robust@0.03 {adv_robust:.3f} vs standard {std_robust:.3f} "
           f"(+{100 * (adv_robust - std_robust):.1f}pt >= 10); clean "
           f"{adv_clean:.3f} vs {std_clean:.3f} (>= -10pt)")


def test_projection_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)

    x = rng.normal(0, 1, (60, 16)) @ rng.normal(0, 1, (16, 16))
    basis, mean = pca_fit(x)
    ortho = np.abs(basis.T @ basis - np.eye(2)).max()
    ok = ortho < 1e-6

    proj = pca_transform(basis, mean, x)
    v1 = proj[:, 0].var()
    centered = x - mean
    mc_ok = all((centered @ (d / np.linalg.norm(d))).var() <= v1 + 1e-9
                for d in rng.normal(0, 1, (100, 16)))
    ok &= mc_ok

    data, labels = two_clusters()
    sq = ((data[:, None] - data[None]) ** 2).sum(-1)
    cond = _conditional_probabilities(sq, perplexity=10.0)
    worst_perp = 0.0
    for i in range(len(data)):
        row = cond[i][cond[i] > 0]
        perp = np.exp(-np.sum(row * np.log(row)))
        worst_perp = max(worst_perp, abs(perp - 10.0))
    ok &= worst_perp <= 1e-4

    coords = tsne(data, perplexity=10.0, seed=0, iterations=400)
    within, between = cluster_separation(coords, labels)
    ok &= within < between

    layout = rng.normal(0, 1, (25, 2))
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    moved = layout @ rot.T + np.array([2.0, -3.0])
    avg = align_and_average([ProjectionRun("pca", 0, layout),
                             ProjectionRun("pca", 1, moved)])
    residual = np.abs(procrustes_align(avg, layout) - layout).max()
    ok &= residual < 1e-6

    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    report("projection suite", ok,
           f"orthonormality {ortho:.1e} (< 1e-6); variance optimality over 100 "
           f"directions; perplexity error {worst_perp:.1e} (<= 1e-4); clusters "
           f"separated ({within:.2f} < {between:.2f}); procrustes residual "
           f"{residual:.1e} (< 1e-6); {elapsed:.1f}s (< 300s)")


def test_cube_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(31)
    coords = rng.random((500, 2))
    coords[:3] = [[1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]
    preds = rng.integers(0, 10, size=500)
    ids = np.arange(500)
    cube = build_cube(coords, preds, ids)

    ok = True
    for level in range(4):
        want = brute_force_bins(coords, list(preds), list(ids), level)
        got = cube.levels[level]
        ok &= set(got) == set(want)
        ok &= all(got[k].count == v[0] and got[k].mode_class == v[1]
                  and got[k].representative_id == v[2] for k, v in want.items())
        ok &= sum(b.count for b in got.values()) == 500

    for level in range(4):
        full = {r[:3] for r in query_view(cube, (0, 0, 1, 1), level).representatives}
        union = set()
        for vp in [(0, 0, 0.5, 0.5), (0.5, 0, 1, 0.5), (0, 0.5, 0.5, 1),
                   (0.5, 0.5, 1, 1)]:
            union |= {r[:3] for r in query_view(cube, vp, level).representatives}
        ok &= union == full

    elapsed = time.perf_counter() - t0
    ok &= elapsed < 10
    report("cube oracle",
           ok, f"brute-force equivalence at levels 0-3 on 500 points; count "
               f"conservation; quadrant partition identity; {elapsed:.1f}s (< 10s)")


def test_api_contract(small_bundle_dir):
    bundle = read_bundle(small_bundle_dir)
    net = load_weights(small_bundle_dir / "models" / "cnn-a.advxnet")
    app = create_app(small_bundle_dir)  # no webui built: ui_dir=None
    ok = True
    with TestClient(app) as client:
        acc = client.get("/api/accuracy",
                         params={"model": "cnn-a", "attack": "fgsm"}).json()
        group = bundle.group("cnn-a", "fgsm")
        for k, lv in enumerate(group.levels):
            adv = np.clip(bundle.images + lv.noise, 0.0, 1.0)
            preds, _ = predict_batch(net, adv)
            ok &= acc["robust"][k] == pytest.approx(
                float((preds == bundle.labels).mean()), abs=1e-12)

        params = {"model": "cnn-a", "attack": "fgsm", "epsilon": 0.03,
                  "level": 1, "x0": 0, "y0": 0, "x1": 1, "y1": 1}
        a = client.get("/api/view", params=params)
        b = client.get("/api/view", params=params)
        ok &= a.content == b.content
        lv = group.level(0.03)
        for pt in a.json()["points"]:
            ok &= pt["prediction"] == int(lv.predictions[pt["id"]])

        idx = 4
        inst = client.get(f"/api/instance/{idx}", params={
            "model": "cnn-a", "attack": "fgsm", "epsilon": 0.03}).json()
        decoded = decode_png(inst["adversarial_png"]).astype(np.float64) / 255.0
        want = bundle.adversarial_image("cnn-a", "fgsm", 0.03, idx)
        png_err = np.abs(decoded - want).max()
        ok &= png_err <= 1.0 / 255.0 + 1e-9
        ok &= abs(sum(inst["adv_confidences"]) - 1.0) < 1e-6
    report("api contract", ok,
           f"accuracy/view/instance recompute-consistent; repeated responses "
           f"byte-identical; PNG decode error {png_err:.5f} (<= 1/255); "
           f"served with no webui built")


def test_end_to_end_determinism(tmp_path):
    runner = CliRunner()
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / f"demo-{run}"
        result = runner.invoke(cli_main, [
            "demo", "--out", str(out), "--limit", "50", "--epochs", "2",
            "--zoo-iterations", "10", "--seed", "123"],
            catch_exceptions=False)
        assert result.exit_code == 0, result.output
        files = sorted(p.relative_to(out) for p in out.rglob("accuracy.json"))
        outputs.append({str(p): (out / p).read_bytes() for p in files})
    ok = outputs[0] == outputs[1] and len(outputs[0]) == 24
    report("end-to-end determinism", ok,
           f"two seeded demo runs produced {len(outputs[0])} identical "
           f"accuracy.json files (3 models x 2 attacks x 4 epsilons)")
