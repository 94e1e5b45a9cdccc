import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advx.errors import DegenerateDataError, ShapeError
from advx.projection import (ProjectionRun, _conditional_probabilities,
                             align_and_average, joint_project,
                             normalize_coords, pca_fit, pca_transform,
                             procrustes_align, tsne)


def two_clusters(n_per=20, d=16, gap=25.0, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 1.0, (n_per, d))
    b = rng.normal(0.0, 1.0, (n_per, d))
    b[:, 0] += gap
    return np.vstack([a, b]), np.array([0] * n_per + [1] * n_per)


def cluster_separation(coords, labels):
    within = []
    between = []
    for i in range(len(coords)):
        for j in range(i + 1, len(coords)):
            dist = np.linalg.norm(coords[i] - coords[j])
            (within if labels[i] == labels[j] else between).append(dist)
    return np.mean(within), np.mean(between)


class TestPcaFit:
    def test_line_y_eq_x(self):
        t = np.linspace(-3, 3, 30)
        pts = np.stack([t, t], axis=1)
        basis, mean = pca_fit(pts)
        np.testing.assert_allclose(basis[:, 0], [1 / np.sqrt(2), 1 / np.sqrt(2)],
                                   atol=1e-9)

    def test_diagonal_covariance_gives_axes(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(0, 1, (4000, 3)) * np.sqrt([4.0, 1.0, 0.1])
        basis, _ = pca_fit(pts)
        # components align with e1, e2 up to sampling noise
        assert abs(basis[0, 0]) > 0.99
        assert abs(basis[1, 1]) > 0.99
        # sign convention: dominant entries positive
        assert basis[0, 0] > 0 and basis[1, 1] > 0

    def test_orthonormal(self):
        rng = np.random.default_rng(1)
        x = rng.normal(0, 1, (50, 16))
        basis, _ = pca_fit(x)
        np.testing.assert_allclose(basis.T @ basis, np.eye(2), atol=1e-6)

    def test_variance_optimality_monte_carlo(self):
        rng = np.random.default_rng(2)
        x = rng.normal(0, 1, (50, 16)) @ rng.normal(0, 1, (16, 16))
        basis, mean = pca_fit(x)
        proj = pca_transform(basis, mean, x)
        v1 = proj[:, 0].var()
        v2 = proj[:, 1].var()
        assert v1 >= v2
        centered = x - mean
        for _ in range(100):
            direction = rng.normal(0, 1, 16)
            direction /= np.linalg.norm(direction)
            v = (centered @ direction).var()
            assert v <= v1 + 1e-9

    def test_rank_zero_rejected(self):
        pts = np.ones((10, 4))
        with pytest.raises(DegenerateDataError):
            pca_fit(pts)

    def test_too_few_points_rejected(self):
        with pytest.raises(ShapeError):
            pca_fit(np.zeros((2, 5)))


class TestPcaTransform:
    def test_mean_maps_to_origin(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0, 1, (20, 8))
        basis, mean = pca_fit(x)
        out = pca_transform(basis, mean, mean[None])
        np.testing.assert_allclose(out, 0.0, atol=1e-9)

    def test_eigenvector_offsets_map_to_unit_axes(self):
        rng = np.random.default_rng(4)
        x = rng.normal(0, 1, (30, 8))
        basis, mean = pca_fit(x)
        out = pca_transform(basis, mean, np.stack([mean + basis[:, 0],
                                                   mean - basis[:, 0]]))
        np.testing.assert_allclose(out, [[1.0, 0.0], [-1.0, 0.0]], atol=1e-9)

    def test_round_consistency(self):
        rng = np.random.default_rng(5)
        x = rng.normal(0, 1, (25, 6))
        basis, mean = pca_fit(x)
        first = pca_transform(basis, mean, x)
        again = pca_transform(basis, mean, x)
        np.testing.assert_array_equal(first, again)

    def test_dim_mismatch_rejected(self):
        basis = np.eye(4)[:, :2]
        with pytest.raises(ShapeError):
            pca_transform(basis, np.zeros(4), np.zeros((3, 5)))


class TestTsne:
    def test_probability_normalization(self):
        x, _ = two_clusters(n_per=12, d=8)
        sq = ((x[:, None] - x[None]) ** 2).sum(-1)
        cond = _conditional_probabilities(sq, perplexity=5.0)
        np.testing.assert_allclose(cond.sum(axis=1), 1.0, atol=1e-6)
        assert np.all(np.diag(cond) == 0)
        p = (cond + cond.T) / (2 * len(x))
        assert p.sum() == pytest.approx(1.0, abs=1e-6)
        np.testing.assert_allclose(p, p.T, atol=1e-15)

    def test_bisection_hits_target_perplexity(self):
        x, _ = two_clusters(n_per=12, d=8, seed=3)
        sq = ((x[:, None] - x[None]) ** 2).sum(-1)
        target = 6.0
        cond = _conditional_probabilities(sq, perplexity=target)
        for i in range(len(x)):
            row = cond[i][cond[i] > 0]
            h = -np.sum(row * np.log(row))
            assert abs(np.exp(h) - target) <= 1e-4

    def test_clusters_stay_separated(self):
        x, labels = two_clusters()
        coords = tsne(x, perplexity=10.0, seed=0, iterations=400)
        within, between = cluster_separation(coords, labels)
        assert within < between

    def test_deterministic(self):
        x, _ = two_clusters(n_per=10, d=8)
        a = tsne(x, perplexity=5.0, seed=42, iterations=120)
        b = tsne(x, perplexity=5.0, seed=42, iterations=120)
        np.testing.assert_array_equal(a, b)

    def test_infeasible_perplexity_rejected(self):
        x, _ = two_clusters(n_per=6, d=4)
        with pytest.raises(ValueError):
            tsne(x, perplexity=2.0, seed=0)
        with pytest.raises(ValueError):
            tsne(x, perplexity=len(x) / 3.0, seed=0)


class TestAlignAndAverage:
    def test_single_run_unchanged(self):
        rng = np.random.default_rng(6)
        coords = rng.normal(0, 1, (15, 2))
        out = align_and_average([ProjectionRun("pca", 0, coords)])
        np.testing.assert_array_equal(out, coords)

    def test_rotated_copy_averages_to_original(self):
        rng = np.random.default_rng(7)
        coords = rng.normal(0, 1, (20, 2))
        rot90 = np.array([[0.0, -1.0], [1.0, 0.0]])
        rotated = coords @ rot90.T + np.array([3.0, -1.0])
        avg = align_and_average([ProjectionRun("pca", 0, coords),
                                 ProjectionRun("pca", 1, rotated)])
        realigned = procrustes_align(avg, coords)
        assert np.abs(realigned - coords).max() < 1e-6

    def test_reflection_allowed(self):
        rng = np.random.default_rng(8)
        coords = rng.normal(0, 1, (20, 2))
        reflected = coords @ np.array([[1.0, 0.0], [0.0, -1.0]])
        avg = align_and_average([coords, reflected])
        realigned = procrustes_align(avg, coords)
        assert np.abs(realigned - coords).max() < 1e-6

    def test_tsne_runs_average_keeps_separation(self):
        x, labels = two_clusters()
        runs = [ProjectionRun("tsne", s, tsne(x, 10.0, seed=s, iterations=300))
                for s in range(3)]
        avg = align_and_average(runs)
        within, between = cluster_separation(avg, labels)
        assert within < between

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            align_and_average([np.zeros((5, 2)), np.zeros((6, 2))])


class TestNormalizeCoords:
    def test_endpoints(self):
        out = normalize_coords(np.array([[0.0, 0.0], [10.0, 10.0]]))
        np.testing.assert_allclose(out, [[0.01, 0.01], [0.99, 0.99]], atol=1e-12)

    def test_degenerate_axis_to_half(self):
        out = normalize_coords(np.array([[2.0, 1.0], [2.0, 3.0]]))
        np.testing.assert_allclose(out[:, 0], 0.5)
        np.testing.assert_allclose(out[:, 1], [0.01, 0.99])

    @given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)),
                    min_size=2, max_size=40))
    @settings(max_examples=60, deadline=None)
    def test_range_property(self, pts):
        coords = np.array(pts, dtype=np.float64)
        out = normalize_coords(coords)
        assert out.min() >= 0.01 - 1e-12
        assert out.max() <= 0.99 + 1e-12
        for axis in range(2):
            col = coords[:, axis]
            if col.max() > col.min():
                assert out[:, axis].min() == pytest.approx(0.01, abs=1e-9)
                assert out[:, axis].max() == pytest.approx(0.99, abs=1e-9)


class TestJointProject:
    def test_unchanged_instance_is_stationary(self):
        rng = np.random.default_rng(9)
        clean = rng.normal(0, 1, (30, 16))
        moved = clean.copy()
        moved[10:] += rng.normal(0, 0.5, (20, 16))  # first 10 unchanged
        levels = joint_project([clean, moved], method="pca", runs=3, seed=0)
        np.testing.assert_allclose(levels[0][:10], levels[1][:10], atol=1e-9)

    def test_all_levels_normalized_into_unit_box(self):
        rng = np.random.default_rng(10)
        levels_in = [rng.normal(0, 1, (25, 8)) for _ in range(3)]
        levels = joint_project(levels_in, method="pca", seed=1)
        stacked = np.vstack(levels)
        assert stacked.min() >= 0.01 - 1e-12
        assert stacked.max() <= 0.99 + 1e-12

    def test_tsne_joint_keeps_cluster_structure(self):
        x, labels = two_clusters(n_per=15, d=8)
        levels = joint_project([x, x + 0.01], method="tsne", runs=2, seed=0,
                               perplexity=8.0, iterations=250)
        within, between = cluster_separation(levels[0], labels)
        assert within < between
