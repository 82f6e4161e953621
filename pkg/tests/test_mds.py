import numpy as np
import pytest

from simspace.core import DissimilarityMatrix, Embedding, make_rng, write_embedding
from simspace.mds import (
    SmacofConfig,
    classical_init,
    dimension_scan,
    guttman_step,
    procrustes_align,
    raw_stress,
    scan_seed,
    smacof,
    stress1,
)

# best achievable stress for 4 points with all pairwise dissimilarities 1
# embedded in 2-D, frozen from a 1000-restart multi-start oracle and an
# independent BFGS oracle (both 0.16910197872576268; closed form
# sqrt((3 - 2*sqrt(2)) / 6)).
K4_2D_STRESS1 = 0.16910197872576268


def ids(n):
    return tuple(f"s{i}" for i in range(n))


def delta_from(coords):
    coords = np.asarray(coords, dtype=float)
    d = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1))
    return DissimilarityMatrix(ids(len(coords)), d)


def equilateral():
    return DissimilarityMatrix(ids(3), np.ones((3, 3)) - np.eye(3))


def triangle_coords():
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])


class TestRawStress:
    def test_perfect_fit_is_zero(self):
        rng = make_rng(1)
        coords = rng.normal(0, 1, (6, 2))
        assert raw_stress(coords, delta_from(coords)) == 0.0

    def test_single_mismatched_pair(self):
        # collinear points 0,1,2 with the (0,1) dissimilarity set to 2: the
        # only misfit term is (1 - 2)^2 = 1
        coords = np.array([[0.0], [1.0], [2.0]])
        d = np.array([[0.0, 2.0, 2.0], [2.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
        assert raw_stress(coords, DissimilarityMatrix(ids(3), d)) == pytest.approx(1.0)

    def test_epsilon_perturbation_gives_eps_squared(self):
        rng = make_rng(2)
        coords = rng.normal(0, 1, (6, 3))
        dm = delta_from(coords).values.copy()
        eps = 1e-3
        dm[0, 1] += eps
        dm[1, 0] += eps
        delta = DissimilarityMatrix(ids(6), dm)
        assert raw_stress(coords, delta) == pytest.approx(eps ** 2, rel=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="does not match"):
            raw_stress(np.zeros((4, 2)), equilateral())


class TestStress1:
    def test_exact_configuration(self):
        assert stress1(triangle_coords(), equilateral()) < 1e-12

    def test_degenerate_dissimilarities(self):
        d = DissimilarityMatrix(ids(3), np.zeros((3, 3)))
        with pytest.raises(ValueError, match="degenerate"):
            stress1(np.zeros((3, 2)), d)

    def test_k4_regression_constant(self):
        delta = DissimilarityMatrix(ids(4), np.ones((4, 4)) - np.eye(4))
        emb, _ = smacof(delta, SmacofConfig(dims=2, restarts=8, max_iter=1000,
                                            rel_tol=1e-14, seed=11))
        assert emb.stress1 == pytest.approx(K4_2D_STRESS1, abs=1e-9)

    def test_zero_iff_distances_match(self):
        rng = make_rng(3)
        coords = rng.normal(0, 1, (7, 3))
        delta = delta_from(coords)
        assert stress1(coords, delta) < 1e-12
        d = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1))
        assert np.max(np.abs(d - delta.values)) < 1e-12
        # converse: any entrywise mismatch beyond 1e-12 makes stress1 nonzero
        bumped = delta.values.copy()
        bumped[0, 1] += 1e-6
        bumped[1, 0] += 1e-6
        assert stress1(coords, DissimilarityMatrix(ids(7), bumped)) > 1e-12


class TestClassicalInit:
    def test_collinear_points_recovered(self):
        delta = delta_from(np.array([[0.0], [1.0], [2.0]]))
        coords = classical_init(delta, 1)
        gaps = np.diff(np.sort(coords[:, 0]))
        assert np.allclose(gaps, [1.0, 1.0], atol=1e-9)

    def test_equilateral_is_exact(self):
        assert stress1(classical_init(equilateral(), 2), equilateral()) < 1e-9

    def test_exact_recovery_in_4d(self):
        rng = make_rng(4)
        coords = rng.normal(0, 1, (8, 4))
        delta = delta_from(coords)
        assert stress1(classical_init(delta, 4), delta) < 1e-9

    def test_deterministic(self):
        delta = delta_from(make_rng(5).normal(0, 1, (6, 2)))
        a = classical_init(delta, 2)
        b = classical_init(delta, 2)
        assert a.tobytes() == b.tobytes()

    def test_extra_dims_padded_with_zeros(self):
        coords = classical_init(equilateral(), 5)
        assert coords.shape == (3, 5)
        assert np.all(coords[:, 2:] == 0.0)


class TestGuttmanStep:
    def test_fixed_point_at_optimum(self):
        coords = triangle_coords()
        coords = coords - coords.mean(axis=0)
        stepped = guttman_step(coords, equilateral())
        assert np.max(np.abs(stepped - coords)) < 1e-12

    def test_stress_never_increases(self):
        for seed in range(10):
            rng = make_rng(seed)
            n = int(rng.integers(4, 11))
            coords = rng.normal(0, 1, (n, 2))
            v = rng.uniform(0.1, 2.0, (n, n))
            v = (v + v.T) / 2
            np.fill_diagonal(v, 0.0)
            delta = DissimilarityMatrix(ids(n), v)
            before = raw_stress(coords, delta)
            after = raw_stress(guttman_step(coords, delta), delta)
            assert after <= before * (1 + 1e-12)

    def test_coincident_points_stay_finite(self):
        coords = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
        stepped = guttman_step(coords, equilateral())
        assert np.all(np.isfinite(stepped))


class TestSmacof:
    def test_exact_3d_configuration_recovered(self):
        rng = make_rng(6)
        truth = rng.normal(0, 1, (10, 3))
        delta = delta_from(truth)
        emb, _ = smacof(delta, SmacofConfig(dims=3, seed=1))
        assert emb.stress1 < 1e-6
        truth_emb = Embedding(ids(10), truth)
        _, disparity = procrustes_align(truth_emb, emb)
        assert disparity < 1e-4

    def test_equilateral_distances(self):
        emb, _ = smacof(equilateral(), SmacofConfig(dims=2, seed=2))
        d = np.sqrt(((emb.coords[:, None] - emb.coords[None]) ** 2).sum(-1))
        off = d[np.triu_indices(3, 1)]
        assert np.allclose(off, 1.0, atol=1e-6)

    def test_trace_non_increasing(self):
        rng = make_rng(7)
        v = rng.uniform(0.2, 1.5, (9, 9))
        v = (v + v.T) / 2
        np.fill_diagonal(v, 0.0)
        delta = DissimilarityMatrix(ids(9), v)
        _, trace = smacof(delta, SmacofConfig(dims=2, seed=3))
        s = np.array(trace.raw_stress)
        assert np.all(s[1:] <= s[:-1] * (1 + 1e-12))

    def test_zero_centroid(self):
        rng = make_rng(8)
        delta = delta_from(rng.normal(0, 1, (6, 2)))
        emb, _ = smacof(delta, SmacofConfig(dims=2, seed=4))
        assert np.allclose(emb.coords.mean(axis=0), 0.0, atol=1e-12)

    def test_seed_determinism_bytes(self, tmp_path):
        rng = make_rng(9)
        v = rng.uniform(0.2, 1.5, (8, 8))
        v = (v + v.T) / 2
        np.fill_diagonal(v, 0.0)
        delta = DissimilarityMatrix(ids(8), v)
        files = []
        for name in ("a.csv", "b.csv"):
            emb, _ = smacof(delta, SmacofConfig(dims=3, seed=77))
            write_embedding(emb, tmp_path / name)
            files.append((tmp_path / name).read_bytes())
        assert files[0] == files[1]

    def test_scale_equivariance(self):
        rng = make_rng(10)
        v = rng.uniform(0.3, 1.2, (7, 7))
        v = (v + v.T) / 2
        np.fill_diagonal(v, 0.0)
        delta = DissimilarityMatrix(ids(7), v)
        c = 3.7
        scaled = DissimilarityMatrix(ids(7), c * v)
        cfg = SmacofConfig(dims=2, init="classical", seed=5)
        emb, _ = smacof(delta, cfg)
        emb_scaled, _ = smacof(scaled, cfg)
        ref = Embedding(ids(7), c * emb.coords)
        _, disparity = procrustes_align(ref, emb_scaled)
        assert disparity < 1e-8

    def test_recovery_property(self):
        # exact dissimilarities from random configs are recovered at true dims
        for seed, n, d in [(0, 5, 2), (1, 12, 3), (2, 20, 5), (3, 7, 1), (4, 16, 4)]:
            rng = make_rng(100 + seed)
            truth = rng.normal(0, 1, (n, d))
            delta = delta_from(truth)
            emb, _ = smacof(delta, SmacofConfig(dims=d, seed=seed))
            assert emb.stress1 < 1e-6
            _, disparity = procrustes_align(Embedding(ids(n), truth), emb)
            assert disparity < 1e-4


class TestDimensionScan:
    def test_exact_3d_data(self):
        rng = make_rng(11)
        delta = delta_from(rng.normal(0, 1, (9, 3)))
        curve = dimension_scan(delta, [1, 2, 3, 4], SmacofConfig(seed=6))
        by_dims = {d: s1 for d, s1, _ in curve.points}
        assert by_dims[3] < 1e-6
        assert by_dims[4] < 1e-6

    def test_triangle_improves_with_dims(self):
        curve = dimension_scan(equilateral(), [1, 2], SmacofConfig(seed=7))
        assert curve.points[1][1] < curve.points[0][1]

    def test_overparameterized_allowed_with_warning(self):
        curve = dimension_scan(equilateral(), [5], SmacofConfig(seed=8))
        assert curve.points[0][1] < 1e-9
        assert any("dims >= n-1" in w for w in curve.warnings)

    def test_non_increasing_dims_rejected(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            dimension_scan(equilateral(), [2, 2], SmacofConfig(seed=9))

    def test_matches_cli_seed_derivation(self):
        rng = make_rng(12)
        delta = delta_from(rng.normal(0, 1, (6, 2)))
        curve = dimension_scan(delta, [2], SmacofConfig(seed=13))
        emb, _ = smacof(delta, SmacofConfig(dims=2, seed=scan_seed(13, 2)))
        assert curve.points[0][1] == emb.stress1


class TestProcrustes:
    def test_rotation_translation_aligned(self):
        rng = make_rng(14)
        a = rng.normal(0, 1, (8, 2))
        theta = 0.7
        R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        b = a @ R.T + np.array([3.0, -1.0])
        ea, eb = Embedding(ids(8), a), Embedding(ids(8), b)
        aligned, disparity = procrustes_align(ea, eb)
        assert disparity < 1e-10
        assert np.max(np.abs(aligned.coords - a)) < 1e-7

    def test_reflection_aligned(self):
        rng = make_rng(15)
        a = rng.normal(0, 1, (8, 3))
        b = a.copy()
        b[:, 0] = -b[:, 0]
        _, disparity = procrustes_align(Embedding(ids(8), a), Embedding(ids(8), b))
        assert disparity < 1e-10

    def test_noise_bound(self):
        rng = make_rng(16)
        a = rng.normal(0, 1, (10, 2))
        eps = rng.normal(0, 0.01, (10, 2))
        _, disparity = procrustes_align(Embedding(ids(10), a), Embedding(ids(10), a + eps))
        assert disparity <= np.sum(eps ** 2) + 1e-12

    def test_id_mismatch(self):
        a = Embedding(("a", "b", "c"), np.zeros((3, 2)))
        b = Embedding(("a", "b", "x"), np.zeros((3, 2)))
        with pytest.raises(ValueError, match="different stimuli"):
            procrustes_align(a, b)

    def test_optional_scale(self):
        rng = make_rng(17)
        a = rng.normal(0, 1, (6, 2))
        b = 2.5 * a
        ea, eb = Embedding(ids(6), a), Embedding(ids(6), b)
        _, d_noscale = procrustes_align(ea, eb)
        _, d_scale = procrustes_align(ea, eb, allow_scale=True)
        assert d_scale < 1e-10 < d_noscale


class TestConfig:
    def test_bounds(self):
        with pytest.raises(ValueError):
            SmacofConfig(dims=0)
        with pytest.raises(ValueError):
            SmacofConfig(restarts=0)
        with pytest.raises(ValueError):
            SmacofConfig(max_iter=0)
        with pytest.raises(ValueError):
            SmacofConfig(rel_tol=0.0)
        with pytest.raises(ValueError):
            SmacofConfig(init="bogus")
