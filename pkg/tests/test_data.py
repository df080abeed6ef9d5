"""Ingestion, preprocessing round-trips, splits, PCA, corpora and generators."""

import numpy as np
import pytest

from spgp.data import (
    Dataset,
    Preprocessing,
    SplitSpec,
    generate_heteroscedastic,
    load_csv,
    load_motorcycle,
    log_transform_targets,
    normalize,
    pca_project,
    preprocess,
    principal_directions,
    sampled_scenario_params,
)
from spgp.exceptions import DataError
from spgp.sparse import spgp_cov_matrix


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestLoadCsv:
    def test_small_file(self, tmp_path):
        path = write(tmp_path, "a,b,y\n1,2,3\n4,5,6\n7,8,9\n")
        ds = load_csv(path, target_column="y")
        assert ds.n == 3 and ds.dim == 2
        assert ds.feature_names == ("a", "b")
        np.testing.assert_array_equal(ds.X, [[1, 2], [4, 5], [7, 8]])
        np.testing.assert_array_equal(ds.y, [3, 6, 9])

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        path = write(tmp_path, "# provenance\nx,y\n\n# middle\n1,2\n")
        ds = load_csv(path, target_column="y")
        assert ds.n == 1

    def test_header_only_rejected(self, tmp_path):
        path = write(tmp_path, "x,y\n")
        with pytest.raises(DataError, match="no data rows"):
            load_csv(path, target_column="y")

    def test_malformed_row_reports_line_number(self, tmp_path):
        path = write(tmp_path, "x,y\n1,2\n3\n")
        with pytest.raises(DataError, match="line 3"):
            load_csv(path, target_column="y")

    def test_non_numeric_cell_reports_line(self, tmp_path):
        path = write(tmp_path, "x,y\n1,spam\n")
        with pytest.raises(DataError, match="'spam'"):
            load_csv(path, target_column="y")

    def test_non_finite_rejected(self, tmp_path):
        path = write(tmp_path, "x,y\n1,nan\n")
        with pytest.raises(DataError, match="non-finite"):
            load_csv(path, target_column="y")

    def test_missing_target_column(self, tmp_path):
        path = write(tmp_path, "x,y\n1,2\n")
        with pytest.raises(DataError, match="'z'"):
            load_csv(path, target_column="z")

    def test_motorcycle_corpus(self):
        ds = load_motorcycle()
        assert ds.n == 133 and ds.dim == 1


class TestNormalize:
    def test_idempotent_on_normalized_data(self, rng):
        ds = Dataset(X=rng.normal(size=(200, 3)), y=rng.normal(size=200),
                     feature_names=("a", "b", "c"), target_name="y")
        once, _ = normalize(ds)
        twice, prep = normalize(once)
        assert np.all(np.abs(prep.x_shift) < 1e-10)
        assert np.all(np.abs(prep.x_scale - 1) < 1e-10)
        assert abs(prep.y_shift) < 1e-10 and abs(prep.y_scale - 1) < 1e-10

    def test_constant_column_keeps_scale_one(self, rng):
        X = np.column_stack([np.full(10, 3.0), rng.normal(size=10)])
        ds = Dataset(X=X, y=rng.normal(size=10), feature_names=("c", "v"),
                     target_name="y")
        out, prep = normalize(ds)
        assert prep.x_scale[0] == 1.0
        assert np.all(np.isfinite(out.X))

    def test_round_trip(self, rng):
        ds = Dataset(X=rng.normal(size=(50, 2)) * 7 + 3, y=rng.normal(size=50) * 2,
                     feature_names=("a", "b"), target_name="y")
        out, prep = normalize(ds)
        np.testing.assert_allclose(prep.invert_inputs(out.X), ds.X, atol=1e-12)
        np.testing.assert_allclose(prep.invert_target_mean(out.y), ds.y, atol=1e-12)

    def test_single_row_rejected(self):
        ds = Dataset(X=[[1.0]], y=[2.0], feature_names=("x",), target_name="y")
        with pytest.raises(ValueError):
            normalize(ds)


class TestLogTransform:
    def test_values(self):
        ds = Dataset(X=[[0.0], [0.0]], y=[0.0, np.e - 1.0],
                     feature_names=("x",), target_name="y")
        out = log_transform_targets(ds, offset=1.0)
        np.testing.assert_allclose(out.y, [0.0, 1.0], atol=1e-15)

    def test_domain_violation_names_row(self):
        ds = Dataset(X=[[0.0], [0.0]], y=[5.0, -2.0],
                     feature_names=("x",), target_name="y")
        with pytest.raises(ValueError, match="row 1"):
            log_transform_targets(ds, offset=1.0)

    def test_full_pipeline_round_trip(self, rng):
        y = rng.uniform(0.5, 4.0, size=40)
        ds = Dataset(X=rng.normal(size=(40, 1)), y=y, feature_names=("x",),
                     target_name="y")
        work, prep = preprocess(ds, log_offset=2.0)
        assert prep.log_offset == 2.0
        z = prep.transform_targets(y)
        np.testing.assert_allclose(z, work.y, atol=1e-12)
        np.testing.assert_allclose(prep.invert_target_mean(z), y, atol=1e-12)

    def test_prediction_inversion_median_and_band(self):
        prep = Preprocessing(x_shift=np.zeros(1), x_scale=np.ones(1),
                             y_shift=0.3, y_scale=1.7, log_offset=0.5)
        mu, var = np.array([0.2]), np.array([0.09])
        point, v, lo, hi = prep.invert_predictions(mu, var)
        mu_log = 0.3 + 1.7 * 0.2
        assert point[0] == pytest.approx(np.exp(mu_log) - 0.5, rel=1e-12)
        sd_log = 1.7 * 0.3
        assert lo[0] == pytest.approx(np.exp(mu_log - 2 * sd_log) - 0.5, rel=1e-12)
        assert hi[0] == pytest.approx(np.exp(mu_log + 2 * sd_log) - 0.5, rel=1e-12)
        var_log = 1.7 ** 2 * 0.09
        assert v[0] == pytest.approx((np.exp(var_log) - 1) * np.exp(2 * mu_log + var_log),
                                     rel=1e-12)

    def test_nlpd_adjustment_is_log_jacobian(self):
        prep = Preprocessing(x_shift=np.zeros(1), x_scale=np.ones(1),
                             y_shift=0.0, y_scale=2.0, log_offset=1.0)
        y = np.array([0.0, np.e - 1.0])
        np.testing.assert_allclose(prep.nlpd_adjustment(y),
                                   np.log(2.0) + np.log(y + 1.0), atol=1e-15)


class TestSplitSpec:
    def test_fraction_split_partitions(self):
        parts = SplitSpec(fractions=(0.5, 0.25, 0.25), seed=3).resolve(101)
        assert sum(len(p) for p in parts) == 101
        allidx = np.concatenate(parts)
        assert len(np.unique(allidx)) == 101

    def test_reproducible(self):
        a = SplitSpec(fractions=(0.7, 0.3), seed=9).resolve(50)
        b = SplitSpec(fractions=(0.7, 0.3), seed=9).resolve(50)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_counts_split(self):
        tr, te = SplitSpec(counts=(123, 10), seed=0).resolve(133)
        assert len(tr) == 123 and len(te) == 10
        assert len(np.intersect1d(tr, te)) == 0

    def test_explicit_indices_validated(self):
        with pytest.raises(ValueError, match="overlap"):
            SplitSpec(indices=([0, 1], [1, 2])).resolve(3)
        with pytest.raises(ValueError, match="cover"):
            SplitSpec(indices=([0], [2])).resolve(3)

    def test_exactly_one_mode(self):
        with pytest.raises(ValueError):
            SplitSpec(fractions=(0.5, 0.5), counts=(1, 1)).resolve(2)


class TestPca:
    def test_axis_aligned_data(self, rng):
        X = np.zeros((30, 3))
        X[:, 0] = rng.normal(size=30) * 5
        P = principal_directions(X, 1)
        np.testing.assert_allclose(np.abs(P), [[1, 0, 0]], atol=1e-10)
        assert P[0, 0] > 0

    def test_full_basis_reconstructs(self, rng):
        ds = Dataset(X=rng.normal(size=(40, 4)), y=rng.normal(size=40),
                     feature_names=tuple("abcd"), target_name="y")
        centered, _ = normalize(ds)
        P, proj = pca_project(centered, 4)
        rec = proj.X @ P
        np.testing.assert_allclose(rec, centered.X, atol=1e-10)

    def test_rows_orthonormal(self, rng):
        X = rng.normal(size=(50, 6)) @ rng.normal(size=(6, 6))
        P = principal_directions(X, 3)
        np.testing.assert_allclose(P @ P.T, np.eye(3), atol=1e-10)

    def test_matches_eigendecomposition(self, rng):
        X = rng.normal(size=(20, 4)) * np.array([3.0, 1.0, 0.5, 0.1])
        P = principal_directions(X, 4)
        Xc = X - X.mean(axis=0)
        evals, evecs = np.linalg.eigh(Xc.T @ Xc / 19)
        order = np.argsort(evals)[::-1]
        for i in range(4):
            v = evecs[:, order[i]]
            assert min(np.max(np.abs(P[i] - v)), np.max(np.abs(P[i] + v))) < 1e-8

    def test_out_of_range_components(self, rng):
        with pytest.raises(ValueError):
            principal_directions(rng.normal(size=(10, 3)), 4)


class TestGenerator:
    def test_seed_determinism(self):
        for scenario in ("smooth-varying", "sampled"):
            a = generate_heteroscedastic(50, seed=4, scenario=scenario)
            b = generate_heteroscedastic(50, seed=4, scenario=scenario)
            np.testing.assert_array_equal(a.X, b.X)
            np.testing.assert_array_equal(a.y, b.y)
            c = generate_heteroscedastic(50, seed=5, scenario=scenario)
            assert not np.array_equal(a.y, c.y)

    def test_noise_grows_across_domain(self):
        ds = generate_heteroscedastic(4000, seed=0)
        x, y = ds.X.ravel(), ds.y
        resid = y - np.sin(x)
        left = resid[x < -1.0]
        right = resid[x > 1.0]
        assert right.std() > 2.5 * left.std()

    def test_zero_noise_scale_lands_on_function(self):
        ds = generate_heteroscedastic(80, seed=2, noise_scale=0.0)
        np.testing.assert_array_equal(ds.y, np.sin(ds.X.ravel()))

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            generate_heteroscedastic(10, seed=0, scenario="bogus")

    def test_sampled_covariance_matches_generator_model(self):
        # Monte Carlo oracle shared with the sampler tests, at reduced draws;
        # the acceptance suite runs the full-size version
        n_draws = 20_000
        params = sampled_scenario_params()
        block = np.empty((n_draws, 4))
        X = None
        for s in range(n_draws):
            ds = generate_heteroscedastic(4, seed=s, scenario="sampled")
            block[s] = ds.y
            X = ds.X
        emp = block.T @ block / n_draws
        want = spgp_cov_matrix(params, X) + params.noise_var * np.eye(4)
        se = np.sqrt((np.outer(np.diag(want), np.diag(want)) + want**2) / n_draws)
        assert np.all(np.abs(emp - want) < 5 * se)

    def test_empty_generation(self):
        ds = generate_heteroscedastic(0, seed=0)
        assert ds.n == 0
