"""Scoring definitions, unit handling, and the experiment harness."""

import numpy as np
import pytest

from spgp.data import Dataset, SplitSpec, generate_heteroscedastic
from spgp.evaluation import (
    format_report_table,
    median_time,
    mse,
    nlpd,
    run_experiment,
    score_model,
    train_model,
)
from spgp.optimizer import OptConfig
from spgp.sparse import Variant


class TestNlpd:
    def test_zero_at_matching_mean_and_special_variance(self):
        # residual zero and variance 1/(2 pi) makes the log term vanish
        y = np.array([1.0, -2.0, 0.5])
        assert nlpd(y, np.full(3, 1 / (2 * np.pi)), y) == pytest.approx(0.0, abs=1e-15)

    def test_standard_normal_at_mode(self):
        val = nlpd([0.0], [1.0], [0.0])
        assert val == pytest.approx(0.5 * np.log(2 * np.pi), rel=1e-12)
        assert val == pytest.approx(0.918939, abs=1e-6)

    def test_nonpositive_variance_rejected(self):
        with pytest.raises(ValueError):
            nlpd([0.0], [0.0], [0.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            nlpd([0.0, 1.0], [1.0, 1.0], [0.0])

    def test_translation_invariance(self, rng):
        mu = rng.normal(size=20)
        var = rng.uniform(0.1, 2.0, size=20)
        y = rng.normal(size=20)
        shifted = nlpd(mu + 13.7, var, y + 13.7)
        assert shifted == pytest.approx(nlpd(mu, var, y), abs=1e-12)

    def test_minimized_at_squared_residual(self):
        # as a function of the predictive variance, the per-point density is
        # best exactly at the squared residual
        resid2 = 0.49
        grid = resid2 * np.array([0.25, 0.5, 1.0, 2.0, 4.0])
        vals = [nlpd([0.0], [v], [np.sqrt(resid2)]) for v in grid]
        assert vals[2] == min(vals)
        assert vals[0] > vals[1] > vals[2] < vals[3] < vals[4]


class TestMse:
    def test_perfect_predictions(self):
        assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_simple_value(self):
        assert mse([0.0, 0.0], [1.0, -1.0]) == pytest.approx(1.0, abs=0)

    def test_variance_does_not_enter(self, rng):
        mu = rng.normal(size=10)
        y = rng.normal(size=10)
        assert mse(mu, y) == pytest.approx(float(np.mean((mu - y) ** 2)), rel=1e-15)


class TestScoreModel:
    def test_scores_in_original_units(self, rng):
        # scoring must undo normalization: train on shifted/scaled targets and
        # compare against a by-hand computation in raw units
        ds = generate_heteroscedastic(150, seed=3)
        scaled = Dataset(X=ds.X, y=ds.y * 50 + 300, feature_names=ds.feature_names,
                         target_name="y")
        model, _ = train_model(scaled, Variant.PLAIN, n_pseudo=5,
                               cfg=OptConfig(max_iterations=80, restarts=2, seed=0))
        pd_score, sq_score = score_model(model, scaled.X, scaled.y)
        pred = model.predict(scaled.X)
        want_mse = float(np.mean((pred.point - scaled.y) ** 2))
        assert sq_score == pytest.approx(want_mse, rel=1e-12)
        # raw-unit NLPD equals the Gaussian density in raw units
        var_raw = pred.latent_var * model.preprocessing.y_scale ** 2
        mu_raw = pred.latent_mean * model.preprocessing.y_scale + model.preprocessing.y_shift
        assert pd_score == pytest.approx(nlpd(mu_raw, var_raw, scaled.y), rel=1e-10)

    def test_log_transform_scoring_consistent_with_density(self, rng):
        y = rng.uniform(1.0, 5.0, size=120)
        x = rng.normal(size=(120, 1))
        ds = Dataset(X=x, y=y, feature_names=("x",), target_name="y")
        model, _ = train_model(ds, Variant.PLAIN, n_pseudo=4, log_offset=0.5,
                               cfg=OptConfig(max_iterations=60, restarts=1, seed=0))
        pd_score, _ = score_model(model, ds.X, ds.y)
        # numerically integrate the implied density for one point to confirm
        # it is normalized after the change of variables
        pred = model.predict(ds.X[:1])
        mu, var = pred.latent_mean[0], pred.latent_var[0]
        prep = model.preprocessing
        ygrid = np.linspace(-0.49, 60.0, 400_000)
        z = prep.transform_targets(ygrid)
        dens = (np.exp(-0.5 * (z - mu) ** 2 / var) / np.sqrt(2 * np.pi * var)
                / (prep.y_scale * (ygrid + 0.5)))
        total = np.trapezoid(dens, ygrid)
        assert total == pytest.approx(1.0, abs=1e-3)


class TestMedianTime:
    def test_returns_median_scale(self):
        import time

        t = median_time(lambda: time.sleep(0.01), repeats=3)
        assert 0.005 < t < 0.1

    def test_invalid_repeats(self):
        with pytest.raises(ValueError):
            median_time(lambda: None, repeats=0)


class TestRunExperiment:
    def test_identical_variant_entries_agree(self):
        ds = generate_heteroscedastic(90, seed=5)
        cfg = OptConfig(max_iterations=40, restarts=1, seed=2)
        reports = run_experiment(ds, [Variant.PLAIN, Variant.PLAIN], n_pseudo=4,
                                 cfg=cfg, trials=2)
        assert reports[0].nlpd == pytest.approx(reports[1].nlpd, rel=1e-12)
        assert reports[0].mse == pytest.approx(reports[1].mse, rel=1e-12)

    def test_standard_errors_present_with_trials(self):
        ds = generate_heteroscedastic(90, seed=5)
        cfg = OptConfig(max_iterations=40, restarts=1, seed=2)
        reports = run_experiment(ds, ["spgp"], n_pseudo=4, cfg=cfg, trials=5)
        r = reports[0]
        assert r.nlpd_se is not None and r.nlpd_se >= 0
        assert r.mse_se is not None

    def test_single_trial_has_no_standard_error(self):
        ds = generate_heteroscedastic(90, seed=5)
        reports = run_experiment(ds, ["gp"], cfg=OptConfig(max_iterations=40,
                                                           restarts=1, seed=0),
                                 trials=1)
        assert reports[0].nlpd_se is None

    def test_train_time_grows_with_pseudo_count(self):
        # cost model: likelihood evaluation is linear in N but quadratic in M,
        # so more pseudo-inputs must cost more wall time on the same data
        ds = generate_heteroscedastic(400, seed=6)
        cfg = OptConfig(max_iterations=30, restarts=1, seed=1)
        small = run_experiment(ds, ["spgp"], n_pseudo=5, cfg=cfg, trials=1)[0]
        big = run_experiment(ds, ["spgp"], n_pseudo=40, cfg=cfg, trials=1)[0]
        assert big.train_seconds > small.train_seconds

    def test_table_format(self):
        ds = generate_heteroscedastic(90, seed=5)
        reports = run_experiment(ds, ["gp"], cfg=OptConfig(max_iterations=30,
                                                           restarts=1, seed=0),
                                 trials=1)
        table = format_report_table(reports)
        lines = table.strip().split("\n")
        assert lines[0].split("\t")[0] == "variant"
        assert lines[1].split("\t")[0] == "gp"
        assert lines[1].split("\t")[-1] == "ok"

    def test_split_respected(self):
        ds = generate_heteroscedastic(100, seed=5)
        reports = run_experiment(ds, ["gp"], cfg=OptConfig(max_iterations=20,
                                                           restarts=1, seed=0),
                                 split=SplitSpec(counts=(80, 20)), trials=1)
        assert reports[0].n_test == 20
