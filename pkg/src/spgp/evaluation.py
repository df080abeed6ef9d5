"""Scoring (NLPD, MSE), wall-time measurement and variant-comparison experiments.

Scores are always reported in original target units: latent Gaussian
densities pick up the log-Jacobian of any target transform, and squared
errors use the back-transformed point predictions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, SplitSpec, preprocess
from .exceptions import NumericalError
from .model import TrainedModel
from .optimizer import OptConfig, multistart_fit
from .sparse import Variant

LOG_2PI = float(np.log(2.0 * np.pi))


def nlpd(mean, variance, targets) -> float:
    """Mean negative log predictive density of Gaussian per-point predictions."""
    mean = np.asarray(mean, dtype=float).ravel()
    variance = np.asarray(variance, dtype=float).ravel()
    targets = np.asarray(targets, dtype=float).ravel()
    if not mean.shape == variance.shape == targets.shape:
        raise ValueError("predictions and targets must have equal lengths")
    if np.any(variance <= 0):
        raise ValueError("predictive variances must be positive")
    dens = 0.5 * (np.log(2.0 * np.pi * variance) + (targets - mean) ** 2 / variance)
    return float(dens.mean())


def mse(mean, targets) -> float:
    """Mean squared error of point predictions."""
    mean = np.asarray(mean, dtype=float).ravel()
    targets = np.asarray(targets, dtype=float).ravel()
    if mean.shape != targets.shape:
        raise ValueError("predictions and targets must have equal lengths")
    return float(np.mean((targets - mean) ** 2))


def score_model(model: TrainedModel, X_raw, y_raw):
    """(NLPD, MSE) of a trained model on raw held-out data, in original units."""
    y_raw = np.asarray(y_raw, dtype=float).ravel()
    pred = model.predict(X_raw)
    if model.preprocessing is not None:
        z = model.preprocessing.transform_targets(y_raw)
        adjust = float(model.preprocessing.nlpd_adjustment(y_raw).mean())
    else:
        z = y_raw
        adjust = 0.0
    return (nlpd(pred.latent_mean, pred.latent_var, z) + adjust,
            mse(pred.point, y_raw))


def median_time(fn, repeats: int = 3) -> float:
    """Median wall time of calling fn() a few times, damping scheduler noise."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


@dataclass(frozen=True)
class ScoreReport:
    """One experiment row: a variant's held-out scores and wall times."""

    label: str
    nlpd: float = np.nan
    mse: float = np.nan
    n_test: int = 0
    train_seconds: float = 0.0
    test_seconds: float = 0.0
    nlpd_se: float | None = None
    mse_se: float | None = None
    failed: bool = False
    error: str = ""


def train_model(train_ds: Dataset, variant: Variant, n_pseudo=None, reduced_dim=None,
                cfg: OptConfig = OptConfig(), log_offset=None, do_normalize=True):
    """Preprocess a dataset and fit one variant on it."""
    work, prep = preprocess(train_ds, log_offset=log_offset, do_normalize=do_normalize)
    model, traces = multistart_fit(work.X, work.y, variant, n_pseudo=n_pseudo,
                                   reduced_dim=reduced_dim, cfg=cfg,
                                   preprocessing=prep,
                                   feature_names=train_ds.feature_names,
                                   target_name=train_ds.target_name)
    return model, traces


def run_experiment(dataset: Dataset, variants, n_pseudo=None, reduced_dim=None,
                   cfg: OptConfig = OptConfig(), split: SplitSpec | None = None,
                   trials: int = 5, log_offset=None, do_normalize=True):
    """Train each variant on a split, score on the held-out part, repeat.

    Every trial draws a fresh split (and optimizer seed) from the experiment
    seed; all variants within a trial share them, so paired comparisons are
    exact.  Scores aggregate to a mean with a standard error of the mean when
    trials > 1.  A variant that fails numerically is reported as failed
    rather than dropped.

    Returns a list of ScoreReport, one per variant.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    split = split if split is not None else SplitSpec(fractions=(2 / 3, 1 / 3))
    variants = [Variant.from_name(v) if isinstance(v, str) else v for v in variants]
    seed_rng = np.random.default_rng(cfg.seed)
    trial_seeds = seed_rng.integers(0, 2 ** 31, size=trials)

    per_variant = {i: {"nlpd": [], "mse": [], "train": [], "test": [], "n": 0,
                       "error": ""} for i in range(len(variants))}
    for t in range(trials):
        tseed = int(trial_seeds[t])
        parts = replace(split, seed=tseed).resolve(dataset.n)
        train_idx, test_idx = parts[0], parts[-1]
        train_ds, test_ds = dataset.subset(train_idx), dataset.subset(test_idx)
        trial_cfg = replace(cfg, seed=tseed)
        for i, variant in enumerate(variants):
            acc = per_variant[i]
            try:
                t0 = time.perf_counter()
                model, _ = train_model(train_ds, variant, n_pseudo=n_pseudo,
                                       reduced_dim=reduced_dim, cfg=trial_cfg,
                                       log_offset=log_offset,
                                       do_normalize=do_normalize)
                train_s = time.perf_counter() - t0
                test_s = median_time(lambda: model.predict(test_ds.X))
                pd_score, sq_score = score_model(model, test_ds.X, test_ds.y)
            except NumericalError as exc:
                acc["error"] = f"trial {t}: {exc}"
                continue
            acc["nlpd"].append(pd_score)
            acc["mse"].append(sq_score)
            acc["train"].append(train_s)
            acc["test"].append(test_s)
            acc["n"] = test_ds.n

    reports = []
    for i, variant in enumerate(variants):
        acc = per_variant[i]
        k = len(acc["nlpd"])
        if k == 0:
            reports.append(ScoreReport(label=variant.value, failed=True,
                                       error=acc["error"] or "all trials failed"))
            continue
        def _se(xs):
            return float(np.std(xs, ddof=1) / np.sqrt(len(xs))) if len(xs) > 1 else None
        reports.append(ScoreReport(
            label=variant.value,
            nlpd=float(np.mean(acc["nlpd"])), nlpd_se=_se(acc["nlpd"]),
            mse=float(np.mean(acc["mse"])), mse_se=_se(acc["mse"]),
            n_test=acc["n"],
            train_seconds=float(np.mean(acc["train"])),
            test_seconds=float(np.mean(acc["test"])),
        ))
    return reports


def format_report_table(reports) -> str:
    """Tab-separated table with header, one row per variant."""
    cols = ["variant", "nlpd", "nlpd_se", "mse", "mse_se", "n_test",
            "train_seconds", "test_seconds", "status"]
    lines = ["\t".join(cols)]
    for r in reports:
        if r.failed:
            row = [r.label] + [""] * 7 + [f"failed: {r.error}"]
        else:
            row = [r.label,
                   f"{r.nlpd:.6g}", "" if r.nlpd_se is None else f"{r.nlpd_se:.3g}",
                   f"{r.mse:.6g}", "" if r.mse_se is None else f"{r.mse_se:.3g}",
                   str(r.n_test), f"{r.train_seconds:.4g}", f"{r.test_seconds:.4g}",
                   "ok"]
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"
