"""Gradient-based likelihood minimization with restarts and iteration traces.

A limited-memory quasi-Newton (two-loop recursion, history 10) with Armijo
backtracking drives all model fitting.  The likelihood surface is non-convex
with many local minima, so fits run from several independent initializations
and keep the best; near-singular kernel regimes are expected at aggressive
hyperparameters, which is why a failed line search terminates the run
gracefully instead of raising.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import gradients
from .data import Preprocessing, principal_directions
from .exact_gp import GpModel
from .exceptions import NumericalError
from .kernels import ArdParams, ProjParams
from .model import TrainedModel
from .sparse import SpgpParams, Variant

log = logging.getLogger(__name__)

ARMIJO_C1 = 1e-4
CURVATURE_FLOOR = 1e-10
MAX_BACKTRACKS = 50


@dataclass(frozen=True)
class OptConfig:
    """Stopping rules and restart schedule for a fit."""

    max_iterations: int = 500
    grad_tolerance: float = 1e-5
    value_tolerance: float = 1e-9
    restarts: int = 5
    seed: int = 0
    history: int = 10

    def __post_init__(self):
        if self.max_iterations < 1 or self.restarts < 1 or self.history < 1:
            raise ValueError("counts must be >= 1")
        if self.grad_tolerance <= 0 or self.value_tolerance <= 0:
            raise ValueError("tolerances must be > 0")


@dataclass(frozen=True)
class IterationRecord:
    value: float
    grad_norm: float
    step: float


@dataclass
class OptTrace:
    """Accepted-iteration history of one minimization run."""

    records: list = field(default_factory=list)
    reason: str = ""
    best: np.ndarray | None = None
    best_value: float = np.inf

    @property
    def n_iterations(self) -> int:
        return max(len(self.records) - 1, 0)


def _inf_norm(g) -> float:
    return float(np.max(np.abs(g))) if g.size else 0.0


class _History:
    """Curvature pairs for the two-loop recursion."""

    def __init__(self, capacity):
        self.capacity = capacity
        self.pairs = []

    def clear(self):
        self.pairs = []

    def push(self, s, y_vec):
        sy = float(s @ y_vec)
        if sy > CURVATURE_FLOOR * float(np.linalg.norm(s)) * float(np.linalg.norm(y_vec)):
            self.pairs.append((s, y_vec, 1.0 / sy))
            if len(self.pairs) > self.capacity:
                self.pairs.pop(0)

    def direction(self, g):
        """Approximate -H^-1 g from stored curvature pairs."""
        q = -g.copy()
        if not self.pairs:
            return q
        alphas = []
        for s, y_vec, rho in reversed(self.pairs):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y_vec
        s, y_vec, rho = self.pairs[-1]
        q *= float(s @ y_vec) / float(y_vec @ y_vec)
        for (s, y_vec, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * float(y_vec @ q)
            q += (a - b) * s
        return q


def minimize(objective, start, cfg: OptConfig) -> OptTrace:
    """Minimize a smooth objective from one starting point.

    Parameters
    ----------
    objective : callable
        Maps a flat parameter array to (value, gradient).
    start : ndarray
        Starting point; the objective must be finite here.
    cfg : OptConfig

    Returns
    -------
    OptTrace
        With per-iteration records, the termination reason ("gradient
        tolerance", "value tolerance", "iteration limit" or "line search
        failure") and the best point found.
    """
    x = np.asarray(start, dtype=float).copy()
    f, g = objective(x)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise ValueError("objective is not finite at the starting point")

    trace = OptTrace()
    trace.records.append(IterationRecord(value=f, grad_norm=_inf_norm(g), step=0.0))
    history = _History(cfg.history)

    for _ in range(cfg.max_iterations):
        if _inf_norm(g) <= cfg.grad_tolerance * max(1.0, abs(f)):
            trace.reason = "gradient tolerance"
            break
        d = history.direction(g)
        slope = float(g @ d)
        if slope >= 0.0:
            # stale curvature produced an ascent direction; fall back to steepest
            history.clear()
            d = -g
            slope = float(g @ d)

        step = 1.0 if history.pairs else min(1.0, 1.0 / max(_inf_norm(g), 1e-8))
        accepted = None
        for _ in range(MAX_BACKTRACKS):
            x_try = x + step * d
            try:
                f_try, g_try = objective(x_try)
            except (NumericalError, ValueError, FloatingPointError, OverflowError):
                # aggressive trial points can overflow the log-scale transforms
                # or break a factorization; treat them as rejected steps
                f_try = np.nan
                g_try = None
            if (np.isfinite(f_try) and g_try is not None
                    and np.all(np.isfinite(g_try))
                    and f_try <= f + ARMIJO_C1 * step * slope):
                accepted = (x_try, float(f_try), g_try)
                break
            step *= 0.5
        if accepted is None:
            trace.reason = "line search failure"
            break

        x_new, f_new, g_new = accepted
        history.push(x_new - x, g_new - g)
        improvement = f - f_new
        x, f, g = x_new, f_new, g_new
        trace.records.append(IterationRecord(value=f, grad_norm=_inf_norm(g), step=step))
        if improvement <= cfg.value_tolerance * max(1.0, abs(f)):
            trace.reason = "value tolerance"
            break
    else:
        trace.reason = "iteration limit"

    trace.best = x
    trace.best_value = f
    return trace


def default_init(X, y, variant: Variant, n_pseudo=None, reduced_dim=None,
                 rng=None, restart_index: int = 0):
    """Scale-aware starting point for one restart of a fit.

    The base initialization (restart 0): amplitude at the target variance,
    noise at a tenth of it, inverse squared lengthscales at 1/range^2 per
    dimension, uncertainties small, pseudo-inputs at a random subset of the
    (projected) training inputs, and the projection at the top principal
    directions rescaled so the projected cloud has median pairwise distance 1.

    The likelihood surface is multimodal in the lengthscales (a too-smooth
    start settles for pure noise on oscillatory targets), so later restarts
    climb a deterministic lengthscale ladder (x4 on the squared-distance
    weights per restart, cycling after five) with small log-scale jitter,
    besides redrawing the pseudo-input subset.
    """
    rng = np.random.default_rng() if rng is None else rng
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    var_y = max(float(np.var(y)), 1e-12)
    jitter = restart_index > 0

    def scale_jitter(value):
        return value * np.exp(rng.normal(0.0, 0.3, size=np.shape(value))) if jitter else value

    amp = float(scale_jitter(var_y))
    noise = float(scale_jitter(0.1 * var_y))
    ladder = 4.0 ** (restart_index % 5)
    ranges = X.max(axis=0) - X.min(axis=0)
    inv_sq = np.where(ranges > 0, 1.0 / np.maximum(ranges, 1e-12) ** 2, 1.0)
    inv_sq = scale_jitter(inv_sq * ladder)

    if variant is Variant.GP:
        kernel = ArdParams(amp=amp, inv_sq_lengthscales=inv_sq)
        return gradients.pack_gp(kernel, noise)

    if n_pseudo is None or n_pseudo < 1:
        raise ValueError("sparse variants need the number of pseudo-inputs")
    if variant.uses_projection:
        if reduced_dim is None or not 1 <= reduced_dim <= d:
            raise ValueError(f"projected variants need 1 <= reduced dim <= {d}")
        P = principal_directions(X, reduced_dim)
        med = _median_pairwise(X @ P.T, rng)
        P = P / max(med, 1e-12) * np.sqrt(ladder)
        if jitter:
            scale = float(np.sqrt(np.mean(P * P)))
            P = P + rng.normal(0.0, 0.3 * scale, size=P.shape)
        kernel = ProjParams(amp=amp, proj=P)
        Z = X @ P.T
        xbar = Z[rng.choice(n, size=min(n_pseudo, n), replace=False)]
        if n_pseudo > n:
            xbar = np.vstack([xbar, rng.normal(size=(n_pseudo - n, reduced_dim))])
    else:
        kernel = ArdParams(amp=amp, inv_sq_lengthscales=inv_sq)
        xbar = X[rng.choice(n, size=min(n_pseudo, n), replace=False)]
        if n_pseudo > n:
            lo, hi = X.min(axis=0), X.max(axis=0)
            xbar = np.vstack([xbar, rng.uniform(lo, hi, size=(n_pseudo - n, d))])
    uncert = None
    if variant.uses_uncertainties:
        rho = np.full(n_pseudo, -4.0)
        if jitter:
            rho = rho + rng.normal(0.0, 0.5, size=n_pseudo)
        uncert = np.exp(rho)
    params = SpgpParams(variant=variant, kernel=kernel, pseudo_inputs=xbar,
                        pseudo_uncert=uncert, noise_var=noise)
    return gradients.pack(params)


def _median_pairwise(Z, rng, cap=500):
    n = Z.shape[0]
    if n > cap:
        Z = Z[rng.choice(n, size=cap, replace=False)]
    diff = Z[:, None, :] - Z[None, :, :]
    dists = np.sqrt((diff * diff).sum(axis=-1))
    vals = dists[np.triu_indices(Z.shape[0], k=1)]
    med = float(np.median(vals)) if vals.size else 0.0
    return med if med > 0 else 1.0


def multistart_fit(X, y, variant: Variant, n_pseudo=None, reduced_dim=None,
                   cfg: OptConfig = OptConfig(), preprocessing: Preprocessing | None = None,
                   feature_names=None, target_name=None):
    """Fit a model from several independent initializations, keep the best.

    Restart seeds are spawned deterministically from cfg.seed, so the whole
    procedure is reproducible; ties in the final likelihood go to the lowest
    restart index.

    Returns
    -------
    (TrainedModel, list of OptTrace)
        One trace per restart, in restart order (failed restarts excluded
        from the winner selection but reported in the aggregate error if all
        fail).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)

    def objective(values, layout):
        res = gradients.nlml_and_grad(
            gradients.ParamVector(values=values, layout=layout), X, y)
        return res.value, res.grad

    traces = []
    candidates = []
    failures = []
    for k in range(cfg.restarts):
        rng = np.random.default_rng(children[k])
        try:
            pv = default_init(X, y, variant, n_pseudo=n_pseudo,
                              reduced_dim=reduced_dim, rng=rng, restart_index=k)
            trace = minimize(lambda v: objective(v, pv.layout), pv.values, cfg)
        except NumericalError as exc:
            log.debug("restart %d failed numerically: %s", k, exc)
            failures.append(f"restart {k}: {exc}")
            continue
        traces.append(trace)
        candidates.append((trace.best_value, k, trace, pv.layout))
    if not candidates:
        raise NumericalError("all restarts failed numerically: " + "; ".join(failures))

    _, best_k, best_trace, layout = min(candidates, key=lambda c: (c[0], c[1]))
    best_pv = gradients.ParamVector(values=best_trace.best, layout=layout)
    metadata = {
        "seed": cfg.seed,
        "restarts": cfg.restarts,
        "best_restart": best_k,
        "final_nlml": best_trace.best_value,
        "iterations": best_trace.n_iterations,
        "termination": best_trace.reason,
    }
    if variant is Variant.GP:
        kernel, noise = gradients.unpack_gp(best_pv)
        model = TrainedModel.from_gp(GpModel(X, y, kernel, noise),
                                     preprocessing=preprocessing,
                                     feature_names=feature_names,
                                     target_name=target_name, metadata=metadata)
    else:
        params = gradients.unpack(best_pv)
        model = TrainedModel.from_sparse(params, X, y, preprocessing=preprocessing,
                                         feature_names=feature_names,
                                         target_name=target_name, metadata=metadata)
    return model, traces
