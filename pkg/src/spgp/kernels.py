"""Squared-exponential covariance functions and kernel-matrix construction.

Two parameterizations are supported:

* anisotropic (ARD): one non-negative inverse squared lengthscale per input
  dimension, so irrelevant dimensions can be switched off entirely;
* projected: inputs are first mapped through a learned linear projection to a
  lower-dimensional space, where unit lengthscales apply (extra lengthscales
  there would be redundant because the projection can rescale freely).

Squared distances are accumulated from coordinate differences in double
precision; the difference-based route keeps self-covariance matrices exactly
symmetric and avoids the cancellation of the norm-expansion shortcut.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError

log = logging.getLogger(__name__)

# Jitter ladder for near-singular kernel matrices, relative to mean(diag):
# 0, then JITTER_START escalating by JITTER_GROWTH up to JITTER_MAX.
JITTER_START = 1e-10
JITTER_GROWTH = 10.0
JITTER_MAX = 1e-4


@dataclass(frozen=True)
class ArdParams:
    """Hyperparameters of the anisotropic squared-exponential kernel.

    Parameters
    ----------
    amp : float
        Prior variance at zero distance (> 0), in target-variance units.
    inv_sq_lengthscales : ndarray, shape (D,)
        Per-dimension inverse squared lengthscales, each >= 0.  A zero entry
        makes the kernel ignore that dimension.
    """

    amp: float
    inv_sq_lengthscales: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.inv_sq_lengthscales, dtype=float)
        object.__setattr__(self, "inv_sq_lengthscales", w)
        if not (np.isfinite(self.amp) and self.amp > 0):
            raise ValueError(f"amplitude must be finite and > 0, got {self.amp!r}")
        if w.ndim != 1:
            raise ValueError("inv_sq_lengthscales must be one-dimensional")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("inv_sq_lengthscales must be finite and >= 0")

    @property
    def dim(self) -> int:
        return self.inv_sq_lengthscales.shape[0]


@dataclass(frozen=True)
class ProjParams:
    """Hyperparameters of the projected squared-exponential kernel.

    Parameters
    ----------
    amp : float
        Prior variance at zero distance (> 0).
    proj : ndarray, shape (G, D)
        Linear projection applied to raw inputs, G <= D.  Unit lengthscales
        apply in the projected space.
    """

    amp: float
    proj: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.proj, dtype=float)
        object.__setattr__(self, "proj", p)
        if not (np.isfinite(self.amp) and self.amp > 0):
            raise ValueError(f"amplitude must be finite and > 0, got {self.amp!r}")
        if p.ndim != 2:
            raise ValueError("projection must be a (G, D) matrix")
        g, d = p.shape
        if not 1 <= g <= d:
            raise ValueError(f"projection needs 1 <= G <= D, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("projection entries must all be finite")

    @property
    def reduced_dim(self) -> int:
        return self.proj.shape[0]

    @property
    def dim(self) -> int:
        return self.proj.shape[1]


@dataclass(frozen=True)
class KernelMatrix:
    """A covariance matrix plus the diagonal stabilization it carries."""

    entries: np.ndarray
    jitter_applied: float = 0.0


def _check_vector(x, length, name):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != length:
        raise ValueError(f"{name} must be a vector of length {length}, got shape {x.shape}")
    return x


def ard_kernel(x, x2, p: ArdParams) -> float:
    """Covariance amp * exp(-0.5 * sum_d w_d (x_d - x2_d)^2) between two points."""
    x = _check_vector(x, p.dim, "x")
    x2 = _check_vector(x2, p.dim, "x2")
    diff = x - x2
    return p.amp * float(np.exp(-0.5 * np.dot(p.inv_sq_lengthscales, diff * diff)))


def proj_kernel_data_pseudo(x, xbar, p: ProjParams) -> float:
    """Covariance between a raw data point and a pseudo-input in projected space.

    Returns amp * exp(-0.5 * ||P x - xbar||^2) where xbar already lives in the
    G-dimensional projected space.
    """
    x = _check_vector(x, p.dim, "x")
    xbar = _check_vector(xbar, p.reduced_dim, "xbar")
    diff = p.proj @ x - xbar
    return p.amp * float(np.exp(-0.5 * np.dot(diff, diff)))


def proj_kernel_pseudo_pseudo(xbar, xbar2, amp: float) -> float:
    """Covariance amp * exp(-0.5 * ||xbar - xbar2||^2) between two pseudo-inputs."""
    xbar = np.asarray(xbar, dtype=float)
    if xbar.ndim != 1:
        raise ValueError(f"xbar must be a vector, got shape {xbar.shape}")
    xbar2 = _check_vector(xbar2, xbar.shape[0], "xbar2")
    diff = xbar - xbar2
    return amp * float(np.exp(-0.5 * np.dot(diff, diff)))


def weighted_sq_dists(a, b, weights=None) -> np.ndarray:
    """Pairwise sum_d w_d (a_nd - b_md)^2 between the rows of two point sets.

    Differences are formed coordinate-wise before squaring, which makes the
    result exactly symmetric when ``a is b`` and keeps accuracy for nearly
    coincident points.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"point sets disagree on dimension: {a.shape[1]} vs {b.shape[1]}")
    diff = a[:, None, :] - b[None, :, :]
    if weights is None:
        return np.einsum("nmd,nmd->nm", diff, diff)
    weights = np.asarray(weights, dtype=float)
    return np.einsum("nmd,nmd,d->nm", diff, diff, weights)


def gauss_matrix(a, b, amp, weights=None) -> np.ndarray:
    """Dense amp * exp(-0.5 * weighted squared distance) between two point sets."""
    return amp * np.exp(-0.5 * weighted_sq_dists(a, b, weights))


def build_cross_matrix(rows, cols, kind: str, params) -> KernelMatrix:
    """Build the covariance matrix between two point sets.

    Parameters
    ----------
    rows, cols : ndarray
        Point sets; entry (i, j) is the kernel of rows[i] and cols[j].
    kind : {"ard", "proj-data-pseudo", "proj-pseudo-pseudo"}
        Which covariance to apply.  "ard" expects ``ArdParams`` and both sets
        in the raw D-dimensional space.  "proj-data-pseudo" expects
        ``ProjParams`` with raw-space rows and projected-space cols.
        "proj-pseudo-pseudo" expects ``ProjParams`` with both sets already in
        the projected space.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    cols = np.atleast_2d(np.asarray(cols, dtype=float))
    if kind == "ard":
        entries = gauss_matrix(rows, cols, params.amp, params.inv_sq_lengthscales)
    elif kind == "proj-data-pseudo":
        entries = gauss_matrix(rows @ params.proj.T, cols, params.amp)
    elif kind == "proj-pseudo-pseudo":
        entries = gauss_matrix(rows, cols, params.amp)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    return KernelMatrix(entries=entries)


def stabilized_cholesky(m, label: str = "kernel matrix"):
    """Lower Cholesky factor of a symmetric matrix, escalating jitter on failure.

    Jitter starts at zero and climbs a geometric ladder relative to the mean
    diagonal until the factorization succeeds.

    Returns
    -------
    (L, jitter) : (ndarray, float)
        Factor with L @ L.T == m + jitter * I, and the jitter actually used.

    Raises
    ------
    NumericalError
        If the factorization still fails at the maximum jitter.
    """
    a = m.entries if isinstance(m, KernelMatrix) else np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{label} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{label} contains non-finite entries")
    mean_diag = float(np.mean(np.diag(a)))
    scale = mean_diag if mean_diag > 0 else 1.0
    jitter = 0.0
    while True:
        try:
            target = a if jitter == 0.0 else a + jitter * np.eye(a.shape[0])
            L = np.linalg.cholesky(target)
            if jitter > 0.0:
                log.debug("cholesky of %s stabilized with jitter %.3e", label, jitter)
            return L, jitter
        except np.linalg.LinAlgError:
            jitter = JITTER_START * scale if jitter == 0.0 else jitter * JITTER_GROWTH
            if jitter > JITTER_MAX * scale * (1.0 + 1e-12):
                raise NumericalError(
                    f"cholesky factorization of {label} failed even at maximum "
                    f"jitter {JITTER_MAX * scale:.3e}"
                ) from None
