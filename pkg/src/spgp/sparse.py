"""Sparse pseudo-input GP: covariance, marginal likelihood, prediction, sampling.

The covariance of the N training points is a rank-M term plus a diagonal,

    K_sparse = K_nm B^-1 K_mn' + lambda_n * delta_nn',
    lambda_n = K_nn - K_nm B^-1 K_mn,

where B is the M x M pseudo-input covariance, optionally inflated on its
diagonal by per-pseudo-input uncertainties h (B = K_m + diag(h)).  Increasing
h_m gradually switches pseudo-input m off; at h_m -> infinity it is ignored
entirely.  All likelihood and prediction algebra goes through the Woodbury
identity and the matrix determinant lemma, so evaluating the marginal
likelihood costs O(M^2 N) time and O(M N) memory, never forming an N x N
matrix.  Dense N x N construction is provided only for desk-scale diagnostics
and sampling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import NumericalError
from .kernels import (
    ArdParams,
    KernelMatrix,
    ProjParams,
    gauss_matrix,
    stabilized_cholesky,
)

LOG_2PI = float(np.log(2.0 * np.pi))

# lambda_n is non-negative analytically; tiny negative values (relative to the
# amplitude) are factorization roundoff and get clamped, anything worse is an
# error.
LAMBDA_CLAMP_REL = 1e-10


class Variant(enum.Enum):
    """Model family selector, matching the CLI names."""

    GP = "gp"
    PLAIN = "spgp"
    DR = "spgp-dr"
    HS = "spgp-hs"
    DR_HS = "spgp-dr-hs"

    @property
    def is_sparse(self) -> bool:
        return self is not Variant.GP

    @property
    def uses_projection(self) -> bool:
        return self in (Variant.DR, Variant.DR_HS)

    @property
    def uses_uncertainties(self) -> bool:
        return self in (Variant.HS, Variant.DR_HS)

    @classmethod
    def from_name(cls, name: str) -> "Variant":
        for v in cls:
            if v.value == name:
                return v
        raise ValueError(f"unknown variant {name!r}; expected one of "
                         f"{[v.value for v in cls]}")


@dataclass(frozen=True)
class SpgpParams:
    """Full parameter set of a sparse model.

    Parameters
    ----------
    variant : Variant
        One of the sparse variants (PLAIN, DR, HS, DR_HS).
    kernel : ArdParams or ProjParams
        ArdParams for PLAIN/HS, ProjParams for the projected variants.
    pseudo_inputs : ndarray, shape (M, D) or (M, G)
        Free pseudo-input locations; for projected variants they live in the
        reduced G-dimensional space.
    pseudo_uncert : ndarray, shape (M,), or None
        Per-pseudo-input uncertainties h >= 0; required for HS variants,
        absent otherwise.
    noise_var : float
        Observation noise variance (> 0).
    """

    variant: Variant
    kernel: object
    pseudo_inputs: np.ndarray
    pseudo_uncert: np.ndarray | None
    noise_var: float

    def __post_init__(self):
        if not isinstance(self.variant, Variant) or not self.variant.is_sparse:
            raise ValueError(f"variant must be a sparse Variant, got {self.variant!r}")
        xb = np.atleast_2d(np.asarray(self.pseudo_inputs, dtype=float))
        object.__setattr__(self, "pseudo_inputs", xb)
        if xb.shape[0] < 1 or not np.all(np.isfinite(xb)):
            raise ValueError("pseudo_inputs must be a non-empty finite (M, ...) array")
        if self.variant.uses_projection:
            if not isinstance(self.kernel, ProjParams):
                raise ValueError(f"{self.variant.value} requires ProjParams")
            if xb.shape[1] != self.kernel.reduced_dim:
                raise ValueError(
                    f"pseudo-inputs have dimension {xb.shape[1]}, projection "
                    f"produces {self.kernel.reduced_dim}")
        else:
            if not isinstance(self.kernel, ArdParams):
                raise ValueError(f"{self.variant.value} requires ArdParams")
            if xb.shape[1] != self.kernel.dim:
                raise ValueError(
                    f"pseudo-inputs have dimension {xb.shape[1]}, kernel expects "
                    f"{self.kernel.dim}")
        if self.variant.uses_uncertainties:
            h = np.asarray(self.pseudo_uncert, dtype=float).ravel()
            object.__setattr__(self, "pseudo_uncert", h)
            if h.shape[0] != xb.shape[0]:
                raise ValueError("need one uncertainty per pseudo-input")
            if not np.all(np.isfinite(h)) or np.any(h < 0):
                raise ValueError("pseudo-input uncertainties must be finite and >= 0")
        elif self.pseudo_uncert is not None:
            raise ValueError(f"{self.variant.value} does not take uncertainties")
        if not (np.isfinite(self.noise_var) and self.noise_var > 0):
            raise ValueError(f"noise variance must be finite and > 0, got {self.noise_var!r}")

    @property
    def n_pseudo(self) -> int:
        return self.pseudo_inputs.shape[0]

    @property
    def amp(self) -> float:
        return self.kernel.amp


def _check_inputs(params: SpgpParams, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    want = params.kernel.dim
    if X.shape[1] != want:
        raise ValueError(f"inputs have dimension {X.shape[1]}, model expects {want}")
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs must be finite")
    return X


def data_side_inputs(params: SpgpParams, X) -> np.ndarray:
    """Map raw inputs into the space the pseudo-inputs live in."""
    X = _check_inputs(params, X)
    if params.variant.uses_projection:
        return X @ params.kernel.proj.T
    return X


def _data_weights(params: SpgpParams):
    # inverse squared lengthscales in the space shared with the pseudo-inputs
    if params.variant.uses_projection:
        return None  # unit lengthscales in the projected space
    return params.kernel.inv_sq_lengthscales


def cross_covariance(params: SpgpParams, X) -> np.ndarray:
    """N x M covariance between data points and pseudo-inputs."""
    Z = data_side_inputs(params, X)
    return gauss_matrix(Z, params.pseudo_inputs, params.amp, _data_weights(params))


def effective_km(params: SpgpParams) -> KernelMatrix:
    """M x M pseudo-input covariance, diagonal-inflated by h for HS variants."""
    K = gauss_matrix(params.pseudo_inputs, params.pseudo_inputs, params.amp,
                     _data_weights(params))
    if params.variant.uses_uncertainties:
        K[np.diag_indices_from(K)] += params.pseudo_uncert
    return KernelMatrix(entries=K)


def _clamp_lambda(lam, amp):
    floor = -LAMBDA_CLAMP_REL * amp
    worst = float(lam.min()) if lam.size else 0.0
    if worst < floor:
        raise NumericalError(
            f"residual variance went negative ({worst:.3e} < {floor:.3e}); "
            "the pseudo-input covariance factorization looks broken")
    return np.maximum(lam, 0.0)


@dataclass(frozen=True)
class _Factors:
    """Shared O(M^2 N) factorization products for one parameter setting."""

    Knm: np.ndarray        # data-pseudo cross covariance, shape (N, M)
    L_b: np.ndarray        # chol of effective K_m (+ jitter)
    jitter_b: float
    V: np.ndarray          # L_b^-1 K_mn, shape (M, N)
    lam: np.ndarray        # residual variances, shape (N,)
    a: np.ndarray          # lam + noise_var
    Vs: np.ndarray         # V scaled by 1/sqrt(a) columnwise
    L_q: np.ndarray        # chol of I + Vs Vs^T


def _factorize(params: SpgpParams, X) -> _Factors:
    # extreme hyperparameters (e.g. during line searches) can overflow the
    # scaled factors; surface that as a numerical failure instead of warnings
    # plus NaN propagation
    with np.errstate(over="ignore", invalid="ignore"):
        Knm = cross_covariance(params, X)
        B = effective_km(params)
        L_b, jitter_b = stabilized_cholesky(B, label="pseudo-input covariance")
        V = solve_triangular(L_b, Knm.T, lower=True)
        lam = _clamp_lambda(params.amp - np.einsum("mn,mn->n", V, V), params.amp)
        a = lam + params.noise_var
        Vs = V / np.sqrt(a)[None, :]
        Qp = Vs @ Vs.T
        Qp[np.diag_indices_from(Qp)] += 1.0
        if not np.all(np.isfinite(Qp)):
            raise NumericalError("reduced system matrix overflowed; the "
                                 "parameter values are out of floating range")
        L_q, _ = stabilized_cholesky(Qp, label="reduced system matrix")
    return _Factors(Knm=Knm, L_b=L_b, jitter_b=jitter_b, V=V, lam=lam, a=a,
                    Vs=Vs, L_q=L_q)


def _nlml_from_factors(f: _Factors, y):
    """(value, scaled targets, reduced solve) shared by likelihood and gradients."""
    y = np.asarray(y, dtype=float).ravel()
    if f.a.shape[0] != y.shape[0]:
        raise ValueError(f"inputs have {f.a.shape[0]} rows but y has {y.shape[0]} entries")
    ys = y / np.sqrt(f.a)
    gamma = solve_triangular(f.L_q, f.Vs @ ys, lower=True)
    logdet = float(np.sum(np.log(f.a))) + 2.0 * float(np.sum(np.log(np.diag(f.L_q))))
    quad = float(ys @ ys) - float(gamma @ gamma)
    value = 0.5 * (logdet + quad + y.shape[0] * LOG_2PI)
    return value, ys, gamma


def compute_lambda(params: SpgpParams, X) -> np.ndarray:
    """Per-point residual variances lambda_n = K_nn - K_nm B^-1 K_mn (>= 0)."""
    Knm = cross_covariance(params, X)
    L_b, _ = stabilized_cholesky(effective_km(params), label="pseudo-input covariance")
    V = solve_triangular(L_b, Knm.T, lower=True)
    return _clamp_lambda(params.amp - np.einsum("mn,mn->n", V, V), params.amp)


def spgp_cov_matrix(params: SpgpParams, X) -> np.ndarray:
    """Dense N x N sparse-model covariance (diagnostics and sampling only).

    The caller is responsible for keeping N small; the training path never
    builds this matrix.
    """
    Knm = cross_covariance(params, X)
    L_b, _ = stabilized_cholesky(effective_km(params), label="pseudo-input covariance")
    V = solve_triangular(L_b, Knm.T, lower=True)
    cov = V.T @ V
    # low-rank part plus lambda reconstructs K_nn = amp exactly on the diagonal
    cov[np.diag_indices_from(cov)] = params.amp
    return cov


def spgp_nlml(params: SpgpParams, X, y) -> float:
    """Negative log marginal likelihood through the low-rank route.

    Log-determinant via the matrix determinant lemma, quadratic form via the
    Woodbury identity; no N x N matrix is formed.
    """
    value, _, _ = _nlml_from_factors(_factorize(params, X), y)
    return value


@dataclass(frozen=True)
class SpgpPrecompute:
    """Factorizations that make prediction O(M) per mean and O(M^2) per variance."""

    params: SpgpParams
    L_b: np.ndarray
    L_q: np.ndarray
    mean_weights: np.ndarray   # mu_* = k_*^T mean_weights
    jitter_b: float


def spgp_precompute(params: SpgpParams, X, y) -> SpgpPrecompute:
    """One-off O(M^2 N) training-set reduction for fast repeated prediction."""
    f = _factorize(params, X)
    _, _, gamma = _nlml_from_factors(f, y)
    w = solve_triangular(f.L_q.T, gamma, lower=False)
    mean_weights = solve_triangular(f.L_b.T, w, lower=False)
    return SpgpPrecompute(params=params, L_b=f.L_b, L_q=f.L_q,
                          mean_weights=mean_weights, jitter_b=f.jitter_b)


def spgp_predict(pre: SpgpPrecompute, Xstar):
    """Predictive mean and variance at new inputs.

    Parameters
    ----------
    pre : SpgpPrecompute
    Xstar : ndarray, shape (n, D) or (D,)
        Raw-space test inputs (projected internally for the DR variants).

    Returns
    -------
    (mu, var) : ndarrays of shape (n,)
        The variance includes the observation noise and, per construction,
        lies between noise_var and amp + noise_var up to roundoff.
    """
    p = pre.params
    Ks = cross_covariance(p, np.atleast_2d(np.asarray(Xstar, dtype=float)))
    mu = Ks @ pre.mean_weights
    w = solve_triangular(pre.L_b, Ks.T, lower=True)
    u = solve_triangular(pre.L_q, w, lower=True)
    var = (p.amp - np.einsum("mn,mn->n", w, w)
           + np.einsum("mn,mn->n", u, u) + p.noise_var)
    return mu, var


def sample_marginal(params: SpgpParams, X, seed) -> np.ndarray:
    """Draw targets y ~ N(0, K_sparse + noise_var * I) at the given inputs.

    Dense construction, so intended for desk-scale N.  Deterministic for a
    fixed seed.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cov = spgp_cov_matrix(params, X)
    cov[np.diag_indices_from(cov)] += params.noise_var
    L, _ = stabilized_cholesky(cov, label="marginal covariance")
    rng = np.random.default_rng(seed)
    return L @ rng.standard_normal(X.shape[0])
