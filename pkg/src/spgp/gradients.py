"""Unconstrained parameter vectors and analytic likelihood gradients.

Every positive quantity (amplitude, inverse squared lengthscales, pseudo-input
uncertainties, noise variance) is optimized on a log scale so the search space
is unconstrained; pseudo-input coordinates and projection entries are used
directly.  Gradients of the negative log marginal likelihood come from the
identity

    d(-log N)/dt = 1/2 tr(C^-1 dC/dt) - 1/2 y^T C^-1 (dC/dt) C^-1 y

pushed through the low-rank-plus-diagonal structure, so one evaluation costs
O(M^2 N + M N D) like the likelihood itself.  The derivation is certified by
the central finite-difference harness at the bottom of this module; the
matching check is the primary gate for this code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .exact_gp import LOG_2PI, GpModel
from .kernels import ArdParams, ProjParams, gauss_matrix, stabilized_cholesky
from .sparse import SpgpParams, Variant, _factorize, _nlml_from_factors, spgp_nlml


@dataclass(frozen=True)
class Layout:
    """Maps segments of a flat unconstrained vector to model parameters."""

    variant: Variant
    n_pseudo: int
    dim: int
    reduced_dim: int | None = None

    def __post_init__(self):
        if self.variant.uses_projection and not self.reduced_dim:
            raise ValueError("projected variants need a reduced dimension")
        if self.variant is Variant.GP and self.n_pseudo:
            raise ValueError("the exact GP has no pseudo-inputs")

    def segments(self) -> dict:
        """Ordered name -> slice map over the flat vector."""
        segs = {}
        pos = 0

        def add(name, size):
            nonlocal pos
            segs[name] = slice(pos, pos + size)
            pos += size

        add("log_amp", 1)
        if self.variant is Variant.GP:
            add("log_lengthscale_weights", self.dim)
        elif self.variant.uses_projection:
            add("projection", self.reduced_dim * self.dim)
            add("pseudo_inputs", self.n_pseudo * self.reduced_dim)
        else:
            add("log_lengthscale_weights", self.dim)
            add("pseudo_inputs", self.n_pseudo * self.dim)
        if self.variant.uses_uncertainties:
            add("log_uncertainties", self.n_pseudo)
        add("log_noise", 1)
        return segs

    @property
    def length(self) -> int:
        segs = self.segments()
        return max(s.stop for s in segs.values())


@dataclass(frozen=True)
class ParamVector:
    """Flat unconstrained parameter values together with their layout."""

    values: np.ndarray
    layout: Layout

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.shape[0] != self.layout.length:
            raise ValueError(
                f"vector has length {v.shape[0]}, layout expects {self.layout.length}")

    def segment(self, name: str) -> np.ndarray:
        return self.values[self.layout.segments()[name]]

    def replaced(self, values) -> "ParamVector":
        return ParamVector(values=np.asarray(values, dtype=float), layout=self.layout)


@dataclass(frozen=True)
class GradResult:
    value: float
    grad: np.ndarray


def _log_or_raise(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError(f"{name} must be strictly positive to pack on a log scale")
    return np.log(x)


def pack(params: SpgpParams) -> ParamVector:
    """Flatten sparse-model parameters onto the unconstrained scale."""
    k = params.kernel
    if params.variant.uses_projection:
        layout = Layout(variant=params.variant, n_pseudo=params.n_pseudo,
                        dim=k.dim, reduced_dim=k.reduced_dim)
        middle = [k.proj.ravel(), params.pseudo_inputs.ravel()]
    else:
        layout = Layout(variant=params.variant, n_pseudo=params.n_pseudo, dim=k.dim)
        middle = [_log_or_raise(k.inv_sq_lengthscales, "inverse squared lengthscales"),
                  params.pseudo_inputs.ravel()]
    parts = [np.array([np.log(k.amp)])] + middle
    if params.variant.uses_uncertainties:
        parts.append(_log_or_raise(params.pseudo_uncert, "pseudo-input uncertainties"))
    parts.append(np.array([np.log(params.noise_var)]))
    return ParamVector(values=np.concatenate(parts), layout=layout)


def unpack(pv: ParamVector) -> SpgpParams:
    """Inverse of :func:`pack`.

    Raises ValueError when a coordinate left the representable range (e.g. a
    log-amplitude overflowing exp); optimizers treat such points as rejected.
    """
    lay = pv.layout
    if lay.variant is Variant.GP:
        raise ValueError("use unpack_gp for the exact-GP layout")
    with np.errstate(over="ignore"):
        amp = float(np.exp(pv.segment("log_amp")[0]))
        noise = float(np.exp(pv.segment("log_noise")[0]))
        if lay.variant.uses_projection:
            kernel = ProjParams(amp=amp, proj=pv.segment("projection")
                                .reshape(lay.reduced_dim, lay.dim))
            xbar = pv.segment("pseudo_inputs").reshape(lay.n_pseudo, lay.reduced_dim)
        else:
            kernel = ArdParams(
                amp=amp,
                inv_sq_lengthscales=np.exp(pv.segment("log_lengthscale_weights")))
            xbar = pv.segment("pseudo_inputs").reshape(lay.n_pseudo, lay.dim)
        uncert = (np.exp(pv.segment("log_uncertainties"))
                  if lay.variant.uses_uncertainties else None)
    if not (np.isfinite(noise) and noise > 0):
        raise ValueError(f"noise variance left the representable range: {noise!r}")
    return SpgpParams(variant=lay.variant, kernel=kernel, pseudo_inputs=xbar,
                      pseudo_uncert=uncert, noise_var=noise)


def pack_gp(kernel: ArdParams, noise_var: float) -> ParamVector:
    """Flatten exact-GP hyperparameters onto the unconstrained scale."""
    layout = Layout(variant=Variant.GP, n_pseudo=0, dim=kernel.dim)
    values = np.concatenate([
        np.array([np.log(kernel.amp)]),
        _log_or_raise(kernel.inv_sq_lengthscales, "inverse squared lengthscales"),
        np.array([np.log(noise_var)]),
    ])
    return ParamVector(values=values, layout=layout)


def unpack_gp(pv: ParamVector):
    """Inverse of :func:`pack_gp`; returns (ArdParams, noise_var)."""
    if pv.layout.variant is not Variant.GP:
        raise ValueError("use unpack for sparse layouts")
    with np.errstate(over="ignore"):
        kernel = ArdParams(
            amp=float(np.exp(pv.segment("log_amp")[0])),
            inv_sq_lengthscales=np.exp(pv.segment("log_lengthscale_weights")))
        noise = float(np.exp(pv.segment("log_noise")[0]))
    if not (np.isfinite(noise) and noise > 0):
        raise ValueError(f"noise variance left the representable range: {noise!r}")
    return kernel, noise


def _ard_quadratic_sums(H, A, B):
    """sum_{ij} H_ij (A_id - B_jd)^2 for every dimension d, without the cube."""
    t1 = (A * A * H.sum(axis=1)[:, None]).sum(axis=0)
    t2 = -2.0 * (A * (H @ B)).sum(axis=0)
    t3 = (B * B * H.sum(axis=0)[:, None]).sum(axis=0)
    return t1 + t2 + t3


def _sparse_nlml_and_grad(params: SpgpParams, X, y) -> GradResult:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    variant = params.variant
    amp = params.amp
    s2 = params.noise_var
    xbar = params.pseudo_inputs

    if variant.uses_projection:
        Z = X @ params.kernel.proj.T
        weights = None
    else:
        Z = X
        weights = params.kernel.inv_sq_lengthscales

    f = _factorize(params, X)
    value, ys, gamma = _nlml_from_factors(f, y)
    sqrt_a = np.sqrt(f.a)

    # extreme trial points during line searches can overflow intermediates;
    # callers reject non-finite results, so keep the vectorized path quiet
    with np.errstate(over="ignore", invalid="ignore"):
        # core Woodbury products; C is the full noisy covariance, never formed
        U = f.Knm
        W = solve_triangular(f.L_q, f.Vs, lower=True)
        alpha = (ys - W.T @ gamma) / sqrt_a         # C^-1 y
        J = solve_triangular(f.L_q, f.L_b.T, lower=True)
        CiU = (W.T @ J) / sqrt_a[:, None]           # C^-1 K_nm
        diag_Ci = (1.0 - np.einsum("mn,mn->n", W, W)) / f.a
        Ua = U.T @ alpha
        SU = CiU - np.outer(alpha, Ua)              # (C^-1 - aa^T) K_nm
        UtSU = (f.L_b @ f.L_b.T - J.T @ J) - np.outer(Ua, Ua)
        ga = 0.5 * (diag_Ci - alpha * alpha)        # adjoint of the extra diagonal

        # adjoints of the cross covariance and the pseudo covariance, including
        # the dependence of the diagonal correction on both
        lower = (f.L_b, True)
        G_U = cho_solve(lower, SU.T).T
        UBi = cho_solve(lower, U.T).T
        U_hat = G_U - 2.0 * ga[:, None] * UBi
        inner = -0.5 * UtSU + (U * ga[:, None]).T @ U
        B_hat = cho_solve(lower, cho_solve(lower, inner).T).T

        Km_kernel = gauss_matrix(xbar, xbar, amp, weights)
        H_U = U_hat * U
        H_B = B_hat * Km_kernel
        sum_ga = float(ga.sum())

        d_log_amp = float(H_U.sum() + H_B.sum()) + amp * sum_ga
        d_log_noise = s2 * sum_ga

        d_xbar = (H_U.T @ Z - xbar * H_U.sum(axis=0)[:, None]
                  - 2.0 * (xbar * H_B.sum(axis=1)[:, None] - H_B @ xbar))
        parts = [np.array([d_log_amp])]
        if variant.uses_projection:
            T = H_U @ xbar - Z * H_U.sum(axis=1)[:, None]
            d_proj = T.T @ X
            parts.append(d_proj.ravel())
            parts.append(d_xbar.ravel())
        else:
            w = params.kernel.inv_sq_lengthscales
            d_w = -0.5 * (_ard_quadratic_sums(H_U, Z, xbar)
                          + _ard_quadratic_sums(H_B, xbar, xbar))
            parts.append(w * d_w)                   # chain through the log scale
            parts.append((d_xbar * w[None, :]).ravel())
        if variant.uses_uncertainties:
            parts.append(params.pseudo_uncert * np.diag(B_hat))
        parts.append(np.array([d_log_noise]))
    return GradResult(value=value, grad=np.concatenate(parts))


def _gp_nlml_and_grad(kernel: ArdParams, noise_var: float, X, y) -> GradResult:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    K = gauss_matrix(X, X, kernel.amp, kernel.inv_sq_lengthscales)
    C = K + noise_var * np.eye(n)
    L, _ = stabilized_cholesky(C, label="noisy GP covariance")
    alpha = cho_solve((L, True), y)
    value = 0.5 * (2.0 * float(np.sum(np.log(np.diag(L))))
                   + float(y @ alpha) + n * LOG_2PI)
    Cinv = cho_solve((L, True), np.eye(n))
    S = Cinv - np.outer(alpha, alpha)
    H = S * K
    d_log_amp = 0.5 * float(H.sum())
    w = kernel.inv_sq_lengthscales
    d_log_w = w * (-0.25) * _ard_quadratic_sums(H, X, X)
    d_log_noise = 0.5 * float(np.trace(S)) * noise_var
    grad = np.concatenate([[d_log_amp], d_log_w, [d_log_noise]])
    return GradResult(value=value, grad=grad)


def nlml_and_grad(pv: ParamVector, X, y) -> GradResult:
    """Objective value and exact analytic gradient in unconstrained coordinates."""
    if pv.layout.variant is Variant.GP:
        kernel, noise = unpack_gp(pv)
        return _gp_nlml_and_grad(kernel, noise, X, y)
    return _sparse_nlml_and_grad(unpack(pv), X, y)


def nlml_value(pv: ParamVector, X, y) -> float:
    """Objective value only (used by the finite-difference harness)."""
    if pv.layout.variant is Variant.GP:
        kernel, noise = unpack_gp(pv)
        return GpModel(X, y, kernel, noise).nlml()
    return spgp_nlml(unpack(pv), X, y)


@dataclass(frozen=True)
class FiniteDiffReport:
    """Coordinate-wise comparison of analytic and central-difference gradients."""

    analytic: np.ndarray
    numeric: np.ndarray
    discrepancies: np.ndarray
    max_discrepancy: float
    worst_coordinate: int


def finite_diff_check(pv: ParamVector, X, y, step: float = 1e-5) -> FiniteDiffReport:
    """Compare the analytic gradient against central finite differences.

    Per-coordinate discrepancy is |analytic - numeric| normalized by
    max(|analytic|, |numeric|, 1e-8).  Central differences keep the truncation
    error at O(step^2), which is what makes the 1e-4 certification threshold
    reachable at the default step.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    analytic = nlml_and_grad(pv, X, y).grad
    numeric = np.empty_like(analytic)
    base = pv.values
    for i in range(base.shape[0]):
        bump = np.zeros_like(base)
        bump[i] = step
        up = nlml_value(pv.replaced(base + bump), X, y)
        down = nlml_value(pv.replaced(base - bump), X, y)
        numeric[i] = (up - down) / (2.0 * step)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    disc = np.abs(analytic - numeric) / denom
    worst = int(np.argmax(disc))
    return FiniteDiffReport(analytic=analytic, numeric=numeric, discrepancies=disc,
                            max_discrepancy=float(disc[worst]), worst_coordinate=worst)


def random_check_instance(variant: Variant, seed, n=25, m=4, d=3, g=2):
    """A well-conditioned random instance for gradient verification.

    Parameter ranges deliberately avoid degeneracies (coincident pseudo-inputs,
    saturated uncertainties) where the normalized discrepancy would be

    dominated by finite-difference roundoff rather than derivation errors.

    Returns (ParamVector, X, y).
    """
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = rng.normal(size=n)
    amp = float(np.exp(rng.normal(0.0, 0.3)))
    noise = float(np.exp(rng.normal(np.log(0.1), 0.3)))
    if variant is Variant.GP:
        kernel = ArdParams(amp=amp,
                           inv_sq_lengthscales=np.exp(rng.normal(np.log(0.5), 0.5, size=d)))
        return pack_gp(kernel, noise), X, y
    if variant.uses_projection:
        kernel = ProjParams(amp=amp, proj=rng.normal(size=(g, d)) * 0.5)
        xbar = rng.uniform(-1.5, 1.5, size=(m, g))
    else:
        kernel = ArdParams(amp=amp,
                           inv_sq_lengthscales=np.exp(rng.normal(np.log(0.5), 0.5, size=d)))
        xbar = rng.uniform(-1.5, 1.5, size=(m, d))
    uncert = (np.exp(rng.uniform(-2.5, -0.5, size=m))
              if variant.uses_uncertainties else None)
    params = SpgpParams(variant=variant, kernel=kernel, pseudo_inputs=xbar,
                        pseudo_uncert=uncert, noise_var=noise)
    return pack(params), X, y
