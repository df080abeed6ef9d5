"""Exact Gaussian-process regression with Gaussian noise.

This is the dense baseline: training costs O(N^3) once per hyperparameter
setting (the factorization is cached on the model), after which prediction is
O(N) per test point for the mean and O(N^2) for the variance.  It doubles as
the correctness oracle for the sparse approximations.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .kernels import ArdParams, gauss_matrix, stabilized_cholesky

LOG_2PI = float(np.log(2.0 * np.pi))


class GpModel:
    """Zero-mean GP regression model with ARD squared-exponential covariance.

    Parameters
    ----------
    X : ndarray, shape (N, D)
        Training inputs.
    y : ndarray, shape (N,)
        Training targets.
    params : ArdParams
        Kernel hyperparameters.
    noise_var : float
        Observation noise variance (> 0).

    The model is immutable after construction; the Cholesky factor of the
    noisy covariance is computed lazily and cached, so repeated predictions
    share one O(N^3) factorization.
    """

    def __init__(self, X, y, params: ArdParams, noise_var: float):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if X.shape[0] < 1:
            raise ValueError("need at least one training point")
        if X.shape[1] != params.dim:
            raise ValueError(f"X has dimension {X.shape[1]}, kernel expects {params.dim}")
        if not (np.isfinite(noise_var) and noise_var > 0):
            raise ValueError(f"noise variance must be finite and > 0, got {noise_var!r}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("training data must be finite")
        self.X = X
        self.y = y
        self.params = params
        self.noise_var = float(noise_var)
        self._chol = None
        self._alpha = None

    @property
    def n_train(self) -> int:
        return self.X.shape[0]

    def _factorize(self):
        if self._chol is None:
            K = gauss_matrix(self.X, self.X, self.params.amp,
                             self.params.inv_sq_lengthscales)
            K[np.diag_indices_from(K)] += self.noise_var
            L, _ = stabilized_cholesky(K, label="noisy GP covariance")
            self._chol = L
            self._alpha = cho_solve((L, True), self.y)
        return self._chol, self._alpha

    def nlml(self) -> float:
        """Negative log marginal likelihood of the targets under the model."""
        L, alpha = self._factorize()
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        return 0.5 * (logdet + float(self.y @ alpha) + self.n_train * LOG_2PI)

    def predict(self, Xstar):
        """Predictive mean and variance at new inputs.

        Parameters
        ----------
        Xstar : ndarray, shape (n, D) or (D,)
            Test inputs.

        Returns
        -------
        (mu, var) : ndarrays of shape (n,)
            Per-point predictive mean and variance; the variance includes the
            observation noise.
        """
        Xstar = np.atleast_2d(np.asarray(Xstar, dtype=float))
        if Xstar.shape[1] != self.params.dim:
            raise ValueError(
                f"test inputs have dimension {Xstar.shape[1]}, kernel expects {self.params.dim}")
        if not np.all(np.isfinite(Xstar)):
            raise ValueError("test inputs must be finite")
        L, alpha = self._factorize()
        Ks = gauss_matrix(Xstar, self.X, self.params.amp,
                          self.params.inv_sq_lengthscales)
        mu = Ks @ alpha
        v = solve_triangular(L, Ks.T, lower=True)
        var = self.params.amp - np.einsum("ij,ij->j", v, v) + self.noise_var
        return mu, var
