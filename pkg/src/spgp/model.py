"""Trained models: prediction in original units through the preprocessing record.

A trained sparse model carries its O(M)-sized prediction factors, so it is
self-contained at test time; the exact GP keeps its training data because the
dense predictor needs it.  Raw-space inputs are always the public interface;
projection, normalization and target transforms happen internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Preprocessing
from .exact_gp import GpModel
from .sparse import (
    SpgpParams,
    SpgpPrecompute,
    Variant,
    spgp_precompute,
    spgp_predict,
)


@dataclass(frozen=True)
class Prediction:
    """Per-point predictive summaries in original target units.

    ``point`` is the predictive mean, or the median when the model was
    trained on log-transformed targets; the 95% band maps the latent Gaussian
    interval through the inverse transform.  ``latent_mean``/``latent_var``
    are kept on the transformed scale for density scoring.
    """

    point: np.ndarray
    variance: np.ndarray
    lower95: np.ndarray
    upper95: np.ndarray
    latent_mean: np.ndarray
    latent_var: np.ndarray


@dataclass(frozen=True)
class TrainedModel:
    """A fitted model of any variant, plus everything needed to predict."""

    variant: Variant
    params: SpgpParams | None = None
    precompute: SpgpPrecompute | None = None
    gp: GpModel | None = None
    preprocessing: Preprocessing | None = None
    feature_names: tuple | None = None
    target_name: str | None = None
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_sparse(cls, params: SpgpParams, X, y, preprocessing=None,
                    feature_names=None, target_name=None, metadata=None):
        """Build from fitted sparse parameters and the (transformed) training set."""
        pre = spgp_precompute(params, X, y)
        return cls(variant=params.variant, params=params, precompute=pre,
                   preprocessing=preprocessing,
                   feature_names=None if feature_names is None else tuple(feature_names),
                   target_name=target_name, metadata=metadata or {})

    @classmethod
    def from_gp(cls, gp: GpModel, preprocessing=None, feature_names=None,
                target_name=None, metadata=None):
        return cls(variant=Variant.GP, gp=gp, preprocessing=preprocessing,
                   feature_names=None if feature_names is None else tuple(feature_names),
                   target_name=target_name, metadata=metadata or {})

    @property
    def dim(self) -> int:
        """Raw input dimension the model expects."""
        return self.gp.params.dim if self.variant is Variant.GP else self.params.kernel.dim

    @property
    def n_trainable(self) -> int:
        """Number of scalars the fit optimized."""
        from .gradients import Layout

        if self.variant is Variant.GP:
            return Layout(variant=Variant.GP, n_pseudo=0, dim=self.dim).length
        k = self.params.kernel
        return Layout(variant=self.variant, n_pseudo=self.params.n_pseudo,
                      dim=k.dim,
                      reduced_dim=k.reduced_dim if self.variant.uses_projection
                      else None).length

    def predict_latent(self, X_raw):
        """Predictive mean and variance on the preprocessed (training) scale."""
        X = np.atleast_2d(np.asarray(X_raw, dtype=float))
        if X.shape[1] != (self.preprocessing.x_shift.shape[0]
                          if self.preprocessing else self.dim):
            raise ValueError(f"inputs have dimension {X.shape[1]}, "
                             f"model expects {self.dim}")
        Xz = self.preprocessing.transform_inputs(X) if self.preprocessing else X
        if self.variant is Variant.GP:
            return self.gp.predict(Xz)
        return spgp_predict(self.precompute, Xz)

    def predict(self, X_raw) -> Prediction:
        """Full predictive summary in original target units."""
        mu_z, var_z = self.predict_latent(X_raw)
        prep = self.preprocessing or Preprocessing.identity(self.dim)
        point, var, lower, upper = prep.invert_predictions(mu_z, var_z)
        return Prediction(point=point, variance=var, lower95=lower, upper95=upper,
                          latent_mean=mu_z, latent_var=var_z)
