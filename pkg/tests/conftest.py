"""Shared builders for random model instances used across the suite."""

import numpy as np
import pytest

from spgp.kernels import ArdParams, ProjParams
from spgp.sparse import SpgpParams, Variant


def random_spgp_params(rng, variant, n_pseudo=4, d=3, g=2, amp=None, noise=None):
    """A healthy random sparse-model parameter set (well away from degeneracies)."""
    amp = float(rng.uniform(0.5, 2.0)) if amp is None else amp
    noise = float(rng.uniform(0.05, 0.3)) if noise is None else noise
    if variant.uses_projection:
        kernel = ProjParams(amp=amp, proj=rng.normal(size=(g, d)) * 0.7)
        xbar = rng.uniform(-2, 2, size=(n_pseudo, g))
    else:
        kernel = ArdParams(amp=amp, inv_sq_lengthscales=rng.uniform(0.2, 1.5, size=d))
        xbar = rng.uniform(-2, 2, size=(n_pseudo, d))
    uncert = rng.uniform(0.05, 0.8, size=n_pseudo) if variant.uses_uncertainties else None
    return SpgpParams(variant=variant, kernel=kernel, pseudo_inputs=xbar,
                      pseudo_uncert=uncert, noise_var=noise)


def random_training_set(rng, n=30, d=3):
    return rng.normal(size=(n, d)), rng.normal(size=n)


SPARSE_VARIANTS = [Variant.PLAIN, Variant.DR, Variant.HS, Variant.DR_HS]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
