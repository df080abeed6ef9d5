"""Versioned, human-readable model persistence.

Model files are self-describing JSON documents whose floats are written with
17 significant digits, so every double round-trips bit-exactly and the file
stays inspectable with ordinary tools.  Unknown future versions are rejected.
All writes go through a temp-file-plus-rename so readers never see a partial
document.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .data import Preprocessing
from .exact_gp import GpModel
from .exceptions import DataError
from .kernels import ArdParams, ProjParams
from .model import TrainedModel
from .sparse import SpgpParams, SpgpPrecompute, Variant

MODEL_FORMAT = "spgp-model"
MODEL_VERSION = 1


def format_float(x: float) -> str:
    """Decimal text for a double with enough digits to round-trip exactly."""
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return format(float(x), ".17g")


def _emit(obj, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        items = [_emit(v, indent + 1) for v in obj]
        flat = "[" + ", ".join(items) + "]"
        if len(flat) <= 100 and "\n" not in flat:
            return flat
        return "[\n" + ",\n".join(inner + it for it in items) + "\n" + pad + "]"
    if isinstance(obj, dict):
        items = [f"{inner}{json.dumps(str(k))}: {_emit(v, indent + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write_text(path, text: str) -> None:
    """Write a file via temp + rename so partially written output never lands."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _params_to_dict(params: SpgpParams) -> dict:
    d = {"noise_var": params.noise_var,
         "amp": params.amp,
         "pseudo_inputs": params.pseudo_inputs}
    if params.variant.uses_projection:
        d["projection"] = params.kernel.proj
    else:
        d["inv_sq_lengthscales"] = params.kernel.inv_sq_lengthscales
    if params.variant.uses_uncertainties:
        d["pseudo_uncert"] = params.pseudo_uncert
    return d


def save_model(model: TrainedModel, path) -> None:
    """Serialize a trained model (any variant) to a model file."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "variant": model.variant.value,
        "dim": model.dim,
        "feature_names": None if model.feature_names is None
        else list(model.feature_names),
        "target_name": model.target_name,
        "preprocessing": None if model.preprocessing is None
        else model.preprocessing.to_dict(),
        "metadata": model.metadata,
    }
    if model.variant is Variant.GP:
        gp = model.gp
        doc["gp"] = {"amp": gp.params.amp,
                     "inv_sq_lengthscales": gp.params.inv_sq_lengthscales,
                     "noise_var": gp.noise_var, "X": gp.X, "y": gp.y}
    else:
        doc["n_pseudo"] = model.params.n_pseudo
        doc["reduced_dim"] = (model.params.kernel.reduced_dim
                              if model.variant.uses_projection else None)
        doc["params"] = _params_to_dict(model.params)
        pre = model.precompute
        doc["prediction_factors"] = {"chol_pseudo": pre.L_b, "chol_reduced": pre.L_q,
                                     "mean_weights": pre.mean_weights,
                                     "jitter": pre.jitter_b}
    atomic_write_text(path, _emit(doc, 0) + "\n")


def load_model(path) -> TrainedModel:
    """Read a model file back; rejects other formats and newer versions."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a valid model file: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise DataError(f"{path}: not a {MODEL_FORMAT} document")
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise DataError(f"{path}: model file version {version!r} is not supported "
                        f"by this release (expected {MODEL_VERSION})")
    variant = Variant.from_name(doc["variant"])
    prep = (None if doc.get("preprocessing") is None
            else Preprocessing.from_dict(doc["preprocessing"]))
    names = doc.get("feature_names")
    common = dict(preprocessing=prep,
                  feature_names=None if names is None else tuple(names),
                  target_name=doc.get("target_name"),
                  metadata=doc.get("metadata") or {})
    if variant is Variant.GP:
        g = doc["gp"]
        kernel = ArdParams(amp=float(g["amp"]),
                           inv_sq_lengthscales=np.asarray(g["inv_sq_lengthscales"],
                                                          dtype=float))
        gp = GpModel(np.asarray(g["X"], dtype=float), np.asarray(g["y"], dtype=float),
                     kernel, float(g["noise_var"]))
        return TrainedModel(variant=variant, gp=gp, **common)
    p = doc["params"]
    if variant.uses_projection:
        kernel = ProjParams(amp=float(p["amp"]),
                            proj=np.asarray(p["projection"], dtype=float))
    else:
        kernel = ArdParams(amp=float(p["amp"]),
                           inv_sq_lengthscales=np.asarray(p["inv_sq_lengthscales"],
                                                          dtype=float))
    params = SpgpParams(
        variant=variant, kernel=kernel,
        pseudo_inputs=np.asarray(p["pseudo_inputs"], dtype=float),
        pseudo_uncert=(np.asarray(p["pseudo_uncert"], dtype=float)
                       if variant.uses_uncertainties else None),
        noise_var=float(p["noise_var"]))
    f = doc["prediction_factors"]
    pre = SpgpPrecompute(params=params,
                         L_b=np.asarray(f["chol_pseudo"], dtype=float),
                         L_q=np.asarray(f["chol_reduced"], dtype=float),
                         mean_weights=np.asarray(f["mean_weights"], dtype=float),
                         jitter_b=float(f["jitter"]))
    return TrainedModel(variant=variant, params=params, precompute=pre, **common)
