"""Dataset ingestion, preprocessing, splits, PCA baseline, bundled corpora.

CSV grammar: first non-comment line is the comma-separated header, every
later line holds decimal floats, no quoting, lines starting with '#' are
ignored.  The target column is named by header.

All preprocessing is recorded so it can be inverted exactly at prediction
time; no model ever reports statistics to the user in normalized units.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DataError
from .kernels import ArdParams
from .sparse import SpgpParams, Variant, sample_marginal

SCENARIOS = ("smooth-varying", "sampled")


@dataclass(frozen=True)
class Dataset:
    """Inputs, targets and column names; immutable after construction."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple
    target_name: str

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} input rows vs {y.shape[0]} targets")
        if len(self.feature_names) != X.shape[1]:
            raise ValueError("one feature name per input column required")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(X=self.X[idx], y=self.y[idx],
                       feature_names=self.feature_names, target_name=self.target_name)


@dataclass(frozen=True)
class Preprocessing:
    """Invertible record of input/target transforms applied before training.

    Targets are transformed as z = (log(y + log_offset) - y_shift) / y_scale
    when a log offset is present, otherwise z = (y - y_shift) / y_scale.
    Inputs are shifted and scaled per dimension.
    """

    x_shift: np.ndarray
    x_scale: np.ndarray
    y_shift: float = 0.0
    y_scale: float = 1.0
    log_offset: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "x_shift", np.asarray(self.x_shift, dtype=float))
        object.__setattr__(self, "x_scale", np.asarray(self.x_scale, dtype=float))

    @classmethod
    def identity(cls, dim: int) -> "Preprocessing":
        return cls(x_shift=np.zeros(dim), x_scale=np.ones(dim))

    def transform_inputs(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.x_shift.shape[0]:
            raise ValueError(f"inputs have dimension {X.shape[1]}, "
                             f"preprocessing expects {self.x_shift.shape[0]}")
        return (X - self.x_shift) / self.x_scale

    def invert_inputs(self, Xz) -> np.ndarray:
        return np.atleast_2d(np.asarray(Xz, dtype=float)) * self.x_scale + self.x_shift

    def transform_targets(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).ravel()
        if self.log_offset is not None:
            arg = y + self.log_offset
            if np.any(arg <= 0):
                bad = int(np.argmax(arg <= 0))
                raise DataError(f"log target transform undefined at row {bad}: "
                                f"y + offset = {arg[bad]!r} <= 0")
            y = np.log(arg)
        return (y - self.y_shift) / self.y_scale

    def invert_target_mean(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        raw = self.y_shift + self.y_scale * z
        if self.log_offset is not None:
            return np.exp(raw) - self.log_offset
        return raw

    def invert_predictions(self, mu_z, var_z):
        """Map a Gaussian latent prediction back to original target units.

        Returns (point, variance, lower95, upper95).  Under a log transform
        the point estimate is the predictive median and the interval maps the
        Gaussian one through the monotone inverse; the variance is that of
        the implied (shifted) log-normal.
        """
        mu_z = np.asarray(mu_z, dtype=float)
        var_z = np.asarray(var_z, dtype=float)
        sd_z = np.sqrt(var_z)
        if self.log_offset is None:
            point = self.y_shift + self.y_scale * mu_z
            var = (self.y_scale ** 2) * var_z
            sd = np.sqrt(var)
            return point, var, point - 2 * sd, point + 2 * sd
        mu_log = self.y_shift + self.y_scale * mu_z
        var_log = (self.y_scale ** 2) * var_z
        point = np.exp(mu_log) - self.log_offset
        var = (np.exp(var_log) - 1.0) * np.exp(2 * mu_log + var_log)
        lower = np.exp(mu_log - 2 * self.y_scale * sd_z) - self.log_offset
        upper = np.exp(mu_log + 2 * self.y_scale * sd_z) - self.log_offset
        return point, var, lower, upper

    def nlpd_adjustment(self, y_raw) -> np.ndarray:
        """Per-point additive change of variables for densities in raw units.

        The latent Gaussian density lives on the transformed scale; scoring
        raw targets needs the log-Jacobian of the target transform so that
        scores stay comparable in original units.
        """
        y_raw = np.asarray(y_raw, dtype=float).ravel()
        adj = np.full(y_raw.shape, np.log(self.y_scale))
        if self.log_offset is not None:
            arg = y_raw + self.log_offset
            if np.any(arg <= 0):
                bad = int(np.argmax(arg <= 0))
                raise DataError(f"log target transform undefined at row {bad}: "
                                f"y + offset = {arg[bad]!r} <= 0")
            adj = adj + np.log(arg)
        return adj

    def to_dict(self) -> dict:
        return {"x_shift": self.x_shift.tolist(), "x_scale": self.x_scale.tolist(),
                "y_shift": self.y_shift, "y_scale": self.y_scale,
                "log_offset": self.log_offset}

    @classmethod
    def from_dict(cls, d) -> "Preprocessing":
        return cls(x_shift=np.asarray(d["x_shift"], dtype=float),
                   x_scale=np.asarray(d["x_scale"], dtype=float),
                   y_shift=float(d["y_shift"]), y_scale=float(d["y_scale"]),
                   log_offset=None if d.get("log_offset") is None
                   else float(d["log_offset"]))


def read_table(path):
    """Parse a CSV file per the package grammar into (header, float table).

    Raises DataError with the offending 1-based line number for malformed or
    non-numeric rows and for header-only or empty files.
    """
    header = None
    rows = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if header is None:
                header = cells
                continue
            if len(cells) != len(header):
                raise DataError(f"{path}: line {lineno}: expected {len(header)} "
                                f"fields, got {len(cells)}")
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                bad = next(c for c in cells if not _is_float(c))
                raise DataError(f"{path}: line {lineno}: non-numeric cell {bad!r}") from None
            if not all(np.isfinite(vals)):
                raise DataError(f"{path}: line {lineno}: non-finite value")
            rows.append(vals)
    if header is None:
        raise DataError(f"{path}: empty file")
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=float)


def load_csv(path, target_column: str) -> Dataset:
    """Read a dataset, extracting the named target column."""
    header, table = read_table(path)
    if target_column not in header:
        raise DataError(f"{path}: no column named {target_column!r} in header {header}")
    t = header.index(target_column)
    keep = [i for i in range(len(header)) if i != t]
    return Dataset(X=table[:, keep], y=table[:, t],
                   feature_names=[header[i] for i in keep], target_name=target_column)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def normalize(ds: Dataset):
    """Shift/scale inputs and target to zero mean, unit variance.

    Constant columns keep scale 1 so the transform stays invertible.

    Returns (normalized Dataset, Preprocessing).
    """
    if ds.n < 2:
        raise ValueError("normalization needs at least two rows")
    x_shift = ds.X.mean(axis=0)
    x_scale = ds.X.std(axis=0)
    x_scale = np.where(x_scale > 0, x_scale, 1.0)
    y_shift = float(ds.y.mean())
    y_scale = float(ds.y.std())
    y_scale = y_scale if y_scale > 0 else 1.0
    prep = Preprocessing(x_shift=x_shift, x_scale=x_scale,
                         y_shift=y_shift, y_scale=y_scale)
    out = Dataset(X=prep.transform_inputs(ds.X), y=(ds.y - y_shift) / y_scale,
                  feature_names=ds.feature_names, target_name=ds.target_name)
    return out, prep


def log_transform_targets(ds: Dataset, offset: float) -> Dataset:
    """Replace targets by log(y + offset); every argument must be positive."""
    arg = ds.y + offset
    if np.any(arg <= 0):
        bad = int(np.argmax(arg <= 0))
        raise ValueError(f"log(y + {offset}) undefined at row {bad}: "
                         f"y = {ds.y[bad]!r}")
    return Dataset(X=ds.X, y=np.log(arg), feature_names=ds.feature_names,
                   target_name=ds.target_name)


def preprocess(ds: Dataset, log_offset: float | None = None,
               do_normalize: bool = True):
    """Standard pipeline: optional log target transform, then normalization.

    Returns (transformed Dataset, Preprocessing record capturing both steps).
    """
    work = ds
    if log_offset is not None:
        work = log_transform_targets(work, log_offset)
    if do_normalize:
        work, prep = normalize(work)
    else:
        prep = Preprocessing.identity(ds.dim)
    return work, replace(prep, log_offset=log_offset)


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/validation/test partition of row indices.

    Exactly one of fractions / counts / indices must be given; fractions and
    counts are resolved with a seeded shuffle, explicit indices are validated
    for disjoint cover.
    """

    fractions: tuple | None = None
    counts: tuple | None = None
    indices: tuple | None = None
    seed: int = 0

    def resolve(self, n: int):
        given = [x is not None for x in (self.fractions, self.counts, self.indices)]
        if sum(given) != 1:
            raise ValueError("give exactly one of fractions, counts or indices")
        if self.indices is not None:
            parts = [np.asarray(ix, dtype=int) for ix in self.indices]
            flat = np.concatenate(parts) if parts else np.array([], dtype=int)
            if len(np.unique(flat)) != flat.shape[0]:
                raise ValueError("split parts overlap")
            if not np.array_equal(np.sort(flat), np.arange(n)):
                raise ValueError("split parts must cover all row indices exactly")
            return tuple(parts)
        if self.counts is not None:
            counts = [int(c) for c in self.counts]
            if any(c < 0 for c in counts) or sum(counts) != n:
                raise ValueError(f"counts {counts} must be >= 0 and sum to {n}")
        else:
            fr = [float(f) for f in self.fractions]
            if any(f < 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
                raise ValueError(f"fractions {fr} must be >= 0 and sum to 1")
            counts = [int(round(f * n)) for f in fr]
            counts[-1] = n - sum(counts[:-1])
            if counts[-1] < 0:
                raise ValueError(f"fractions {fr} leave no rows for the last part")
        perm = np.random.default_rng(self.seed).permutation(n)
        parts, start = [], 0
        for c in counts:
            parts.append(np.sort(perm[start:start + c]))
            start += c
        return tuple(parts)


def principal_directions(X, n_components: int) -> np.ndarray:
    """Top principal directions of a point cloud, as orthonormal rows.

    Rows are ordered by descending eigenvalue of the sample covariance; each
    row's sign is fixed so its largest-magnitude entry is positive.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    if not 1 <= n_components <= d:
        raise ValueError(f"need 1 <= components <= {d}, got {n_components}")
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / max(n - 1, 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:n_components]
    P = eigvecs[:, order].T
    for row in P:
        lead = np.argmax(np.abs(row))
        if row[lead] < 0:
            row *= -1.0
    return P


def pca_project(ds: Dataset, n_components: int):
    """Unsupervised linear projection baseline: top principal directions.

    The projection is computed from the inputs alone.  Returns the (G, D)
    projection matrix and the projected Dataset.
    """
    P = principal_directions(ds.X, n_components)
    projected = Dataset(X=ds.X @ P.T, y=ds.y,
                        feature_names=[f"pc{i + 1}" for i in range(n_components)],
                        target_name=ds.target_name)
    return P, projected


# Fixed generating model for the "sampled" scenario: six pseudo-inputs with
# three uncertainty levels, so draws show distinct noise regimes.
_SAMPLED_PSEUDO = np.array([[-2.5], [-1.5], [-0.5], [0.5], [1.5], [2.5]])
_SAMPLED_UNCERT = np.array([0.0, 0.0, 0.5, 0.5, 4.0, 4.0])
_SAMPLED_PARAMS = dict(amp=1.0, inv_sq_lengthscale=4.0, noise_var=0.01)


def sampled_scenario_params() -> SpgpParams:
    """The fixed generating parameters behind scenario "sampled"."""
    kernel = ArdParams(amp=_SAMPLED_PARAMS["amp"],
                       inv_sq_lengthscales=np.array([_SAMPLED_PARAMS["inv_sq_lengthscale"]]))
    return SpgpParams(variant=Variant.HS, kernel=kernel,
                      pseudo_inputs=_SAMPLED_PSEUDO,
                      pseudo_uncert=_SAMPLED_UNCERT,
                      noise_var=_SAMPLED_PARAMS["noise_var"])


def generate_heteroscedastic(n: int, seed, scenario: str = "smooth-varying",
                             noise_scale: float = 1.0) -> Dataset:
    """Synthetic 1-D regression data with input-dependent noise.

    scenario "smooth-varying": y = sin(x) plus Gaussian noise whose standard
    deviation ramps linearly from 0.1 to 0.8 across x in [-3, 3], so the
    left side is signal-dominated and the right side noise-dominated;
    ``noise_scale`` multiplies the whole noise profile (0 puts y exactly on
    the underlying function).
    scenario "sampled": targets drawn from the fixed sparse-model marginal of
    :func:`sampled_scenario_params` on an even grid.  Both are deterministic
    under the seed.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if scenario == "smooth-varying":
        rng = np.random.default_rng(seed)
        x = np.sort(rng.uniform(-3.0, 3.0, size=n))
        noise_sd = noise_scale * (0.1 + 0.7 * (x + 3.0) / 6.0)
        y = np.sin(x) + noise_sd * rng.standard_normal(n)
        return Dataset(X=x[:, None], y=y, feature_names=("x",), target_name="y")
    if scenario == "sampled":
        x = np.linspace(-3.0, 3.0, n) if n else np.empty(0)
        X = x[:, None]
        y = sample_marginal(sampled_scenario_params(), X, seed) if n else np.empty(0)
        return Dataset(X=X, y=y, feature_names=("x",), target_name="y")
    raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")


def load_motorcycle() -> Dataset:
    """The bundled 133-point motorcycle-impact corpus (1-D, non-stationary)."""
    path = importlib.resources.files("spgp") / "datasets" / "motorcycle.csv"
    return load_csv(str(path), target_column="accel")
