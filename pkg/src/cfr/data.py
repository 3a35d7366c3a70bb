"""Datasets, splits and the error measures used as guiding functions."""

from __future__ import annotations

import csv
import gzip
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "Metrics",
    "DatasetLoadError",
    "DegenerateTargetError",
    "load_dataset",
    "write_dataset",
    "train_test_split",
    "subsample",
    "mse",
    "nmse",
    "adjusted_mse",
    "compute_metrics",
]


class DatasetLoadError(ValueError):
    pass


class DegenerateTargetError(ValueError):
    """The target has zero variance, so NMSE is undefined."""


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple[str, ...] = field(default=None)
    source_name: str = ""

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        y = np.array(self.targets, dtype=float).ravel()
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if X.shape[0] < 1:
            raise ValueError("a dataset needs at least one row")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} targets")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("dataset contains non-finite values")
        names = self.feature_names
        if names is None:
            names = tuple(f"x{j}" for j in range(X.shape[1]))
        names = tuple(str(n) for n in names)
        if len(names) != X.shape[1]:
            raise ValueError(f"{X.shape[1]} feature columns but {len(names)} names")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def __len__(self):
        return self.n_samples

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.features[rows], self.targets[rows], self.feature_names, self.source_name)


@dataclass(frozen=True)
class Metrics:
    mse: float
    nmse: float
    adjusted_mse: float
    n_vars_used: int


def _open_text(path: Path):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="")
    return open(path, encoding="utf-8", newline="")


def load_dataset(path, target_column: str = "target", delimiter: str | None = None) -> Dataset:
    """Read a delimited text file with a header row (``.gz`` allowed).

    Every column other than ``target_column`` becomes a feature, in file order.
    With ``delimiter=None`` a tab is used when the header contains one, else a
    comma.
    """
    path = Path(path)
    try:
        fh = _open_text(path)
    except OSError as exc:
        raise DatasetLoadError(f"cannot open {path}: {exc}") from exc
    with fh:
        lines = fh.read().splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise DatasetLoadError(f"{path}: file is empty")
    if delimiter is None:
        delimiter = "\t" if "\t" in lines[0] else ","
    reader = csv.reader(lines, delimiter=delimiter)
    header = [h.strip() for h in next(reader)]
    if target_column not in header:
        raise DatasetLoadError(f"{path}: target column {target_column!r} not found in header {header}")
    t_idx = header.index(target_column)
    rows = []
    for line_no, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise DatasetLoadError(
                f"{path}: row {line_no} has {len(row)} fields, header has {len(header)}")
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            for col, v in zip(header, row):
                try:
                    float(v)
                except ValueError:
                    raise DatasetLoadError(
                        f"{path}: row {line_no}, column {col!r}: non-numeric value {v!r}") from None
            raise
    if not rows:
        raise DatasetLoadError(f"{path}: no data rows")
    data = np.array(rows)
    feat_idx = [j for j in range(len(header)) if j != t_idx]
    name = path.name.split(".")[0]
    try:
        return Dataset(data[:, feat_idx], data[:, t_idx], [header[j] for j in feat_idx], name)
    except ValueError as exc:
        raise DatasetLoadError(f"{path}: {exc}") from exc


def write_dataset(ds: Dataset, path, target_column: str = "target", delimiter: str = "\t"):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(list(ds.feature_names) + [target_column])
        for x, y in zip(ds.features, ds.targets):
            w.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def _ceil_count(fraction: float, n: int) -> int:
    # round first so 0.2 * 200 does not become 41
    return int(math.ceil(round(fraction * n, 9)))


def train_test_split(ds: Dataset, train_fraction: float = 0.75, rng=None) -> tuple[Dataset, Dataset]:
    """Random partition with ``ceil(train_fraction * n)`` training rows.

    The training side is capped at ``n - 1`` rows so the test side is never empty.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = ds.n_samples
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    rng = np.random.default_rng(rng)
    perm = rng.permutation(n)
    n_train = min(_ceil_count(train_fraction, n), n - 1)
    return ds.take(perm[:n_train]), ds.take(perm[n_train:])


def subsample(ds: Dataset, fraction: float = 0.20, rng=None) -> Dataset:
    """``ceil(fraction * n)`` rows drawn uniformly without replacement."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    rng = np.random.default_rng(rng)
    k = _ceil_count(fraction, ds.n_samples)
    return ds.take(rng.choice(ds.n_samples, size=k, replace=False))


def mse(y, yhat) -> float:
    """Mean squared error; any non-finite prediction makes it ``inf``."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.size} targets vs {yhat.size} predictions")
    if y.size == 0:
        raise ValueError("mse of an empty vector")
    if not np.isfinite(yhat).all():
        return math.inf
    value = float(np.mean((y - yhat) ** 2))
    return value if math.isfinite(value) else math.inf


def nmse(y, yhat) -> float:
    """MSE divided by the sample variance (``n - 1`` denominator) of ``y``."""
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.size} targets vs {yhat.size} predictions")
    n = y.size
    if n < 2:
        raise ValueError("nmse needs at least 2 samples")
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise DegenerateTargetError("target has zero variance")
    if not np.isfinite(yhat).all():
        return math.inf
    sse = float(np.sum((y - yhat) ** 2))
    # (sse/n) / (sst/(n-1)), arranged so a mean predictor gives exactly (n-1)/n
    return (sse / sst) * ((n - 1) / n)


def adjusted_mse(mse_value: float, n_vars_used: int, delta: float = 0.10) -> float:
    if mse_value < 0 or delta < 0:
        raise ValueError("mse and delta must be non-negative")
    return mse_value * (1.0 + delta * n_vars_used)


def compute_metrics(y, yhat, n_vars_used: int, delta: float = 0.10) -> Metrics:
    m = mse(y, yhat)
    try:
        nm = nmse(y, yhat)
    except DegenerateTargetError:
        nm = math.nan
    return Metrics(m, nm, adjusted_mse(m, n_vars_used, delta), n_vars_used)
