"""Performance profiles: for each algorithm, the fraction of datasets on which
its error is within ``x`` percent of the best error observed on that dataset."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["ProfileCurve", "ProfileError", "read_error_table", "performance_profiles",
           "relative_errors", "write_profiles"]


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class ProfileCurve:
    algorithm: str
    points: tuple[tuple[float, float], ...]

    def __call__(self, x: float) -> float:
        """Step-function value at ``x``."""
        y = 0.0
        for px, py in self.points:
            if px <= x:
                y = py
            else:
                break
        return y


def read_error_table(path, delimiter: str | None = None):
    """Read ``algorithm x dataset`` errors.

    The first column holds algorithm names and the header holds dataset names.
    Empty, ``NA`` or ``nan`` cells are reported as missing.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ProfileError(f"{path}: need a header and at least one algorithm row")
    if delimiter is None:
        delimiter = "\t" if "\t" in lines[0] else ","
    rows = list(csv.reader(lines, delimiter=delimiter))
    datasets = [h.strip() for h in rows[0][1:]]
    algorithms, table = [], []
    for row in rows[1:]:
        name = row[0].strip()
        cells = row[1:] + [""] * (len(datasets) - len(row) + 1)
        values = []
        for ds, cell in zip(datasets, cells):
            cell = cell.strip()
            try:
                v = float(cell)
            except ValueError:
                v = math.nan
            if cell.lower() in ("", "na", "nan") or math.isnan(v):
                raise ProfileError(f"missing value for algorithm {name!r}, dataset {ds!r}")
            values.append(v)
        algorithms.append(name)
        table.append(values)
    return algorithms, datasets, np.array(table)


def relative_errors(errors, datasets=None) -> np.ndarray:
    """Percent excess over the per-dataset best: ``100 * (err - best) / best``."""
    errors = np.asarray(errors, dtype=float)
    if errors.ndim != 2:
        raise ProfileError("error table must be 2-d (algorithms x datasets)")
    best = errors.min(axis=0)
    bad = np.flatnonzero(best <= 0)
    if bad.size:
        name = datasets[bad[0]] if datasets is not None else str(bad[0])
        raise ProfileError(f"best error on dataset {name!r} is not positive")
    return 100.0 * (errors - best) / best


def performance_profiles(algorithms, errors, datasets=None) -> list[ProfileCurve]:
    """One step curve per algorithm, starting at ``x = 0``."""
    errors = np.asarray(errors, dtype=float)
    if np.isnan(errors).any():
        i, j = np.argwhere(np.isnan(errors))[0]
        ds = datasets[j] if datasets is not None else str(j)
        raise ProfileError(f"missing value for algorithm {algorithms[i]!r}, dataset {ds!r}")
    tau = relative_errors(errors, datasets)
    n = tau.shape[1]
    curves = []
    for name, row in zip(algorithms, tau):
        xs = np.unique(row)
        points = [(0.0, float(np.count_nonzero(row <= 0.0)) / n)]
        for x in xs:
            if x > 0.0:
                points.append((float(x), float(np.count_nonzero(row <= x)) / n))
        curves.append(ProfileCurve(name, tuple(points)))
    return curves


def write_profiles(curves, path, delimiter: str = "\t"):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["algorithm", "x", "y"])
        for c in curves:
            for x, y in c.points:
                w.writerow([c.algorithm, repr(x), repr(y)])
