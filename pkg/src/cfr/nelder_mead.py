"""Downhill simplex search and the coefficient-level local search built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cfr._kernels import _simplex_search, packed_adjusted_mse
from cfr.config import MAConfig, NMConfig
from cfr.data import Dataset, adjusted_mse, mse, subsample
from cfr.model import ContinuedFraction, predict, used_variables

__all__ = [
    "NMConfig",
    "ParameterPacking",
    "pack",
    "unpack",
    "minimize",
    "local_search",
    "guiding_value",
]


@dataclass(frozen=True)
class ParameterPacking:
    """Where each entry of a packed parameter vector lives in the model.

    ``var_index[s]`` is the variable of slot ``s`` or -1 for a term constant.
    Slots run term by term; inside a term the active coefficients come first
    in ascending variable order, then the constant.
    """

    term_index: np.ndarray
    var_index: np.ndarray
    term_ptr: np.ndarray

    @property
    def slots(self) -> list[tuple[int, str, int | None]]:
        return [(int(t), "constant", None) if v < 0 else (int(t), "coefficient", int(v))
                for t, v in zip(self.term_index, self.var_index)]

    def __len__(self):
        return self.term_index.size


def pack(cf: ContinuedFraction) -> tuple[np.ndarray, ParameterPacking]:
    terms, variables, values = [], [], []
    ptr = [0]
    for t in range(cf.n_terms):
        for j in np.flatnonzero(cf.active[t]):
            terms.append(t)
            variables.append(j)
            values.append(cf.coefficients[t, j])
        terms.append(t)
        variables.append(-1)
        values.append(cf.constants[t])
        ptr.append(len(values))
    packing = ParameterPacking(np.array(terms, dtype=np.int64), np.array(variables, dtype=np.int64),
                               np.array(ptr, dtype=np.int64))
    return np.array(values, dtype=float), packing


def unpack(cf: ContinuedFraction, vector, packing: ParameterPacking) -> ContinuedFraction:
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (len(packing),):
        raise ValueError(f"expected {len(packing)} parameters, got {vector.shape}")
    coefficients, constants, active, whitelist = cf.mutable_arrays()
    is_const = packing.var_index < 0
    constants[packing.term_index[is_const]] = vector[is_const]
    coefficients[packing.term_index[~is_const], packing.var_index[~is_const]] = vector[~is_const]
    return ContinuedFraction(coefficients, constants, active, whitelist, cf.seed)


def minimize(objective, x0, config: NMConfig | None = None) -> tuple[np.ndarray, float, int]:
    """Nelder-Mead from the simplex ``{x0} + {x0 + e_j}``.

    Stops when best and worst vertex values differ by less than
    ``config.tolerance``, after ``config.max_iterations`` iterations, or after
    ``config.stagnation_limit`` iterations without a strict improvement of the
    best value.  NaN objective values count as ``inf``.

    Returns ``(x_best, f_best, iterations)``.
    """
    config = config or NMConfig()
    x0 = np.array(x0, dtype=float).ravel()
    if x0.size == 0:
        raise ValueError("x0 must have at least one component")

    def wrapped(x):
        return float(objective(x.copy()))

    x, f, it = _simplex_search.py_func(
        wrapped, x0, (), config.tolerance, config.max_iterations, config.stagnation_limit,
        config.reflection, config.expansion, config.contraction, config.shrink)
    return x, float(f), int(it)


def _minimize_packed(x0, packing, X, y, delta, n_vars, config: NMConfig):
    x, f, it = _simplex_search(
        packed_adjusted_mse, x0, (packing.var_index, packing.term_ptr, X, y, float(delta), n_vars),
        config.tolerance, config.max_iterations, config.stagnation_limit,
        config.reflection, config.expansion, config.contraction, config.shrink)
    return x, float(f), int(it)


def guiding_value(cf: ContinuedFraction, X, y, delta: float = 0.10) -> float:
    """Adjusted MSE of ``cf`` on ``(X, y)``; ``inf`` if any prediction is non-finite."""
    return adjusted_mse(mse(y, predict(cf, X)), len(used_variables(cf)), delta)


def local_search(cf: ContinuedFraction, train: Dataset, rng, config: MAConfig | None = None,
                 score: float | None = None) -> tuple[ContinuedFraction, float]:
    """Optimize the active coefficients and constants of ``cf``.

    Runs ``config.nm_instances`` simplex searches from the packed coefficients.
    When the training set has more than ``config.subsample_threshold`` rows each
    search scores candidates on its own fresh subsample; otherwise all use the
    full set.  Candidates are re-scored on the full training set and the best
    one is returned together with its guiding value, unless none beats the
    input.  ``score`` may carry the input's already-known guiding value.
    """
    config = config or MAConfig()
    rng = np.random.default_rng(rng)
    X = np.ascontiguousarray(train.features)
    y = np.ascontiguousarray(train.targets)
    if score is None:
        score = guiding_value(cf, X, y, config.delta)
    best, best_score = cf, score

    x0, packing = pack(cf)
    use_batches = train.n_samples > config.subsample_threshold
    # without subsampling every search is identical, so one run suffices
    n_searches = config.nm_instances if use_batches else 1
    for _ in range(n_searches):
        if use_batches:
            batch = subsample(train, config.subsample_fraction, rng)
            Xs = np.ascontiguousarray(batch.features)
            ys = np.ascontiguousarray(batch.targets)
        else:
            Xs, ys = X, y
        x, _, _ = _minimize_packed(x0, packing, Xs, ys, config.delta, cf.n_vars, config.nm)
        candidate = unpack(cf, x, packing)
        cand_score = guiding_value(candidate, X, y, config.delta)
        if cand_score < best_score:
            best, best_score = candidate, cand_score
    if math.isnan(best_score):
        best_score = math.inf
    return best, best_score
