"""scikit-learn front end for continued fraction regression."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from cfr.config import MAConfig
from cfr.data import Dataset
from cfr.memetic import run
from cfr.model import predict, render_formula, render_latex, used_variables


class ContinuedFractionRegressor(RegressorMixin, BaseEstimator):
    """Fit an analytic continued fraction with the memetic search.

    Parameters
    ----------
    depth : int, default 4
        Depth of the fraction (``2*depth + 1`` affine terms).
    delta : float, default 0.10
        Per-variable penalty in the adjusted MSE guiding function.
    generations : int, default 200
    mutation_rate : float, default 0.10
        Probability that an agent's current model is mutated each generation.
    nm_instances : int, default 4
        Independent simplex searches per local search (used when subsampling).
    nm_iterations : int, default 250
    nm_stagnation : int, default 10
    nm_tolerance : float, default 1e-3
    subsample_fraction : float, default 0.20
        Share of the training rows each simplex search sees on large datasets.
    subsample_threshold : int, default 200
        Subsampling is used only above this many training rows.
    root_reset_stagnation : int, default 5
        Generations without a new best before the root pocket is replaced.
    whitelist_p : float, default 1/3
        Probability that a variable may appear in a freshly generated model.
    random_state : int or None
        Seed for the run.

    Attributes
    ----------
    model_ : ContinuedFraction
    result_ : RunResult
    n_features_in_ : int
    """

    def __init__(self, depth=4, delta=0.10, generations=200, mutation_rate=0.10,
                 nm_instances=4, nm_iterations=250, nm_stagnation=10, nm_tolerance=1e-3,
                 subsample_fraction=0.20, subsample_threshold=200, root_reset_stagnation=5,
                 whitelist_p=1 / 3, random_state=None):
        self.depth = depth
        self.delta = delta
        self.generations = generations
        self.mutation_rate = mutation_rate
        self.nm_instances = nm_instances
        self.nm_iterations = nm_iterations
        self.nm_stagnation = nm_stagnation
        self.nm_tolerance = nm_tolerance
        self.subsample_fraction = subsample_fraction
        self.subsample_threshold = subsample_threshold
        self.root_reset_stagnation = root_reset_stagnation
        self.whitelist_p = whitelist_p
        self.random_state = random_state

    def _config(self) -> MAConfig:
        seed = self.random_state
        if isinstance(seed, np.random.RandomState):
            seed = int(seed.randint(2**31 - 1))
        return MAConfig(
            delta=self.delta, depth=self.depth, generations=self.generations,
            mutation_rate=self.mutation_rate, nm_instances=self.nm_instances,
            nm_iterations=self.nm_iterations, nm_stagnation=self.nm_stagnation,
            nm_tolerance=self.nm_tolerance, subsample_fraction=self.subsample_fraction,
            subsample_threshold=self.subsample_threshold,
            root_reset_stagnation=self.root_reset_stagnation, whitelist_p=self.whitelist_p,
            seed=seed,
        )

    def fit(self, X, y):
        names = None
        if hasattr(X, "columns"):
            names = [str(c) for c in X.columns]
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        if names is not None:
            self.feature_names_in_ = np.asarray(names, dtype=object)
        self.result_ = run(Dataset(X, y, names), None, self._config())
        self.model_ = self.result_.best
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return predict(self.model_, X)

    @property
    def n_vars_used_(self) -> int:
        check_is_fitted(self, "model_")
        return len(used_variables(self.model_))

    def formula(self, latex: bool = False, precision: int | None = 6) -> str:
        check_is_fitted(self, "model_")
        names = getattr(self, "feature_names_in_", None)
        names = None if names is None else list(names)
        if latex:
            return render_latex(self.model_, names, precision)
        return render_formula(self.model_, names, precision)
