"""Continued fraction regression: memetic search over analytic continued fractions."""

from cfr.config import MAConfig, NMConfig
from cfr.data import Dataset, load_dataset, mse, nmse, adjusted_mse, train_test_split
from cfr.estimator import ContinuedFractionRegressor
from cfr.memetic import RunResult, run
from cfr.model import (
    ContinuedFraction,
    deserialize,
    evaluate,
    predict,
    render_formula,
    render_latex,
    serialize,
)

__version__ = "0.1.0"

__all__ = [
    "MAConfig",
    "NMConfig",
    "Dataset",
    "load_dataset",
    "mse",
    "nmse",
    "adjusted_mse",
    "train_test_split",
    "ContinuedFractionRegressor",
    "RunResult",
    "run",
    "ContinuedFraction",
    "deserialize",
    "evaluate",
    "predict",
    "render_formula",
    "render_latex",
    "serialize",
]
