import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from cfr.estimator import ContinuedFractionRegressor
from cfr.model import serialize


@pytest.fixture
def xy():
    x = np.linspace(-1, 1, 80)
    return x.reshape(-1, 1), 2.0 * x + 1.0


def test_get_set_params():
    est = ContinuedFractionRegressor(depth=2, random_state=3)
    params = est.get_params()
    assert params["depth"] == 2 and params["random_state"] == 3 and params["delta"] == 0.10
    est.set_params(generations=5)
    assert clone(est).generations == 5


def test_fit_predict(xy):
    X, y = xy
    est = ContinuedFractionRegressor(generations=40, random_state=0).fit(X, y)
    assert est.n_features_in_ == 1
    pred = est.predict(X)
    assert pred.shape == (80,)
    assert est.score(X, y) > 0.99
    assert est.n_vars_used_ == 1
    assert "x0" in est.formula()


def test_deterministic(xy):
    X, y = xy
    a = ContinuedFractionRegressor(generations=5, random_state=7).fit(X, y)
    b = ContinuedFractionRegressor(generations=5, random_state=7).fit(X, y)
    assert serialize(a.model_) == serialize(b.model_)


def test_not_fitted(xy):
    with pytest.raises(NotFittedError):
        ContinuedFractionRegressor().predict(xy[0])


def test_validation(xy):
    X, y = xy
    est = ContinuedFractionRegressor(generations=0, random_state=0)
    with pytest.raises(ValueError):
        est.fit(X, y[:-1])
    with pytest.raises(ValueError):
        est.fit(np.where(X > 0.5, np.nan, X), y)
    est.fit(X, y)
    with pytest.raises(ValueError):
        est.predict(np.zeros((3, 2)))


def test_bad_param(xy):
    with pytest.raises(ValueError):
        ContinuedFractionRegressor(mutation_rate=2.0).fit(*xy)
