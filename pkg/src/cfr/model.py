"""Analytic continued-fraction models.

A model of depth ``d`` is

    f(x) = g_0(x) + h_0(x) / (g_1(x) + h_1(x) / (... + h_{d-1}(x) / g_d(x)))

where every ``g_i`` and ``h_i`` is an affine function of the inputs.  The
``2*d + 1`` affine terms are stored in a flat array, ``g_i`` at index ``2*i``
and ``h_i`` at index ``2*i + 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cfr._kernels import POLE_EPS, predict_rows

__all__ = [
    "LinearTerm",
    "ContinuedFraction",
    "EvalOutcome",
    "ModelParseError",
    "linear_eval",
    "evaluate",
    "predict",
    "convergent",
    "used_variables",
    "random_fraction",
    "set_variable_active",
    "serialize",
    "deserialize",
    "render_formula",
    "render_latex",
]

FORMAT_NAME = "cfr-model"
FORMAT_VERSION = 1


class ModelParseError(ValueError):
    """Raised for malformed model documents; ``position`` is a character offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        where = f" (at position {position})" if position is not None else ""
        super().__init__(message + where)


@dataclass(frozen=True)
class LinearTerm:
    """One affine function ``sum_j active[j] * coefficients[j] * x[j] + constant``.

    Inactive coefficients may still hold a value (it is remembered for when the
    variable is switched back on) but never contribute.
    """

    coefficients: np.ndarray
    constant: float
    active: np.ndarray

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=float)
        active = np.array(self.active, dtype=bool)
        if coefficients.ndim != 1 or coefficients.shape != active.shape:
            raise ValueError("coefficients and active must be 1-d arrays of equal length")
        coefficients.setflags(write=False)
        active.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "active", active)
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def effective(self) -> np.ndarray:
        return np.where(self.active, self.coefficients, 0.0)


@dataclass(frozen=True)
class EvalOutcome:
    value: float
    finite: bool


class ContinuedFraction:
    """Immutable continued-fraction model.

    Parameters
    ----------
    coefficients : array of shape (2*depth + 1, n_vars)
        Stored coefficient of every variable in every term.
    constants : array of shape (2*depth + 1,)
        The constant of every term.
    active : bool array of shape (2*depth + 1, n_vars)
        Which stored coefficients take part in evaluation.
    whitelist : bool array of shape (n_vars,)
        Variables the model may use.  Any variable active in a term must be
        whitelisted.
    seed : int, optional
        Seed of the run that created the model; carried through serialization.
    """

    __slots__ = ("coefficients", "constants", "active", "whitelist", "seed")

    def __init__(self, coefficients, constants, active, whitelist, seed=None):
        coefficients = np.array(coefficients, dtype=float)
        constants = np.array(constants, dtype=float)
        active = np.array(active, dtype=bool)
        whitelist = np.array(whitelist, dtype=bool)
        if coefficients.ndim != 2:
            raise ValueError("coefficients must be a 2-d array (terms x variables)")
        n_terms, n_vars = coefficients.shape
        if n_vars < 1:
            raise ValueError("a model needs at least one input variable")
        if n_terms % 2 != 1:
            raise ValueError(f"number of terms must be 2*depth + 1, got {n_terms}")
        if constants.shape != (n_terms,):
            raise ValueError(f"constants must have shape ({n_terms},), got {constants.shape}")
        if active.shape != coefficients.shape:
            raise ValueError("active mask must match the coefficient array shape")
        if whitelist.shape != (n_vars,):
            raise ValueError(f"whitelist must have shape ({n_vars},), got {whitelist.shape}")
        stray = active.any(axis=0) & ~whitelist
        if stray.any():
            raise ValueError(
                f"variables {np.flatnonzero(stray).tolist()} are active but not whitelisted"
            )
        for arr in (coefficients, constants, active, whitelist):
            arr.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "constants", constants)
        object.__setattr__(self, "active", active)
        object.__setattr__(self, "whitelist", whitelist)
        object.__setattr__(self, "seed", None if seed is None else int(seed))

    def __setattr__(self, name, value):
        raise AttributeError("ContinuedFraction is immutable; use replace()")

    @classmethod
    def from_terms(cls, terms: Sequence[LinearTerm], whitelist=None, seed=None):
        """Build a model from ``2*depth + 1`` terms (g_0, h_0, g_1, ..., g_depth)."""
        if not terms:
            raise ValueError("at least one term is required")
        coefficients = np.stack([t.coefficients for t in terms])
        active = np.stack([t.active for t in terms])
        constants = np.array([t.constant for t in terms])
        if whitelist is None:
            whitelist = active.any(axis=0)
        return cls(coefficients, constants, active, whitelist, seed)

    @classmethod
    def constant(cls, value: float, n_vars: int = 1, depth: int = 0):
        """A model that evaluates to ``value`` everywhere (g_0 = value, g_i = 1, h_i = 0)."""
        n_terms = 2 * depth + 1
        constants = np.zeros(n_terms)
        constants[0::2] = 1.0
        constants[0] = value
        return cls(np.zeros((n_terms, n_vars)), constants,
                   np.zeros((n_terms, n_vars), dtype=bool), np.zeros(n_vars, dtype=bool))

    @property
    def n_vars(self) -> int:
        return self.coefficients.shape[1]

    @property
    def depth(self) -> int:
        return (self.coefficients.shape[0] - 1) // 2

    @property
    def n_terms(self) -> int:
        return self.coefficients.shape[0]

    @property
    def terms(self) -> list[LinearTerm]:
        return [self.term(i) for i in range(self.n_terms)]

    def term(self, i: int) -> LinearTerm:
        return LinearTerm(self.coefficients[i], self.constants[i], self.active[i])

    @property
    def effective_coefficients(self) -> np.ndarray:
        return np.where(self.active, self.coefficients, 0.0)

    def replace(self, **changes) -> "ContinuedFraction":
        """Copy with some of the arrays (or the seed) swapped out."""
        fields = {name: getattr(self, name) for name in self.__slots__}
        fields.update(changes)
        return ContinuedFraction(**fields)

    def mutable_arrays(self):
        """Writable copies of ``(coefficients, constants, active, whitelist)``."""
        return (self.coefficients.copy(), self.constants.copy(),
                self.active.copy(), self.whitelist.copy())

    def __eq__(self, other):
        if not isinstance(other, ContinuedFraction):
            return NotImplemented
        return (self.seed == other.seed
                and self.coefficients.shape == other.coefficients.shape
                and np.array_equal(self.coefficients, other.coefficients)
                and np.array_equal(self.constants, other.constants)
                and np.array_equal(self.active, other.active)
                and np.array_equal(self.whitelist, other.whitelist))

    __hash__ = None

    def __repr__(self):
        return (f"ContinuedFraction(n_vars={self.n_vars}, depth={self.depth}, "
                f"used={sorted(used_variables(self))})")


def linear_eval(term: LinearTerm, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != term.coefficients.shape:
        raise ValueError(
            f"input has {x.size} values but the term has {term.coefficients.size} coefficients"
        )
    return float(np.dot(term.effective, x) + term.constant)


def evaluate(cf: ContinuedFraction, x) -> EvalOutcome:
    """Evaluate ``cf`` at one point, bottom-up.

    A denominator smaller than 1e-12 in magnitude, or any non-finite
    intermediate value, gives ``EvalOutcome(nan, False)``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (cf.n_vars,):
        raise ValueError(f"expected {cf.n_vars} inputs, got shape {x.shape}")
    coef = cf.effective_coefficients
    values = coef @ x + cf.constants
    r = values[2 * cf.depth]
    for i in range(cf.depth - 1, -1, -1):
        if not math.isfinite(r) or abs(r) < POLE_EPS:
            return EvalOutcome(math.nan, False)
        r = values[2 * i] + values[2 * i + 1] / r
    if not math.isfinite(r):
        return EvalOutcome(math.nan, False)
    return EvalOutcome(float(r), True)


def predict(cf: ContinuedFraction, X) -> np.ndarray:
    """Evaluate ``cf`` on every row of ``X``; poles give NaN."""
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != cf.n_vars:
        raise ValueError(f"expected an (n, {cf.n_vars}) matrix, got shape {X.shape}")
    return predict_rows(np.ascontiguousarray(cf.effective_coefficients),
                        np.ascontiguousarray(cf.constants), X)


def convergent(cf: ContinuedFraction, k: int) -> ContinuedFraction:
    """Truncate to depth ``k``: keeps g_0..g_k and h_0..h_{k-1}."""
    if k < 0 or k > cf.depth:
        raise ValueError(f"convergent order must be in [0, {cf.depth}], got {k}")
    keep = 2 * k + 1
    return cf.replace(coefficients=cf.coefficients[:keep], constants=cf.constants[:keep],
                      active=cf.active[:keep])


def used_variables(cf: ContinuedFraction) -> set[int]:
    used = (cf.active & (cf.coefficients != 0.0)).any(axis=0)
    return set(np.flatnonzero(used).tolist())


def random_fraction(n_vars: int, depth: int, rng: np.random.Generator,
                    coeff_lo: float = -3.0, coeff_hi: float = 3.0,
                    whitelist_p: float = 1 / 3, seed=None) -> ContinuedFraction:
    """Random model: each variable is whitelisted with probability ``whitelist_p``
    and then active in every term; coefficients and constants are uniform on
    ``[coeff_lo, coeff_hi]``."""
    if n_vars < 1:
        raise ValueError("n_vars must be at least 1")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    n_terms = 2 * depth + 1
    whitelist = rng.random(n_vars) < whitelist_p
    coefficients = rng.uniform(coeff_lo, coeff_hi, size=(n_terms, n_vars))
    constants = rng.uniform(coeff_lo, coeff_hi, size=n_terms)
    coefficients[:, ~whitelist] = 0.0
    active = np.broadcast_to(whitelist, (n_terms, n_vars)).copy()
    return ContinuedFraction(coefficients, constants, active, whitelist, seed)


def set_variable_active(cf: ContinuedFraction, var: int, on: bool) -> ContinuedFraction:
    """Switch variable ``var`` on or off in every term, keeping stored coefficients."""
    coefficients, constants, active, whitelist = cf.mutable_arrays()
    active[:, var] = on
    whitelist[var] = on
    return ContinuedFraction(coefficients, constants, active, whitelist, cf.seed)


# -- serialization -----------------------------------------------------------

def serialize(cf: ContinuedFraction, feature_names: Sequence[str] | None = None) -> str:
    """Model document: JSON with one record per term.

    Floats are written with ``repr`` precision, so a round trip is exact.
    """
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "n_vars": cf.n_vars,
        "depth": cf.depth,
        "seed": cf.seed,
        "whitelist": cf.whitelist.tolist(),
        "terms": [
            {
                "role": ("g" if i % 2 == 0 else "h") + str(i // 2),
                "coefficients": cf.coefficients[i].tolist(),
                "constant": float(cf.constants[i]),
                "active": cf.active[i].tolist(),
            }
            for i in range(cf.n_terms)
        ],
    }
    if feature_names is not None:
        doc["feature_names"] = list(feature_names)
    return json.dumps(doc, indent=1) + "\n"


def _require(doc, key, kind, text):
    if key not in doc:
        raise ModelParseError(f"missing field {key!r}", _locate(text, key))
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ModelParseError(f"field {key!r} has the wrong type", _locate(text, key))
    return value


def _locate(text, key):
    # a missing key is reported at the start of the document
    return max(text.find(f'"{key}"'), 0)


def deserialize(text: str, return_names: bool = False):
    """Parse a model document.  With ``return_names`` also return the stored
    feature names (or None)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"invalid model document: {exc.msg}", exc.pos) from exc
    if not isinstance(doc, dict):
        raise ModelParseError("model document must be a JSON object", 0)
    if doc.get("format") != FORMAT_NAME:
        raise ModelParseError(f"not a {FORMAT_NAME} document", _locate(text, "format"))
    n_vars = _require(doc, "n_vars", int, text)
    depth = _require(doc, "depth", int, text)
    whitelist = _require(doc, "whitelist", list, text)
    terms = _require(doc, "terms", list, text)
    seed = doc.get("seed")
    if len(terms) != 2 * depth + 1:
        raise ModelParseError(f"expected {2 * depth + 1} terms for depth {depth}, found {len(terms)}",
                              _locate(text, "terms"))
    coefficients, constants, active = [], [], []
    for i, term in enumerate(terms):
        try:
            c = [float(v) for v in term["coefficients"]]
            a = [bool(v) for v in term["active"]]
            k = float(term["constant"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelParseError(f"term {i} is malformed: {exc}", _locate(text, "terms")) from exc
        if len(c) != n_vars or len(a) != n_vars:
            raise ModelParseError(f"term {i} does not have {n_vars} coefficients",
                                  _locate(text, "terms"))
        coefficients.append(c)
        constants.append(k)
        active.append(a)
    try:
        cf = ContinuedFraction(np.array(coefficients).reshape(len(terms), n_vars), constants,
                               np.array(active, dtype=bool).reshape(len(terms), n_vars),
                               whitelist, seed)
    except ValueError as exc:
        raise ModelParseError(str(exc), 0) from exc
    if return_names:
        return cf, doc.get("feature_names")
    return cf


# -- rendering ---------------------------------------------------------------

def _fmt(v: float, precision: int | None) -> str:
    if precision is None:
        return repr(float(v))
    return f"{v:.{precision}g}"


def _affine_parts(coefs, active, constant, names, precision, mul):
    parts = []
    for j, (c, on) in enumerate(zip(coefs, active)):
        if on and c != 0.0:
            if c == 1.0:
                parts.append((1, names[j]))
            elif c == -1.0:
                parts.append((-1, names[j]))
            else:
                parts.append((1 if c > 0 else -1, f"{_fmt(abs(c), precision)}{mul}{names[j]}"))
    if constant != 0.0 or not parts:
        parts.append((1 if constant >= 0 else -1, _fmt(abs(constant), precision)))
    out = ("-" if parts[0][0] < 0 else "") + parts[0][1]
    for sign, text in parts[1:]:
        out += (" - " if sign < 0 else " + ") + text
    return out


def _is_zero(cf, i):
    return cf.constants[i] == 0.0 and not (cf.active[i] & (cf.coefficients[i] != 0.0)).any()


def _names(cf, feature_names):
    if feature_names is None:
        return [f"x{j}" for j in range(cf.n_vars)]
    if len(feature_names) != cf.n_vars:
        raise ValueError(f"expected {cf.n_vars} feature names, got {len(feature_names)}")
    return list(feature_names)


def render_formula(cf: ContinuedFraction, feature_names=None, precision: int | None = None) -> str:
    """Plain-text nested fraction, e.g. ``2.1*w + (w + 1.01)/(x + 1.3/(3.9*x))``.

    Only active, nonzero coefficients are shown.  A numerator that is
    identically zero ends the fraction at that level.
    """
    names = _names(cf, feature_names)

    def term(i):
        return _affine_parts(cf.coefficients[i], cf.active[i], cf.constants[i], names, precision, "*")

    def level(k):
        g = term(2 * k)
        if k == cf.depth or _is_zero(cf, 2 * k + 1):
            return g
        frac = f"({term(2 * k + 1)})/({level(k + 1)})"
        if _is_zero(cf, 2 * k):
            return frac
        return f"{g} + {frac}"

    return level(0)


def render_latex(cf: ContinuedFraction, feature_names=None, precision: int | None = 6) -> str:
    names = _names(cf, feature_names)

    def term(i):
        return _affine_parts(cf.coefficients[i], cf.active[i], cf.constants[i], names, precision, " ")

    def level(k):
        g = term(2 * k)
        if k == cf.depth or _is_zero(cf, 2 * k + 1):
            return g
        frac = r"\cfrac{" + term(2 * k + 1) + "}{" + level(k + 1) + "}"
        if _is_zero(cf, 2 * k):
            return frac
        return f"{g} + {frac}"

    return level(0)
