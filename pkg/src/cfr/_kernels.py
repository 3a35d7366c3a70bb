"""Compiled inner loops: fraction evaluation, packed objectives and the simplex search.

Every function here is plain numerical code so that ``numba`` can compile it;
``_simplex_search.py_func`` is the same routine running as ordinary Python,
which is what lets arbitrary Python objectives share the implementation.
"""

import numpy as np
from numba import njit

POLE_EPS = 1e-12


@njit(cache=True)
def predict_rows(coef, const, X):
    """Evaluate a fraction with effective coefficients ``coef`` (terms x vars).

    Rows that hit a pole (a denominator with magnitude below ``POLE_EPS``) or
    produce a non-finite value come back as NaN.
    """
    n = X.shape[0]
    n_terms, n_vars = coef.shape
    depth = (n_terms - 1) // 2
    out = np.empty(n)
    for i in range(n):
        r = const[2 * depth]
        for j in range(n_vars):
            r += coef[2 * depth, j] * X[i, j]
        ok = True
        for k in range(depth - 1, -1, -1):
            if not np.isfinite(r) or abs(r) < POLE_EPS:
                ok = False
                break
            g = const[2 * k]
            h = const[2 * k + 1]
            for j in range(n_vars):
                g += coef[2 * k, j] * X[i, j]
                h += coef[2 * k + 1, j] * X[i, j]
            r = g + h / r
        if ok and np.isfinite(r):
            out[i] = r
        else:
            out[i] = np.nan
    return out


@njit(cache=True)
def packed_adjusted_mse(params, slot_var, term_ptr, X, y, delta, n_vars):
    """Adjusted MSE of the fraction whose free parameters are ``params``.

    Slots of term ``t`` occupy ``params[term_ptr[t]:term_ptr[t + 1]]``; a
    negative ``slot_var`` marks the term constant.
    """
    n = X.shape[0]
    n_terms = term_ptr.shape[0] - 1
    depth = (n_terms - 1) // 2

    used = np.zeros(n_vars, dtype=np.bool_)
    for s in range(params.shape[0]):
        v = slot_var[s]
        if v >= 0 and params[s] != 0.0:
            used[v] = True
    n_used = 0
    for j in range(n_vars):
        if used[j]:
            n_used += 1

    sse = 0.0
    for i in range(n):
        t = 2 * depth
        r = 0.0
        for s in range(term_ptr[t], term_ptr[t + 1]):
            v = slot_var[s]
            r += params[s] if v < 0 else params[s] * X[i, v]
        for k in range(depth - 1, -1, -1):
            if not np.isfinite(r) or abs(r) < POLE_EPS:
                return np.inf
            g = 0.0
            for s in range(term_ptr[2 * k], term_ptr[2 * k + 1]):
                v = slot_var[s]
                g += params[s] if v < 0 else params[s] * X[i, v]
            h = 0.0
            for s in range(term_ptr[2 * k + 1], term_ptr[2 * k + 2]):
                v = slot_var[s]
                h += params[s] if v < 0 else params[s] * X[i, v]
            r = g + h / r
        d = y[i] - r
        sse += d * d
    mse = sse / n
    if not np.isfinite(mse):
        return np.inf
    return mse * (1.0 + delta * n_used)


@njit(cache=True)
def _simplex_search(func, x0, args, tol, max_iter, stall_limit,
                    reflection, expansion, contraction, shrink):
    n = x0.shape[0]
    sim = np.empty((n + 1, n))
    fs = np.empty(n + 1)
    for i in range(n + 1):
        for j in range(n):
            sim[i, j] = x0[j]
        if i > 0:
            sim[i, i - 1] += 1.0
        f = func(sim[i], *args)
        fs[i] = np.inf if f != f else f

    order = np.argsort(fs, kind="mergesort")
    sim = sim[order]
    fs = fs[order]

    it = 0
    stall = 0
    while True:
        if abs(fs[n] - fs[0]) < tol:
            break
        if it >= max_iter or stall >= stall_limit:
            break
        best_before = fs[0]

        centroid = np.zeros(n)
        for i in range(n):
            centroid += sim[i]
        centroid /= n

        xr = centroid + reflection * (centroid - sim[n])
        fr = func(xr, *args)
        if fr != fr:
            fr = np.inf

        shrink_now = False
        if fr < fs[0]:
            xe = centroid + expansion * (xr - centroid)
            fe = func(xe, *args)
            if fe != fe:
                fe = np.inf
            if fe < fr:
                sim[n] = xe
                fs[n] = fe
            else:
                sim[n] = xr
                fs[n] = fr
        elif fr < fs[n - 1]:
            sim[n] = xr
            fs[n] = fr
        elif fr < fs[n]:
            xc = centroid + contraction * (xr - centroid)
            fc = func(xc, *args)
            if fc != fc:
                fc = np.inf
            if fc <= fr:
                sim[n] = xc
                fs[n] = fc
            else:
                shrink_now = True
        else:
            xc = centroid + contraction * (sim[n] - centroid)
            fc = func(xc, *args)
            if fc != fc:
                fc = np.inf
            if fc < fs[n]:
                sim[n] = xc
                fs[n] = fc
            else:
                shrink_now = True

        if shrink_now:
            for i in range(1, n + 1):
                sim[i] = sim[0] + shrink * (sim[i] - sim[0])
                f = func(sim[i], *args)
                fs[i] = np.inf if f != f else f

        order = np.argsort(fs, kind="mergesort")
        sim = sim[order]
        fs = fs[order]
        it += 1
        if fs[0] < best_before:
            stall = 0
        else:
            stall += 1

    return sim[0].copy(), fs[0], it
