"""Plain-Python textbook Nelder-Mead used as an oracle for the compiled search.

Vertices are kept as a list of ``(value, point)`` pairs and re-sorted with the
stable built-in sort after every step.
"""

import math


def _clean(v):
    return math.inf if v != v else v


def _axpy(a, x, y):
    # a * x + y, elementwise on lists
    return [a * xi + yi for xi, yi in zip(x, y)]


def reference_nelder_mead(f, x0, tol=1e-3, max_iter=250, stall_limit=10,
                          alpha=1.0, gamma=2.0, rho=0.5, sigma=0.5):
    x0 = [float(v) for v in x0]
    n = len(x0)
    pts = [list(x0)]
    for j in range(n):
        p = list(x0)
        p[j] += 1.0
        pts.append(p)
    verts = sorted(((_clean(f(p)), p) for p in pts), key=lambda v: v[0])

    iters = stall = 0
    while not abs(verts[-1][0] - verts[0][0]) < tol:
        if iters >= max_iter or stall >= stall_limit:
            break
        prev_best = verts[0][0]
        worst_f, worst = verts[-1]
        c = [0.0] * n
        for _, p in verts[:-1]:
            c = [ci + pi for ci, pi in zip(c, p)]
        c = [ci / n for ci in c]
        d = [ci - wi for ci, wi in zip(c, worst)]

        xr = _axpy(alpha, d, c)
        fr = _clean(f(xr))
        new = None
        if fr < verts[0][0]:
            xe = _axpy(gamma, [r - ci for r, ci in zip(xr, c)], c)
            fe = _clean(f(xe))
            new = (fe, xe) if fe < fr else (fr, xr)
        elif fr < verts[-2][0]:
            new = (fr, xr)
        elif fr < worst_f:
            xc = _axpy(rho, [r - ci for r, ci in zip(xr, c)], c)
            fc = _clean(f(xc))
            if fc <= fr:
                new = (fc, xc)
        else:
            xc = _axpy(rho, [w - ci for w, ci in zip(worst, c)], c)
            fc = _clean(f(xc))
            if fc < worst_f:
                new = (fc, xc)

        if new is not None:
            verts[-1] = new
        else:
            b = verts[0][1]
            shrunk = [verts[0]]
            for _, p in verts[1:]:
                q = _axpy(sigma, [pi - bi for pi, bi in zip(p, b)], b)
                shrunk.append((_clean(f(q)), q))
            verts = shrunk
        verts.sort(key=lambda v: v[0])
        iters += 1
        stall = 0 if verts[0][0] < prev_best else stall + 1
    return verts[0][1], verts[0][0], iters
