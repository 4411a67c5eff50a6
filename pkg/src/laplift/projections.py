"""Euclidean projections used by the solver and the dual constraint sets."""

import numpy as np


def project_simplex_rows(v):
    """Project each row of ``v`` onto the unit simplex {x >= 0, sum(x) = 1}.

    Sort-and-threshold method; O(n L log L) total.
    """
    v = np.asarray(v, dtype=np.float64)
    n, width = v.shape
    u = np.sort(v, axis=1)[:, ::-1]
    cumulative = np.cumsum(u, axis=1) - 1.0
    counts = np.arange(1, width + 1, dtype=np.float64)
    positive = u - cumulative / counts > 0.0
    # index of the last prefix with a positive gap
    rho = width - 1 - np.argmax(positive[:, ::-1], axis=1)
    theta = cumulative[np.arange(n), rho] / (rho + 1.0)
    return np.maximum(v - theta[:, None], 0.0)


def project_simplex(v):
    """Project a single vector onto the unit simplex."""
    v = np.asarray(v, dtype=np.float64)
    return project_simplex_rows(v[None, :])[0]


def project_box(v, lo, hi):
    """Clamp ``v`` componentwise into [lo, hi]."""
    return np.clip(v, lo, hi)


def project_ball_rows(v, radius):
    """Scale each row of ``v`` into the Euclidean ball of given radius."""
    v = np.asarray(v, dtype=np.float64)
    norms = np.linalg.norm(v, axis=-1)
    scale = np.ones_like(norms)
    over = norms > radius
    if np.any(over):
        scale[over] = radius / norms[over]
    return v * scale[..., None]


def project_parabola_epigraph_rows(g, t, curvature):
    """Project rows (g_i, t_i) onto {(g, t): curvature * |g|^2 <= t}.

    The projection of an outside point lies on the boundary at g' = beta g
    with beta in (0, 1) the root of

        2 a^2 r^2 beta^3 + (1 - 2 a t) beta - 1 = 0,   a = curvature, r = |g|.

    The root is unique in (0, 1); it is found by a bisection-safeguarded
    Newton iteration, vectorized over the outside rows.
    """
    g = np.asarray(g, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    a = float(curvature)
    r2 = np.sum(g * g, axis=-1)
    inside = a * r2 <= t + 1e-12
    g_out = g.copy()
    t_out = t.copy()
    idx = np.nonzero(~inside)[0]
    if idx.size == 0:
        return g_out, t_out

    r2o = r2[idx]
    to = t[idx]
    zero_r = r2o <= 0.0
    # vanishing gradient part: nearest epigraph point is the apex
    if np.any(zero_r):
        sub = idx[zero_r]
        g_out[sub] = 0.0
        t_out[sub] = np.maximum(t_out[sub], 0.0)
        idx = idx[~zero_r]
        r2o = r2o[~zero_r]
        to = to[~zero_r]
        if idx.size == 0:
            return g_out, t_out

    c3 = 2.0 * a * a * r2o
    c1 = 1.0 - 2.0 * a * to
    # phi(beta) = c3 beta^3 + c1 beta - 1 is convex on beta > 0 with
    # phi(1) > 0 and phi'(1) > 0 for outside points, so Newton started at 1
    # descends monotonically to the unique root in (0, 1).
    beta = np.ones_like(r2o)
    for _ in range(24):
        val = (c3 * beta * beta + c1) * beta - 1.0
        step = val / (3.0 * c3 * beta * beta + c1)
        beta -= step
        if np.max(np.abs(step)) < 1e-14:
            break
    g_out[idx] = g[idx] * beta[:, None]
    t_out[idx] = a * np.sum(g_out[idx] * g_out[idx], axis=-1)
    return g_out, t_out
