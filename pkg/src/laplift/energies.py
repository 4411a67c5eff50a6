"""Data terms sampled on grid x labels, and regularizers with conjugates.

The regularizer acts on the (componentwise) Laplacian of the unknown. Three
kinds are supported, each with value, Fenchel conjugate, (sub)gradient, and
the Euclidean projection onto the conjugate's epigraph:

  squared-euclid   eta(p) = w/2 |p|_2^2     eta*(g) = |g|_2^2 / (2 w)
  one-norm         eta(p) = w |p|_1         eta*(g) = 0 if |g|_inf <= w else inf
  euclid-norm      eta(p) = w |p|_2         eta*(g) = 0 if |g|_2 <= w else inf

A zero weight degenerates eta to 0 and eta* to the indicator of {0}.
"""

from dataclasses import dataclass

import numpy as np

from . import arrayio
from .images import bilinear_sample, grid_positions, _values
from .projections import project_ball_rows, project_box, project_parabola_epigraph_rows

REGULARIZER_KINDS = ("squared-euclid", "one-norm", "euclid-norm")


@dataclass(frozen=True)
class DataTermSamples:
    """Data term values rho[i, k] at grid point i and label k."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=np.float64)
        if rho.ndim != 2:
            raise ValueError("rho must be a (n_points, n_labels) matrix")
        if not np.all(np.isfinite(rho)):
            raise ValueError("rho contains non-finite entries")
        object.__setattr__(self, "rho", rho)

    def save(self, path):
        arrayio.save_array(path, self.rho)

    @classmethod
    def load(cls, path):
        return cls(arrayio.load_array(path))


@dataclass(frozen=True)
class Regularizer:
    kind: str
    weight: float

    def __post_init__(self):
        if self.kind not in REGULARIZER_KINDS:
            raise ValueError("unknown regularizer kind %r" % self.kind)
        if not self.weight >= 0.0:
            raise ValueError("regularizer weight must be >= 0")


def _rows(p):
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    return p[None, :] if p.ndim == 1 else p


def reg_value_batch(reg, p):
    p = _rows(p)
    if reg.kind == "squared-euclid":
        return 0.5 * reg.weight * np.sum(p * p, axis=-1)
    if reg.kind == "one-norm":
        return reg.weight * np.sum(np.abs(p), axis=-1)
    return reg.weight * np.linalg.norm(p, axis=-1)


def reg_value(reg, p):
    """Regularizer value at a point p in R^s (or rows of points)."""
    out = reg_value_batch(reg, p)
    return float(out[0]) if np.asarray(p).ndim <= 1 else out


def reg_conj_batch(reg, g, zero_tol=1e-12):
    """Conjugate values; infeasible indicator arguments map to +inf."""
    g = _rows(g)
    if reg.weight == 0.0:
        feasible = np.linalg.norm(g, axis=-1) <= zero_tol
        return np.where(feasible, 0.0, np.inf)
    if reg.kind == "squared-euclid":
        return np.sum(g * g, axis=-1) / (2.0 * reg.weight)
    if reg.kind == "one-norm":
        inside = np.max(np.abs(g), axis=-1) <= reg.weight + zero_tol
        return np.where(inside, 0.0, np.inf)
    inside = np.linalg.norm(g, axis=-1) <= reg.weight + zero_tol
    return np.where(inside, 0.0, np.inf)


def reg_conj(reg, g):
    """Fenchel conjugate of the regularizer at a point (or rows of points)."""
    out = reg_conj_batch(reg, g)
    return float(out[0]) if np.asarray(g).ndim <= 1 else out


def reg_grad_batch(reg, p):
    p = _rows(p)
    if reg.kind == "squared-euclid":
        return reg.weight * p
    if reg.kind == "one-norm":
        return reg.weight * np.sign(p)
    norms = np.linalg.norm(p, axis=-1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    return np.where(norms > 0.0, reg.weight * p / safe, 0.0)


def reg_grad(reg, p):
    """A (sub)gradient of the regularizer at p; sign(0) is taken as 0."""
    out = reg_grad_batch(reg, p)
    return out[0] if np.asarray(p).ndim <= 1 else out


def epigraph_project_batch(reg, g, t):
    """Project rows (g_i, t_i) onto the epigraph of the conjugate."""
    g = _rows(g).copy()
    t = np.atleast_1d(np.asarray(t, dtype=np.float64)).copy()
    if reg.weight == 0.0:
        return np.zeros_like(g), np.maximum(t, 0.0)
    if reg.kind == "squared-euclid":
        return project_parabola_epigraph_rows(g, t, 1.0 / (2.0 * reg.weight))
    if reg.kind == "one-norm":
        return project_box(g, -reg.weight, reg.weight), np.maximum(t, 0.0)
    return project_ball_rows(g, reg.weight), np.maximum(t, 0.0)


def epigraph_project(reg, g, t):
    """Euclidean projection of a single (g, t) onto {(g, t): eta*(g) <= t}."""
    g = np.atleast_1d(np.asarray(g, dtype=np.float64))
    gp, tp = epigraph_project_batch(reg, g[None, :], [float(t)])
    return gp[0], float(tp[0])


# -- data term sampling ----------------------------------------------------------


def sample_absdiff_squared(grid, tri, domain=(-1.0, 1.0)):
    """Non-convex toy data term (|x| - |z|)^2 on a 1-D domain and range."""
    if grid.dims != 1 or tri.dim_s != 1:
        raise ValueError("toy data term needs a 1-D grid and 1-D labels")
    xs = np.linspace(domain[0], domain[1], grid.n)
    zs = tri.labels[:, 0]
    return DataTermSamples((np.abs(xs)[:, None] - np.abs(zs)[None, :]) ** 2)


def sample_registration(reference, template, grid, tri):
    """Pointwise squared-distance data term for registration.

    rho[i, k] = 1/2 (R(x_i) - T(x_i + Z_k))^2 with clamped bilinear sampling
    of the template. Grid shape must match the image shape; labels are
    displacement vectors in pixels (or scalar horizontal shifts for 1-D
    flows on a single-row image).
    """
    ref = _values(reference)
    tmpl = _values(template)
    if ref.shape != tmpl.shape:
        raise ValueError("reference and template shapes differ")
    if grid.dims == 2:
        if grid.shape != ref.shape:
            raise ValueError("grid shape %r does not match image %r" % (grid.shape, ref.shape))
        if tri.dim_s != 2:
            raise ValueError("2-D registration needs 2-D labels")
        displacements = tri.labels
    else:
        if ref.shape[0] != 1 or grid.shape != (ref.shape[1],):
            raise ValueError("1-D flow needs a single-row image matching the grid")
        if tri.dim_s != 1:
            raise ValueError("1-D flow needs 1-D labels")
        displacements = np.column_stack([tri.labels[:, 0], np.zeros(tri.num_labels)])
    pos = grid_positions(ref.shape)
    rho = np.empty((grid.n, tri.num_labels))
    flat_ref = ref.ravel()
    for k, z in enumerate(displacements):
        warped = bilinear_sample(tmpl, pos + z[None, :])
        rho[:, k] = 0.5 * (flat_ref - warped) ** 2
    return DataTermSamples(rho)
