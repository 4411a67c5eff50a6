"""Projecting lifted solutions back to pointwise fields.

Mean rounding takes the per-pixel barycentric average over the label range.
Scalar thresholding inverts the cumulative mass of the row treated as point
masses sitting at the label vertices (mass at a vertex counts toward the
closed lower tail ending at that vertex), so its output is always a label.
Mode extraction diagnoses mixture rows by grouping the support into
connected components of the label adjacency graph.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .lifting import LiftedField

SUPPORT_PRUNE = 1e-3


@dataclass(frozen=True)
class RoundedField:
    """Pointwise range values, one (s,) row per grid point."""

    values: np.ndarray


def _coefficients(u):
    return u.u if isinstance(u, LiftedField) else np.asarray(u, dtype=np.float64)


def round_mean(tri, u):
    """Barycentric average per pixel: values[i] = sum_k u[i, k] Z_k."""
    return RoundedField(_coefficients(u) @ tri.labels)


def round_threshold(tri, u, s_thresh):
    """Smallest label where the cumulative row mass exceeds ``s_thresh``.

    Requires 1-D labels in ascending order. Rows are normalized by their
    total mass so the threshold is always attained.
    """
    if not 0.0 <= s_thresh < 1.0:
        raise ValueError("threshold must lie in [0, 1), got %r" % s_thresh)
    if tri.dim_s != 1:
        raise ValueError("thresholding requires 1-D labels")
    zs = tri.labels[:, 0]
    if np.any(np.diff(zs) <= 0):
        raise ValueError("thresholding requires ascending labels")
    coeffs = _coefficients(u)
    cumulative = np.cumsum(coeffs, axis=1)
    cumulative /= cumulative[:, -1:]
    idx = np.argmax(cumulative > s_thresh, axis=1)
    return RoundedField(zs[idx][:, None])


def _label_adjacency(tri):
    adjacency = [set() for _ in range(tri.num_labels)]
    for simplex in tri.simplices:
        for a in simplex:
            for b in simplex:
                if a != b:
                    adjacency[a].add(int(b))
    return adjacency


def extract_modes(tri, u, mass_tol, max_modes):
    """Per-pixel list of (position, weight) mode clusters.

    Entries below a small support threshold are zeroed; the remaining
    support splits into connected components of the label adjacency graph.
    Components carry their mass sum and mass-weighted mean position; those
    lighter than ``mass_tol`` are dropped and the rest are returned sorted
    by weight, truncated to ``max_modes``.
    """
    if not 0.0 < mass_tol < 1.0:
        raise ValueError("mass_tol must lie in (0, 1)")
    if max_modes < 1:
        raise ValueError("max_modes must be >= 1")
    coeffs = _coefficients(u)
    adjacency = _label_adjacency(tri)
    results = []
    for row in coeffs:
        w = np.where(row > SUPPORT_PRUNE, row, 0.0)
        active = np.nonzero(w)[0]
        seen = set()
        modes = []
        for start in active:
            if int(start) in seen:
                continue
            stack = [int(start)]
            component = []
            seen.add(int(start))
            while stack:
                k = stack.pop()
                component.append(k)
                for nb in adjacency[k]:
                    if nb not in seen and w[nb] > 0.0:
                        seen.add(nb)
                        stack.append(nb)
            weight = float(w[component].sum())
            if weight < mass_tol:
                continue
            position = (w[component] @ tri.labels[component]) / weight
            modes.append((position, weight))
        modes.sort(key=lambda item: (-item[1], tuple(item[0])))
        results.append(modes[:max_modes])
    return results


def export_rounded_csv(grid, rounded, path):
    """Write a rounded field as CSV: grid indices, then value columns."""
    values = rounded.values
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        n_comp = values.shape[1]
        if grid.dims == 1:
            writer.writerow(["ix"] + ["v%d" % c for c in range(n_comp)])
            for i in range(grid.n):
                writer.writerow([i] + [repr(float(v)) for v in values[i]])
        else:
            h, w = grid.shape
            writer.writerow(["ix", "iy"] + ["v%d" % c for c in range(n_comp)])
            for i in range(grid.n):
                writer.writerow(
                    [i % w, i // w] + [repr(float(v)) for v in values[i]]
                )
