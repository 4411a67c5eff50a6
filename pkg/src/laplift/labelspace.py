"""Triangulated label ranges and piecewise linear finite elements.

The range of the unknown is a polytope in R^s (s = 1 or 2) triangulated into
simplices whose vertices are the labels. Values between labels are encoded
through barycentric coordinates, so a point of the range is represented
exactly by a sparse convex combination of labels (sublabel accuracy).
"""

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSimplexError, OutOfRangeError

INSIDE_TOL = 1e-9


@dataclass(frozen=True)
class InteriorFace:
    """A face shared by two simplices, with the unit normal from j1 to j2."""

    j1: int
    j2: int
    normal: np.ndarray


class Triangulation:
    """Simplicial mesh of the label range.

    Parameters
    ----------
    labels : (L, s) array
        Vertex positions. A flat array of length L is treated as s = 1.
    simplices : (M, s+1) int array
        Vertex indices of each simplex.

    Instances are immutable by convention; all derived data (barycentric
    solvers, per-simplex gradient maps, face adjacency) is computed once at
    construction. Construction fails on degenerate simplices, faces shared by
    more than two simplices, and labels not covered by any simplex.
    """

    def __init__(self, labels, simplices):
        labels = np.asarray(labels, dtype=np.float64)
        if labels.ndim == 1:
            labels = labels[:, None]
        if labels.ndim != 2 or labels.shape[0] < 2:
            raise ValueError("labels must be an (L, s) array with L >= 2")
        dim_s = labels.shape[1]
        if dim_s not in (1, 2):
            raise ValueError("label dimension must be 1 or 2, got %d" % dim_s)
        simplices = np.asarray(simplices, dtype=np.int64)
        if simplices.ndim != 2 or simplices.shape[1] != dim_s + 1:
            raise ValueError("simplices must be an (M, s+1) index array")
        if simplices.min() < 0 or simplices.max() >= labels.shape[0]:
            raise ValueError("simplex vertex index out of range")

        self.dim_s = dim_s
        self.labels = labels
        self.simplices = simplices
        span = labels.max(axis=0) - labels.min(axis=0)
        self.diameter = float(np.linalg.norm(span))

        self._build_barycentric()
        self._build_faces()
        self._check_coverage()

    # -- construction helpers -------------------------------------------------

    def _build_barycentric(self):
        s = self.dim_s
        coords = self.labels[self.simplices]  # (M, s+1, s)
        edges = coords[:, 1:, :] - coords[:, :1, :]  # (M, s, s)
        dets = np.linalg.det(edges)
        floor = 1e-12 * self.diameter**s
        bad = np.abs(dets) <= floor
        if np.any(bad):
            raise DegenerateSimplexError(
                "degenerate simplices: %s" % np.nonzero(bad)[0].tolist()
            )
        # alpha(z) solves [T_j^T; 1^T] alpha = [z; 1]
        systems = np.empty((len(self.simplices), s + 1, s + 1))
        systems[:, :s, :] = coords.transpose(0, 2, 1)
        systems[:, s, :] = 1.0
        self.bary = np.linalg.inv(systems)  # (M, s+1, s+1), alpha = W @ [z; 1]
        # gradient of the affine piece from vertex values: grad = G @ values
        self.grads = self.bary[:, :, :s].transpose(0, 2, 1)  # (M, s, s+1)

    def _build_faces(self):
        owners = {}
        for j, simplex in enumerate(self.simplices):
            for face in itertools.combinations(sorted(simplex.tolist()), self.dim_s):
                owners.setdefault(face, []).append(j)

        interior = []
        boundary = []
        for face, js in sorted(owners.items()):
            if len(js) > 2:
                raise ValueError("face %r shared by more than two simplices" % (face,))
            if len(js) == 2:
                j1, j2 = sorted(js)
                interior.append(InteriorFace(j1, j2, self._face_normal(face, j1, j2)))
            else:
                boundary.append((js[0], face))
        self.interior_faces = tuple(interior)
        self.boundary_faces = tuple(boundary)
        self.boundary_simplices = tuple(sorted({j for j, _ in boundary}))

    def _face_normal(self, face, j1, j2):
        c1 = self.labels[self.simplices[j1]].mean(axis=0)
        c2 = self.labels[self.simplices[j2]].mean(axis=0)
        if self.dim_s == 1:
            return np.array([1.0 if c2[0] > c1[0] else -1.0])
        edge = self.labels[face[1]] - self.labels[face[0]]
        normal = np.array([-edge[1], edge[0]])
        normal /= np.linalg.norm(normal)
        if normal @ (c2 - c1) < 0.0:
            normal = -normal
        return normal

    def _check_coverage(self):
        used = np.zeros(len(self.labels), dtype=bool)
        used[self.simplices.ravel()] = True
        if not used.all():
            raise ValueError(
                "labels not covered by any simplex: %s" % np.nonzero(~used)[0].tolist()
            )

    # -- basic queries ---------------------------------------------------------

    @property
    def num_labels(self):
        return self.labels.shape[0]

    @property
    def num_simplices(self):
        return self.simplices.shape[0]

    @property
    def num_faces(self):
        """Total face count (interior plus boundary)."""
        return len(self.interior_faces) + len(self.boundary_faces)


def build_interval(a, b, num_labels):
    """Regularly spaced 1-D label range on [a, b] with ``num_labels`` labels."""
    if num_labels < 2:
        raise ValueError("need at least 2 labels, got %d" % num_labels)
    if not a < b:
        raise ValueError("empty interval: a=%r, b=%r" % (a, b))
    labels = np.linspace(a, b, num_labels)
    segments = np.column_stack(
        [np.arange(num_labels - 1), np.arange(1, num_labels)]
    )
    return Triangulation(labels, segments)


def build_disk(radius, ring_counts=(8, 16)):
    """Triangulated disk: a center vertex plus concentric rings of labels.

    Ring r holds ``ring_counts[r]`` equally spaced vertices at radius
    ``radius * (r+1) / len(ring_counts)``. The default (8, 16) gives 25
    vertices. Triangles: a fan around the center, then a bridge strip
    between consecutive rings.
    """
    if radius <= 0:
        raise ValueError("radius must be positive, got %r" % radius)
    ring_counts = tuple(int(c) for c in ring_counts)
    if len(ring_counts) == 0 or any(c < 3 for c in ring_counts):
        raise ValueError("ring_counts must be nonempty with entries >= 3")

    verts = [np.zeros(2)]
    ring_start = []
    n_rings = len(ring_counts)
    for r, count in enumerate(ring_counts):
        ring_start.append(len(verts))
        rho = radius * (r + 1) / n_rings
        angles = 2.0 * np.pi * np.arange(count) / count
        for ang in angles:
            verts.append(rho * np.array([np.cos(ang), np.sin(ang)]))
    labels = np.vstack(verts)

    triangles = []
    c0 = ring_counts[0]
    s0 = ring_start[0]
    for k in range(c0):
        triangles.append((0, s0 + k, s0 + (k + 1) % c0))
    for r in range(n_rings - 1):
        ci, co = ring_counts[r], ring_counts[r + 1]
        si, so = ring_start[r], ring_start[r + 1]
        i = j = 0
        # walk both rings by angle, bridging with one triangle per advance
        while i < ci or j < co:
            advance_outer = j < co and (i >= ci or (j + 1) / co <= (i + 1) / ci)
            if advance_outer:
                triangles.append(
                    (si + i % ci, so + j % co, so + (j + 1) % co)
                )
                j += 1
            else:
                triangles.append(
                    (si + i % ci, so + j % co, si + (i + 1) % ci)
                )
                i += 1
    return Triangulation(labels, np.asarray(triangles, dtype=np.int64))


# -- pointwise finite element operations --------------------------------------


def barycentric(tri, j, z):
    """Barycentric coordinates of ``z`` with respect to simplex ``j``.

    The coordinates always sum to one; they are all >= -1e-9 exactly when
    ``z`` lies in the simplex (signed affine extension outside).
    """
    z = np.asarray(z, dtype=np.float64).reshape(tri.dim_s)
    return tri.bary[j] @ np.append(z, 1.0)


def locate(tri, z):
    """Index of the lowest-numbered simplex containing ``z``.

    Raises OutOfRangeError if no simplex contains ``z`` up to tolerance.
    """
    js, _ = locate_many(tri, np.asarray(z, dtype=np.float64).reshape(1, tri.dim_s))
    return int(js[0])


def locate_many(tri, points):
    """Vectorized point location.

    Returns (simplex indices, barycentric coordinate rows) for an (n, s)
    array of points, using the lowest-index tie break on shared faces.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    zz = np.concatenate([points, np.ones((n, 1))], axis=1)  # (n, s+1)
    alphas = np.einsum("mrc,nc->nmr", tri.bary, zz)  # (n, M, s+1)
    inside = np.all(alphas >= -INSIDE_TOL, axis=2)  # (n, M)
    found = inside.any(axis=1)
    if not found.all():
        missing = points[~found][0]
        raise OutOfRangeError("point %s is outside the label range" % missing)
    js = np.argmax(inside, axis=1)
    return js, alphas[np.arange(n), js]


def embed_dirac(tri, z):
    """Row of barycentric weights representing the point mass at ``z``.

    Zero except at the vertices of the containing simplex; nonnegative and
    summing to one.
    """
    return embed_dirac_many(tri, np.asarray(z, dtype=np.float64).reshape(1, tri.dim_s))[0]


def embed_dirac_many(tri, points):
    """Vectorized sublabel point-mass encoding; returns an (n, L) matrix."""
    js, alphas = locate_many(tri, points)
    alphas = np.maximum(alphas, 0.0)
    alphas /= alphas.sum(axis=1, keepdims=True)
    rows = np.zeros((len(js), tri.num_labels))
    np.put_along_axis(rows, tri.simplices[js], alphas, axis=1)
    return rows


def pl_gradient(tri, j, vertex_values):
    """Gradient of the affine piece on simplex ``j`` from its vertex values."""
    vertex_values = np.asarray(vertex_values, dtype=np.float64).reshape(tri.dim_s + 1)
    return tri.grads[j] @ vertex_values


def simplex_gradients(tri, coeffs):
    """Per-simplex gradients of the piecewise linear function ``coeffs``.

    coeffs may be (L,) or (n, L); returns (M, s) or (n, M, s).
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    values = coeffs[..., tri.simplices]  # (..., M, s+1)
    return np.einsum("msr,...mr->...ms", tri.grads, values)


def evaluate_pl(tri, coeffs, z):
    """Evaluate the piecewise linear function with vertex values ``coeffs``."""
    coeffs = np.asarray(coeffs, dtype=np.float64).reshape(tri.num_labels)
    j = locate(tri, z)
    alpha = barycentric(tri, j, z)
    return float(alpha @ coeffs[tri.simplices[j]])


# -- serialization -------------------------------------------------------------


def triangulation_to_json(tri):
    """JSON-compatible dict {dim_s, labels, simplices}; faces are derived."""
    return {
        "dim_s": tri.dim_s,
        "labels": tri.labels.tolist(),
        "simplices": tri.simplices.tolist(),
    }


def triangulation_from_json(data):
    labels = np.asarray(data["labels"], dtype=np.float64)
    if labels.ndim == 1:
        labels = labels[:, None]
    if int(data["dim_s"]) != labels.shape[1]:
        raise ValueError("dim_s does not match label coordinates")
    return Triangulation(labels, np.asarray(data["simplices"], dtype=np.int64))


def save_triangulation(tri, path):
    with open(path, "w") as fh:
        json.dump(triangulation_to_json(tri), fh)


def load_triangulation(path):
    with open(path) as fh:
        return triangulation_from_json(json.load(fh))


def mesh_validity_report(tri, samples=200, seed=0):
    """Sampled consistency checks complementing the constructive ones.

    Draws random points inside simplices and verifies that point location is
    consistent (no interior overlap: every strictly contained sample belongs
    to exactly one simplex) and that normals have unit length.
    """
    rng = np.random.default_rng(seed)
    report = {"normal_unit": 0.0, "overlap": 0, "partition": 0.0}
    for f in tri.interior_faces:
        report["normal_unit"] = max(
            report["normal_unit"], abs(np.linalg.norm(f.normal) - 1.0)
        )
    m = tri.num_simplices
    js = rng.integers(0, m, size=samples)
    w = rng.dirichlet(np.ones(tri.dim_s + 1), size=samples)
    pts = np.einsum("nr,nrs->ns", w, tri.labels[tri.simplices[js]])
    zz = np.concatenate([pts, np.ones((samples, 1))], axis=1)
    alphas = np.einsum("mrc,nc->nmr", tri.bary, zz)
    strictly_inside = np.all(alphas > 1e-7, axis=2)
    report["overlap"] = int(np.max(np.sum(strictly_inside, axis=1), initial=0) > 1)
    rows = embed_dirac_many(tri, pts)
    report["partition"] = float(np.max(np.abs(rows.sum(axis=1) - 1.0)))
    return report
