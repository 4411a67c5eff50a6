"""Discrete lifted energies over measure-valued fields.

A pointwise unknown u: grid -> range is replaced by one probability row per
grid point over the piecewise linear basis of the triangulated range. The
lifted energy pairs that field with dual functions (p, q) through

    sum_{i,k} u[i,k] ((Lap p)[i,k] + q[i,k]),

maximized over duals that are concave in the label variable and satisfy the
pointwise conjugate inequality of the integrand. This module assembles the
resulting bilinear saddle-point problem, evaluates original and lifted
energies, builds the optimal-pair dual certificate for separable integrands,
checks dual feasibility, and implements the reduced constraint system of the
lifted absolute-Laplacian regularizer (concave, 1-Lipschitz functions).
"""

import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import arrayio
from .energies import (
    DataTermSamples,
    Regularizer,
    epigraph_project_batch,
    reg_conj_batch,
    reg_grad_batch,
    reg_value_batch,
)
from .grid import laplacian_apply
from .labelspace import embed_dirac_many, locate_many, simplex_gradients

ROW_SUM_TOL = 1e-7
ENTRY_TOL = 1e-9


@dataclass(frozen=True)
class LiftedField:
    """Per-pixel coefficient rows of a measure-valued field."""

    u: np.ndarray

    def validate(self):
        if np.max(np.abs(self.u.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise ValueError("lifted field rows do not sum to one")
        if self.u.min() < -ENTRY_TOL:
            raise ValueError("lifted field has negative entries")
        return self


@dataclass(frozen=True)
class DualVars:
    """Discrete dual point: p, q (n, L); per-simplex gradients g (n, M, s);
    epigraph heights t (n, M)."""

    p: np.ndarray
    q: np.ndarray
    g: np.ndarray
    t: np.ndarray


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: dict
    tol: float


def lift_dirac(tri, values):
    """Lift pointwise range values to their sublabel point-mass rows."""
    return LiftedField(embed_dirac_many(tri, values))


def _as_points(values, n, s):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape != (n, s):
        raise ValueError("expected (%d, %d) range values, got %r" % (n, s, values.shape))
    return values


class SaddleProblem:
    """Assembled bilinear form of the discrete lifted problem.

    Primal variables (minimized):
      u   (n, L)       coefficient rows, projected onto the unit simplex
      lam (n, M, s+1)  >= 0, one per conjugate inequality at a simplex vertex
      mu  (n, F)       >= 0, one per interior-face concavity constraint
      nu  (n, M, s)    free, ties the gradient variables to p

    Dual variables (maximized):
      p, q (n, L) free; (g, t) (n, M, s), (n, M) kept in the epigraph of the
      regularizer conjugate by projection.

    The Lagrangian is B(x, y) = <K x, y> + <c, x> where c carries the data
    term offsets multiplying lam. K is assembled once as one sparse matrix
    acting on the flat primal vector; its transpose is precomputed.
    """

    def __init__(self, grid, tri, rho, reg):
        if not isinstance(rho, DataTermSamples):
            rho = DataTermSamples(rho)
        if rho.rho.shape != (grid.n, tri.num_labels):
            raise ValueError(
                "rho shape %r does not match grid (%d) x labels (%d)"
                % (rho.rho.shape, grid.n, tri.num_labels)
            )
        if not isinstance(reg, Regularizer):
            raise ValueError("reg must be a Regularizer")
        self.grid = grid
        self.tri = tri
        self.rho = rho
        self.reg = reg

        n, s = grid.n, tri.dim_s
        L, M = tri.num_labels, tri.num_simplices
        F = len(tri.interior_faces)
        self.n_pixels, self.dim_s = n, s
        self.n_labels, self.n_simplices, self.n_faces = L, M, F

        self.primal_shapes = {
            "u": (n, L),
            "lam": (n, M, s + 1),
            "mu": (n, F),
            "nu": (n, M, s),
        }
        self.dual_shapes = {
            "p": (n, L),
            "q": (n, L),
            "g": (n, M, s),
            "t": (n, M),
        }
        self.primal_slices = _make_slices(self.primal_shapes)
        self.dual_slices = _make_slices(self.dual_shapes)
        self.primal_dim = sum(int(np.prod(v)) for v in self.primal_shapes.values())
        self.dual_dim = sum(int(np.prod(v)) for v in self.dual_shapes.values())

        self.K = self._assemble_operator()
        self.KT = self.K.T.tocsr()
        self.c = self._assemble_offsets()

    def _assemble_operator(self):
        tri, grid = self.tri, self.grid
        n, s = self.n_pixels, self.dim_s
        L, M, F = self.n_labels, self.n_simplices, self.n_faces
        eye_n = sp.identity(n, format="csr")

        # per-pixel scatter of lam over the vertices of its simplex
        rows, cols = [], []
        for j, verts in enumerate(tri.simplices):
            for r, k in enumerate(verts):
                rows.append(k)
                cols.append(j * (s + 1) + r)
        scatter = sp.csr_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(L, M * (s + 1))
        )

        # per-pixel map from nu to vertex coefficients of p (gradient pairing)
        rows, cols, vals = [], [], []
        for j, verts in enumerate(tri.simplices):
            gj = tri.grads[j]  # (s, s+1)
            for c in range(s):
                for r, k in enumerate(verts):
                    rows.append(k)
                    cols.append(j * s + c)
                    vals.append(gj[c, r])
        nu_to_p = sp.csr_matrix((vals, (rows, cols)), shape=(L, M * s))

        # per-pixel map from mu to gradient variables (face concavity pairing)
        rows, cols, vals = [], [], []
        for f, face in enumerate(tri.interior_faces):
            for c in range(s):
                rows.append(face.j1 * s + c)
                cols.append(f)
                vals.append(face.normal[c])
                rows.append(face.j2 * s + c)
                cols.append(f)
                vals.append(-face.normal[c])
        mu_to_g = sp.csr_matrix((vals, (rows, cols)), shape=(M * s, max(F, 0)))

        # per-pixel sum of lam over each simplex (epigraph height pairing)
        rows = np.repeat(np.arange(M), s + 1)
        cols = np.arange(M * (s + 1))
        lam_to_t = sp.csr_matrix(
            (np.ones(M * (s + 1)), (rows, cols)), shape=(M, M * (s + 1))
        )

        blocks = [
            [sp.kron(grid.lap, sp.identity(L), format="csr"), None, None,
             sp.kron(eye_n, nu_to_p, format="csr")],
            [sp.identity(n * L, format="csr"),
             -sp.kron(eye_n, scatter, format="csr"), None, None],
            [None, None, sp.kron(eye_n, mu_to_g, format="csr"),
             -sp.identity(n * M * s, format="csr")],
            [None, -sp.kron(eye_n, lam_to_t, format="csr"), None, None],
        ]
        return sp.bmat(blocks, format="csr")

    def _assemble_offsets(self):
        c = np.zeros(self.primal_dim)
        lam = c[self.primal_slices["lam"]].reshape(self.primal_shapes["lam"])
        lam[:] = self.rho.rho[:, self.tri.simplices]  # (n, M, s+1)
        return c

    # -- flat vector helpers ------------------------------------------------

    def split_primal(self, x):
        return {
            name: x[self.primal_slices[name]].reshape(shape)
            for name, shape in self.primal_shapes.items()
        }

    def split_dual(self, y):
        return {
            name: y[self.dual_slices[name]].reshape(shape)
            for name, shape in self.dual_shapes.items()
        }

    def pack_primal(self, **parts):
        x = np.zeros(self.primal_dim)
        views = self.split_primal(x)
        for name, value in parts.items():
            views[name][:] = value
        return x

    def pack_dual(self, **parts):
        y = np.zeros(self.dual_dim)
        views = self.split_dual(y)
        for name, value in parts.items():
            views[name][:] = value
        return y

    def dual_vars_from_vector(self, y):
        parts = self.split_dual(y)
        return DualVars(
            parts["p"].copy(), parts["q"].copy(), parts["g"].copy(), parts["t"].copy()
        )


def _make_slices(shapes):
    slices = {}
    offset = 0
    for name, shape in shapes.items():
        size = int(np.prod(shape))
        slices[name] = slice(offset, offset + size)
        offset += size
    return slices


def assemble(grid, tri, rho, reg):
    """Build the saddle-point problem for a sampled data term and regularizer."""
    return SaddleProblem(grid, tri, rho, reg)


# -- energies ---------------------------------------------------------------------


def original_energy(grid, tri, rho, reg, values):
    """Energy of a pointwise field: interpolated data term plus regularized
    stencil response, summed over grid points."""
    if not isinstance(rho, DataTermSamples):
        rho = DataTermSamples(rho)
    values = _as_points(values, grid.n, tri.dim_s)
    js, alphas = locate_many(tri, values)
    verts = tri.simplices[js]  # (n, s+1)
    data = np.einsum("nr,nr->n", alphas, rho.rho[np.arange(grid.n)[:, None], verts])
    lap_vals = laplacian_apply(grid, values)
    return float(data.sum() + reg_value_batch(reg, lap_vals).sum())


def lifted_energy_at(problem, u, dual):
    """Pairing sum_{i,k} u[i,k] ((Lap p)[i,k] + q[i,k])."""
    uu = u.u if isinstance(u, LiftedField) else np.asarray(u, dtype=np.float64)
    inner = laplacian_apply(problem.grid, dual.p) + dual.q
    return float(np.sum(uu * inner))


def make_certificate(problem, values):
    """Dual point that is feasible and tight at the given pointwise field.

    With w_i the regularizer gradient at the stencil response of the field,
    p is the linear function <z, w_i> per pixel, q absorbs the data term
    minus the conjugate value, and (g, t) sit exactly on the conjugate
    epigraph. Tightness relies on the stencil matrix being symmetric.
    """
    values = _as_points(values, problem.n_pixels, problem.dim_s)
    w = reg_grad_batch(problem.reg, laplacian_apply(problem.grid, values))  # (n, s)
    conj = reg_conj_batch(problem.reg, w)  # (n,)
    p = w @ problem.tri.labels.T
    q = problem.rho.rho - conj[:, None]
    g = np.repeat(w[:, None, :], problem.n_simplices, axis=1)
    t = np.repeat(conj[:, None], problem.n_simplices, axis=1)
    return DualVars(p, q, g, t)


def _epigraph_violation(reg, g_rows, t_rows):
    """Max violation of eta*(g) <= t over rows, finite for indicator kinds."""
    if reg.weight == 0.0:
        return max(
            float(np.max(np.linalg.norm(g_rows, axis=-1), initial=0.0)),
            float(np.max(-t_rows, initial=0.0)),
        )
    if reg.kind == "squared-euclid":
        conj = np.sum(g_rows * g_rows, axis=-1) / (2.0 * reg.weight)
        return float(np.max(conj - t_rows, initial=0.0))
    if reg.kind == "one-norm":
        ball = np.max(np.abs(g_rows), axis=-1) - reg.weight
    else:
        ball = np.linalg.norm(g_rows, axis=-1) - reg.weight
    return max(float(np.max(ball, initial=0.0)), float(np.max(-t_rows, initial=0.0)))


def check_dual_feasibility(problem, dual, tol=1e-6):
    """Evaluate the four dual constraint families and report the worst
    violation of each: gradient consistency, concavity across interior
    faces, the per-vertex conjugate inequality, and epigraph membership."""
    tri = problem.tri
    grads_from_p = simplex_gradients(tri, dual.p)  # (n, M, s)
    v_grad = float(np.max(np.abs(dual.g - grads_from_p), initial=0.0))

    v_concave = 0.0
    for face in tri.interior_faces:
        jump = (dual.g[:, face.j2, :] - dual.g[:, face.j1, :]) @ face.normal
        v_concave = max(v_concave, float(np.max(jump, initial=0.0)))

    verts = tri.simplices  # (M, s+1)
    qv = dual.q[:, verts]  # (n, M, s+1)
    rv = problem.rho.rho[:, verts]
    v_fenchel = float(np.max(qv + dual.t[:, :, None] - rv, initial=0.0))

    g_rows = dual.g.reshape(-1, problem.dim_s)
    t_rows = dual.t.reshape(-1)
    v_epi = _epigraph_violation(problem.reg, g_rows, t_rows)

    violations = {
        "gradient_consistency": v_grad,
        "concavity": v_concave,
        "fenchel": v_fenchel,
        "epigraph": v_epi,
    }
    return FeasibilityReport(
        feasible=bool(max(violations.values()) <= tol), violations=violations, tol=tol
    )


def repair_dual(problem, dual):
    """Feasibility repair: project (g, t) onto the conjugate epigraph and
    clamp q down so the per-vertex conjugate inequalities hold."""
    g_rows, t_rows = epigraph_project_batch(
        problem.reg, dual.g.reshape(-1, problem.dim_s), dual.t.reshape(-1)
    )
    g = g_rows.reshape(dual.g.shape)
    t = t_rows.reshape(dual.t.shape)
    max_t = np.full((problem.n_pixels, problem.n_labels), -np.inf)
    for j, verts in enumerate(problem.tri.simplices):
        for k in verts:
            np.maximum.at(max_t, (slice(None), k), t[:, j])
    q = np.minimum(dual.q, problem.rho.rho - max_t)
    return DualVars(dual.p.copy(), q, g, t)


def dual_lower_bound(problem, dual):
    """Lifted energy minimized over all coefficient fields at a fixed dual:
    per pixel, the smallest entry of (Lap p + q). A certified lower bound on
    the original energy when the dual is feasible."""
    inner = laplacian_apply(problem.grid, dual.p) + dual.q
    return float(inner.min(axis=1).sum())


# -- reduced constraint system of the lifted absolute Laplacian --------------------


@dataclass(frozen=True)
class KSetSpec:
    """Constraint system of the conjugated lifted norm regularizer.

    ``norm`` names the bound norm on stencil differences; ``m`` is the
    stencil neighbor count used by the sampled check.
    """

    tri: object
    norm: str = "euclid-norm"
    m: int = 2

    def __post_init__(self):
        if self.norm not in ("one-norm", "euclid-norm"):
            raise ValueError("norm must be 'one-norm' or 'euclid-norm'")
        if self.m < 1:
            raise ValueError("stencil size m must be >= 1")


def _dual_norms(spec, g_rows):
    if spec.norm == "one-norm":
        return np.max(np.abs(g_rows), axis=-1)
    return np.linalg.norm(g_rows, axis=-1)


def kset_membership(spec, f, tol=1e-9):
    """Reduced membership test: concavity across every interior face plus the
    dual-norm gradient bound on boundary simplices only. For a convex range
    this is equivalent to the function being concave and 1-Lipschitz."""
    tri = spec.tri
    f = np.asarray(f, dtype=np.float64).reshape(tri.num_labels)
    grads = simplex_gradients(tri, f)  # (M, s)
    for face in tri.interior_faces:
        if (grads[face.j2] - grads[face.j1]) @ face.normal > tol:
            return False
    bnd = np.asarray(spec.tri.boundary_simplices, dtype=np.int64)
    if bnd.size and np.any(_dual_norms(spec, grads[bnd]) > 1.0 + tol):
        return False
    return True


def kset_constraint_count(spec):
    """Number of nonlinear constraints the membership test evaluates."""
    return len(spec.tri.interior_faces) + len(spec.tri.boundary_simplices)


def kset_sampled_check(spec, f, trials, rng_seed=0, tol=1e-9):
    """Randomized test of the defining inequalities

        sum_l (f(t_l) - f(t_0)) <= | sum_l (t_l - t_0) |

    over sampled simplex tuples and barycentric weights. Tuples are drawn
    from a mixture of same-simplex, face-neighbor, and uniform simplex
    choices so that macroscopic violations are found reliably; weights are
    uniform on the simplex. Returns False iff a sampled tuple violates the
    inequality by more than ``tol``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tri = spec.tri
    f = np.asarray(f, dtype=np.float64).reshape(tri.num_labels)
    m = spec.m
    rng = np.random.default_rng(rng_seed)
    n_simpl = tri.num_simplices

    neighbor_lists = [[j] for j in range(n_simpl)]
    for face in tri.interior_faces:
        neighbor_lists[face.j1].append(face.j2)
        neighbor_lists[face.j2].append(face.j1)
    max_deg = max(len(lst) for lst in neighbor_lists)
    neighbor_table = np.empty((n_simpl, max_deg), dtype=np.int64)
    for j, lst in enumerate(neighbor_lists):
        neighbor_table[j] = (lst * max_deg)[:max_deg]

    j0 = rng.integers(0, n_simpl, size=trials)
    js = np.empty((trials, m + 1), dtype=np.int64)
    js[:, 0] = j0
    mode = rng.random(trials)
    uniform = rng.integers(0, n_simpl, size=(trials, m))
    picks = rng.integers(0, max_deg, size=(trials, m))
    clustered = neighbor_table[j0[:, None], picks]
    same = np.repeat(j0[:, None], m, axis=1)
    js[:, 1:] = np.where(
        (mode < 0.34)[:, None], same, np.where((mode < 0.67)[:, None], clustered, uniform)
    )

    alphas = rng.dirichlet(np.ones(tri.dim_s + 1), size=(trials, m + 1))
    corners = tri.labels[tri.simplices[js]]  # (trials, m+1, s+1, s)
    points = np.einsum("nlr,nlrs->nls", alphas, corners)
    fvals = np.einsum("nlr,nlr->nl", alphas, f[tri.simplices[js]])

    lhs = fvals[:, 1:].sum(axis=1) - m * fvals[:, 0]
    diff = points[:, 1:, :].sum(axis=1) - m * points[:, 0, :]
    if spec.norm == "one-norm":
        rhs = np.sum(np.abs(diff), axis=1)
    else:
        rhs = np.linalg.norm(diff, axis=1)
    return not bool(np.any(lhs > rhs + tol))


# -- serialization ------------------------------------------------------------------


def save_lifted_field(field, directory):
    os.makedirs(directory, exist_ok=True)
    arrayio.save_array(os.path.join(directory, "u.bin"), field.u)
    manifest = {
        "kind": "lifted_field",
        "files": {"u": "u.bin"},
        "shape": list(field.u.shape),
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)


def load_lifted_field(directory):
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    if manifest.get("kind") != "lifted_field":
        raise ValueError("%s: not a lifted field manifest" % directory)
    return LiftedField(arrayio.load_array(os.path.join(directory, manifest["files"]["u"])))


def save_dual_vars(dual, directory):
    os.makedirs(directory, exist_ok=True)
    n, n_simpl, s = dual.g.shape
    files = {}
    for name, mat in [
        ("p", dual.p),
        ("q", dual.q),
        ("g", dual.g.reshape(n, n_simpl * s)),
        ("t", dual.t),
    ]:
        files[name] = "%s.bin" % name
        arrayio.save_array(os.path.join(directory, files[name]), mat)
    manifest = {
        "kind": "dual_vars",
        "files": files,
        "dims": {"n": n, "simplices": n_simpl, "dim_s": s},
    }
    with open(os.path.join(directory, "dual_manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)


def load_dual_vars(directory):
    with open(os.path.join(directory, "dual_manifest.json")) as fh:
        manifest = json.load(fh)
    if manifest.get("kind") != "dual_vars":
        raise ValueError("%s: not a dual variable manifest" % directory)
    dims = manifest["dims"]
    arrays = {
        name: arrayio.load_array(os.path.join(directory, fname))
        for name, fname in manifest["files"].items()
    }
    g = arrays["g"].reshape(dims["n"], dims["simplices"], dims["dim_s"])
    return DualVars(arrays["p"], arrays["q"], g, arrays["t"])
