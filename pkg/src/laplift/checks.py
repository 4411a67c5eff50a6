"""Executable verification suites behind the ``check`` task.

Four independent suites validate the load-bearing guarantees on randomized
desk-scale instances: the lifted energy never exceeds the original energy at
feasible duals (weak duality), the constructed dual certificate is feasible
and tight, the reduced membership test for the lifted norm regularizer
agrees with direct sampling of its defining inequalities, and the closed
form projections agree with brute-force grid-refinement oracles.

Each suite accepts a fault flag that deliberately corrupts one computation;
the surrounding report machinery must then flag the suite as failed. This
exists purely to test the failure path.
"""

from dataclasses import dataclass

import numpy as np

from .energies import (
    DataTermSamples,
    REGULARIZER_KINDS,
    Regularizer,
    epigraph_project,
    reg_conj_batch,
)
from .grid import Grid
from .labelspace import build_disk, build_interval
from .lifting import (
    DualVars,
    KSetSpec,
    assemble,
    check_dual_feasibility,
    kset_constraint_count,
    kset_membership,
    kset_sampled_check,
    lift_dirac,
    lifted_energy_at,
    make_certificate,
    original_energy,
)
from .projections import project_simplex


@dataclass
class CheckOptions:
    duality_instances: int = 10
    certificate_count: int = 30
    kset_functions: int = 60
    kset_trials: int = 2000
    projection_points: int = 60
    seed: int = 0
    inject_fault: str = None

    def validate(self):
        counts = (
            self.duality_instances,
            self.certificate_count,
            self.kset_functions,
            self.kset_trials,
            self.projection_points,
        )
        if any(c < 1 for c in counts):
            raise ValueError("all suite sizes and trial counts must be >= 1")
        return self


# -- shared random instances -----------------------------------------------------


def random_instance(rng, two_dee=False):
    """Small random problem: grid, labels, data samples, regularizer."""
    if two_dee:
        grid = Grid((int(rng.integers(2, 4)), int(rng.integers(2, 4))))
        tri = build_disk(1.0, (4,))
    else:
        grid = Grid((int(rng.integers(3, 7)),))
        tri = build_interval(-1.0, 1.0, int(rng.integers(3, 7)))
    rho = DataTermSamples(rng.uniform(0.0, 1.0, (grid.n, tri.num_labels)))
    kind = REGULARIZER_KINDS[int(rng.integers(0, len(REGULARIZER_KINDS)))]
    weight = float(rng.choice([0.0, 0.1, 1.0]))
    return assemble(grid, tri, rho, Regularizer(kind, weight))


def random_vertex_field(rng, problem):
    """Pointwise field taking label-vertex values."""
    idx = rng.integers(0, problem.n_labels, size=problem.n_pixels)
    return problem.tri.labels[idx]


def slack_feasible_dual(rng, problem):
    """Feasible dual with strict slack: per-pixel linear p, matching g, and
    q lowered below the conjugate bound."""
    n, s = problem.n_pixels, problem.dim_s
    reg = problem.reg
    w = rng.normal(size=(n, s))
    if reg.weight == 0.0:
        w = np.zeros_like(w)
    elif reg.kind == "one-norm":
        w = np.clip(w, -reg.weight, reg.weight) * rng.uniform(0.2, 1.0)
    elif reg.kind == "euclid-norm":
        norms = np.maximum(np.linalg.norm(w, axis=1, keepdims=True), 1e-12)
        w = w / norms * reg.weight * rng.uniform(0.2, 1.0, size=(n, 1))
    conj = reg_conj_batch(reg, w)
    t = conj + rng.uniform(0.0, 0.5, size=n)
    p = w @ problem.tri.labels.T
    q = problem.rho.rho - t[:, None] - rng.uniform(0.0, 0.5, size=(n, 1))
    g = np.repeat(w[:, None, :], problem.n_simplices, axis=1)
    tt = np.repeat(t[:, None], problem.n_simplices, axis=1)
    return DualVars(p, q, g, tt)


# -- suites -----------------------------------------------------------------------


def suite_duality(options, fault=False):
    """Feasible duals never exceed the original energy at lifted point masses."""
    rng = np.random.default_rng(options.seed)
    worst = -np.inf
    tested = 0
    for i in range(options.duality_instances):
        problem = random_instance(rng, two_dee=(i % 3 == 2))
        anchor = random_vertex_field(rng, problem)
        duals = [make_certificate(problem, anchor), slack_feasible_dual(rng, problem)]
        for dual in duals:
            rep = check_dual_feasibility(problem, dual, tol=1e-8)
            if not rep.feasible:
                return {"passed": False, "reason": "constructed dual infeasible"}
            for _ in range(4):
                probe = random_vertex_field(rng, problem)
                lifted_value = lifted_energy_at(
                    problem, lift_dirac(problem.tri, probe), dual
                )
                original = original_energy(
                    problem.grid, problem.tri, problem.rho, problem.reg, probe
                )
                if fault:
                    original -= 1.0
                worst = max(worst, lifted_value - original)
                tested += 1
    return {"passed": bool(worst <= 1e-8), "max_gap_violation": worst, "tested": tested}


def suite_certificates(options, fault=False):
    """Certificate duals are feasible and attain the original energy."""
    rng = np.random.default_rng(options.seed + 1)
    worst_rel = 0.0
    worst_feas = 0.0
    for i in range(options.certificate_count):
        problem = random_instance(rng, two_dee=(i % 2 == 1))
        values = random_vertex_field(rng, problem)
        cert = make_certificate(problem, values)
        rep = check_dual_feasibility(problem, cert, tol=1e-8)
        worst_feas = max(worst_feas, max(rep.violations.values()))
        lifted_value = lifted_energy_at(problem, lift_dirac(problem.tri, values), cert)
        original = original_energy(
            problem.grid, problem.tri, problem.rho, problem.reg, values
        )
        if fault:
            lifted_value += 1e-3
        worst_rel = max(
            worst_rel, abs(lifted_value - original) / max(1.0, abs(original))
        )
    return {
        "passed": bool(worst_rel <= 1e-8 and worst_feas <= 1e-8),
        "max_relative_gap": worst_rel,
        "max_feasibility_violation": worst_feas,
    }


def _kset_function(rng, tri, norm, mode):
    labels = tri.labels
    s = tri.dim_s
    if mode in (0, 1):
        a = rng.normal(size=s)
        dual = np.max(np.abs(a)) if norm == "one-norm" else np.linalg.norm(a)
        target = rng.uniform(0.3, 0.9) if mode == 0 else rng.uniform(1.5, 3.0)
        a *= target / max(dual, 1e-12)
        return labels @ a + rng.normal()
    if mode == 2 and s == 1:
        # lower envelope of gentle lines: concave and 1-Lipschitz
        slopes = rng.uniform(-0.9, 0.9, size=3)
        offsets = rng.normal(size=3)
        return np.min(slopes[None, :] * labels + offsets[None, :], axis=1)
    return rng.normal(size=tri.num_labels) * tri.diameter


def suite_kset(options, fault=False):
    """Reduced membership test vs. sampled defining inequalities."""
    rng = np.random.default_rng(options.seed + 2)
    disagreements = 0
    count_bound_ok = True
    meshes = [
        build_interval(-1.0, 1.0, int(rng.integers(3, 11)))
        for _ in range(3)
    ] + [build_disk(1.0, (4,)), build_disk(1.0, (8, 16))]
    for i in range(options.kset_functions):
        tri = meshes[i % len(meshes)]
        norm = ("euclid-norm", "one-norm")[i % 2]
        m = (2, 4)[(i // 2) % 2]
        spec = KSetSpec(tri, norm=norm, m=m)
        mode = i % 4 if tri.dim_s == 1 else (i % 3 if i % 3 != 2 else 3)
        f = _kset_function(rng, tri, norm, mode)
        member = kset_membership(spec, f)
        if fault:
            member = not member
        sampled = kset_sampled_check(
            spec, f, options.kset_trials, rng_seed=int(rng.integers(0, 2**31))
        )
        if member != sampled:
            disagreements += 1
        if kset_constraint_count(spec) > tri.num_faces:
            count_bound_ok = False
    return {
        "passed": bool(disagreements == 0 and count_bound_ok),
        "disagreements": disagreements,
        "constraint_count_bound": count_bound_ok,
    }


# -- brute-force projection oracles ------------------------------------------------


def refine_minimize(fn, lo, hi, rounds=8, grid_n=25):
    """Minimize a smooth vectorized function over a box by grid refinement.

    Each round evaluates ``fn`` on a full grid, keeps the best node, and
    shrinks the box around it. For minima with nondegenerate curvature the
    position error contracts geometrically with the grid step.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=np.float64)).copy()
    hi = np.atleast_1d(np.asarray(hi, dtype=np.float64)).copy()
    best = None
    for _ in range(rounds):
        axes = [np.linspace(a, b, grid_n) for a, b in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
        vals = fn(mesh)
        best = mesh[np.argmin(vals)]
        span = (hi - lo) / (grid_n - 1)
        lo = best - 2.0 * span
        hi = best + 2.0 * span
    return best


def brute_force_project(member, point, lo, hi, rounds=6, grid_n=25):
    """Projection onto {x : member(x)} by feasible-grid refinement.

    Reliable at fine tolerances only for sets whose boundary is piecewise
    flat and aligned with candidate nodes; curved boundaries need the
    parametrized oracles below.
    """
    point = np.asarray(point, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64).copy()
    hi = np.asarray(hi, dtype=np.float64).copy()
    best = None
    for _ in range(rounds):
        axes = [np.linspace(a, b, grid_n) for a, b in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
        feasible = mesh[member(mesh)]
        if len(feasible) == 0:
            raise ValueError("search box does not intersect the feasible set")
        d2 = np.sum((feasible - point) ** 2, axis=1)
        best = feasible[np.argmin(d2)]
        span = (hi - lo) / (grid_n - 1)
        lo = best - 2.0 * span
        hi = best + 2.0 * span
    return best


def brute_force_interval_project(q, lo, hi, rounds=8, grid_n=41):
    """1-D grid-refinement projection onto [lo, hi] (hi may be +inf)."""
    top = hi if np.isfinite(hi) else max(lo + 1.0, q + 1.0)
    a, b = float(lo), float(top)
    best = None
    for _ in range(rounds):
        xs = np.linspace(a, b, grid_n)
        best = xs[np.argmin((xs - q) ** 2)]
        span = (b - a) / (grid_n - 1)
        a = max(best - 2.0 * span, lo)
        b = min(best + 2.0 * span, top)
    return best


def brute_force_epigraph_project(reg, g, t):
    """Grid-refinement projection onto the conjugate epigraph.

    Curved boundary pieces are searched through their parametrization so
    the refinement keeps full positional accuracy; flat pieces use plain
    interval or feasible-grid refinement.
    """
    g = np.atleast_1d(np.asarray(g, dtype=np.float64))
    t = float(t)
    q = np.append(g, t)
    if _epi_member(reg)(q[None, :] + 0.0)[0]:
        return q
    s = len(g)
    if reg.kind == "squared-euclid":
        a = 1.0 / (2.0 * reg.weight)

        def fn(mesh):
            heights = a * np.sum(mesh * mesh, axis=1)
            return np.sum((mesh - g) ** 2, axis=1) + (heights - t) ** 2

        reach = np.linalg.norm(g) + np.sqrt(max(t, 0.0)) + 1.0
        gg = refine_minimize(fn, -reach * np.ones(s), reach * np.ones(s))
        return np.append(gg, a * gg @ gg)
    if reg.kind == "one-norm":
        coords = [
            brute_force_interval_project(gi, -reg.weight, reg.weight) for gi in g
        ]
        return np.asarray(coords + [brute_force_interval_project(t, 0.0, np.inf)])
    # euclid-norm: the set is (ball) x (halfline), so the projection factors
    radius = reg.weight
    t_part = brute_force_interval_project(t, 0.0, np.inf)
    if np.linalg.norm(g) <= radius:
        return np.append(g, t_part)
    if s == 2:
        def on_circle(mesh):
            gg = radius * np.column_stack([np.cos(mesh[:, 0]), np.sin(mesh[:, 0])])
            return np.sum((gg - g) ** 2, axis=1)

        theta = refine_minimize(on_circle, [-np.pi], [np.pi])[0]
        g_part = radius * np.array([np.cos(theta), np.sin(theta)])
    else:
        g_part = np.array([brute_force_interval_project(g[0], -radius, radius)])
    return np.append(g_part, t_part)


def brute_force_simplex_project(point, rounds=6, grid_n=25):
    """Grid-refinement projection onto the unit simplex.

    The simplex is parametrized by its first L-1 coordinates; the distance
    uses all L coordinates.
    """
    point = np.asarray(point, dtype=np.float64)
    free = len(point) - 1
    lo = np.zeros(free)
    hi = np.ones(free)
    best = None
    for _ in range(rounds):
        axes = [np.linspace(a, b, grid_n) for a, b in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, free)
        mesh = np.clip(mesh, 0.0, None)
        last = 1.0 - mesh.sum(axis=1)
        ok = last >= 0.0
        mesh, last = mesh[ok], last[ok]
        full = np.column_stack([mesh, last])
        d2 = np.sum((full - point) ** 2, axis=1)
        idx = np.argmin(d2)
        best = full[idx]
        span = (hi - lo) / (grid_n - 1)
        lo = np.maximum(best[:free] - 2.0 * span, 0.0)
        hi = np.minimum(best[:free] + 2.0 * span, 1.0)
    return best


def suite_projections(options, fault=False):
    """Closed-form projections vs. oracles, plus idempotence."""
    rng = np.random.default_rng(options.seed + 3)
    n_pts = options.projection_points
    max_dev = 0.0
    max_idem = 0.0

    for _ in range(n_pts):
        v = rng.uniform(-1.5, 1.5, size=3)
        got = project_simplex(v)
        if fault:
            got = got + 1e-3
        oracle = brute_force_simplex_project(v)
        max_dev = max(max_dev, float(np.linalg.norm(got - oracle)))
        max_idem = max(
            max_idem, float(np.linalg.norm(project_simplex(got) - got))
        )

    for kind in ("one-norm", "euclid-norm", "squared-euclid"):
        reg = Regularizer(kind, 1.0)
        for _ in range(n_pts):
            g = rng.uniform(-3.0, 3.0, size=2)
            t = float(rng.uniform(-2.0, 4.0))
            gp, tp = epigraph_project(reg, g, t)
            if fault:
                tp = tp + 1e-3
            oracle = brute_force_epigraph_project(reg, g, t)
            dev = np.linalg.norm(np.append(gp, tp) - oracle)
            max_dev = max(max_dev, float(dev))
            gp2, tp2 = epigraph_project(reg, gp, tp)
            max_idem = max(
                max_idem,
                float(np.linalg.norm(np.append(gp2, tp2) - np.append(gp, tp))),
            )
    return {
        "passed": bool(max_dev <= 1e-4 and max_idem <= 1e-9),
        "max_oracle_deviation": max_dev,
        "max_idempotence_drift": max_idem,
    }


def _epi_member(reg):
    def member(candidates):
        g = candidates[:, :-1]
        t = candidates[:, -1]
        if reg.kind == "squared-euclid":
            return np.sum(g * g, axis=1) / (2.0 * reg.weight) <= t
        if reg.kind == "one-norm":
            return (np.max(np.abs(g), axis=1) <= reg.weight) & (t >= 0.0)
        return (np.linalg.norm(g, axis=1) <= reg.weight) & (t >= 0.0)

    return member


SUITES = {
    "duality": suite_duality,
    "certificates": suite_certificates,
    "kset": suite_kset,
    "projections": suite_projections,
}


def run_checks(options=None):
    """Run all verification suites; returns {passed, suites: {...}}."""
    options = (options or CheckOptions()).validate()
    if options.inject_fault is not None and options.inject_fault not in SUITES:
        raise ValueError("unknown fault target %r" % options.inject_fault)
    suites = {}
    for name, fn in SUITES.items():
        suites[name] = fn(options, fault=(options.inject_fault == name))
    return {"passed": all(s["passed"] for s in suites.values()), "suites": suites}
