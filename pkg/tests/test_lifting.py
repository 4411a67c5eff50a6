import numpy as np
import pytest

from laplift.energies import DataTermSamples, Regularizer
from laplift.grid import Grid, laplacian_apply
from laplift.labelspace import build_disk, build_interval, simplex_gradients
from laplift.lifting import (
    DualVars,
    KSetSpec,
    LiftedField,
    assemble,
    check_dual_feasibility,
    dual_lower_bound,
    kset_constraint_count,
    kset_membership,
    kset_sampled_check,
    lift_dirac,
    lifted_energy_at,
    load_dual_vars,
    load_lifted_field,
    make_certificate,
    original_energy,
    repair_dual,
    save_dual_vars,
    save_lifted_field,
)


def small_problem(n=3, labels=3, weight=1.0, kind="squared-euclid", seed=0):
    rng = np.random.default_rng(seed)
    grid = Grid((n,))
    tri = build_interval(-1.0, 1.0, labels)
    rho = DataTermSamples(rng.uniform(0.0, 1.0, (n, labels)))
    return assemble(grid, tri, rho, Regularizer(kind, weight))


def disk_problem(shape=(2, 3), weight=0.5, kind="squared-euclid", seed=1):
    rng = np.random.default_rng(seed)
    grid = Grid(shape)
    tri = build_disk(1.0, (4,))
    rho = DataTermSamples(rng.uniform(0.0, 1.0, (grid.n, tri.num_labels)))
    return assemble(grid, tri, rho, Regularizer(kind, weight))


def lagrangian_by_loops(problem, x, y):
    """Direct evaluation of the saddle bilinear form, term by term."""
    primal = problem.split_primal(x)
    dual = problem.split_dual(y)
    u, lam, mu, nu = primal["u"], primal["lam"], primal["mu"], primal["nu"]
    p, q, g, t = dual["p"], dual["q"], dual["g"], dual["t"]
    tri, grid, rho = problem.tri, problem.grid, problem.rho.rho

    total = float(np.sum(u * (laplacian_apply(grid, p) + q)))
    for i in range(problem.n_pixels):
        for j, verts in enumerate(tri.simplices):
            for r, k in enumerate(verts):
                total -= lam[i, j, r] * (q[i, k] + t[i, j] - rho[i, k])
        for f, face in enumerate(tri.interior_faces):
            total -= mu[i, f] * float(
                (g[i, face.j2] - g[i, face.j1]) @ face.normal
            )
        for j in range(problem.n_simplices):
            grad_p = tri.grads[j] @ p[i, tri.simplices[j]]
            total -= float(nu[i, j] @ (g[i, j] - grad_p))
    return total


class TestAssemble:
    def test_multiplier_counts(self):
        problem = small_problem(n=3, labels=3)
        assert problem.primal_shapes["lam"] == (3, 2, 2)  # 12 entries
        assert problem.primal_shapes["mu"] == (3, 1)
        assert problem.primal_shapes["nu"] == (3, 2, 1)

    def test_operator_adjointness(self, rng):
        for problem in (small_problem(), disk_problem()):
            x = rng.standard_normal(problem.primal_dim)
            y = rng.standard_normal(problem.dual_dim)
            lhs = (problem.K @ x) @ y
            rhs = x @ (problem.KT @ y)
            assert lhs == pytest.approx(rhs, rel=1e-10)

    @pytest.mark.parametrize("make", [small_problem, disk_problem], ids=["1d", "2d"])
    def test_matches_loop_lagrangian(self, make, rng):
        problem = make()
        for _ in range(3):
            x = rng.standard_normal(problem.primal_dim)
            y = rng.standard_normal(problem.dual_dim)
            fast = float((problem.K @ x) @ y + problem.c @ x)
            slow = lagrangian_by_loops(problem, x, y)
            assert fast == pytest.approx(slow, rel=1e-10, abs=1e-10)

    def test_shape_mismatch(self):
        grid = Grid((3,))
        tri = build_interval(-1.0, 1.0, 3)
        with pytest.raises(ValueError):
            assemble(grid, tri, np.zeros((2, 3)), Regularizer("one-norm", 1.0))


class TestOriginalEnergy:
    def test_zero_data_constant_field(self):
        problem = small_problem()
        rho0 = DataTermSamples(np.zeros((3, 3)))
        grid, tri = problem.grid, problem.tri
        val = original_energy(grid, tri, rho0, Regularizer("squared-euclid", 3.0),
                              np.zeros((3, 1)))
        assert val == 0.0

    def test_hat_field_stencil_arithmetic(self):
        grid = Grid((3,))
        tri = build_interval(-1.0, 1.0, 3)
        rho = DataTermSamples(np.zeros((3, 3)))
        reg = Regularizer("squared-euclid", 1.0)
        vals = np.array([[0.0], [1.0], [0.0]])
        # stencil response (1, -2, 1); energy 0.5 * (1 + 4 + 1)
        assert original_energy(grid, tri, rho, reg, vals) == pytest.approx(3.0)

    def test_data_interpolation_between_labels(self):
        grid = Grid((1,))
        tri = build_interval(0.0, 1.0, 2)
        rho = DataTermSamples(np.array([[2.0, 6.0]]))
        reg = Regularizer("squared-euclid", 0.0)
        assert original_energy(grid, tri, rho, reg, [[0.25]]) == pytest.approx(3.0)

    def test_out_of_range_value(self):
        problem = small_problem()
        with pytest.raises(Exception):
            original_energy(problem.grid, problem.tri, problem.rho, problem.reg,
                            [[2.0], [0.0], [0.0]])


class TestLiftedEnergy:
    def test_zero_dual(self):
        problem = small_problem()
        u = lift_dirac(problem.tri, np.zeros((3, 1)))
        zero = DualVars(np.zeros((3, 3)), np.zeros((3, 3)),
                        np.zeros((3, 2, 1)), np.zeros((3, 2)))
        assert lifted_energy_at(problem, u, zero) == 0.0

    def test_one_hot_rows_pick_entries(self, rng):
        problem = small_problem()
        p = rng.standard_normal((3, 3))
        q = rng.standard_normal((3, 3))
        dual = DualVars(p, q, np.zeros((3, 2, 1)), np.zeros((3, 2)))
        ks = rng.integers(0, 3, size=3)
        u = np.zeros((3, 3))
        u[np.arange(3), ks] = 1.0
        inner = laplacian_apply(problem.grid, p) + q
        expected = inner[np.arange(3), ks].sum()
        assert lifted_energy_at(problem, LiftedField(u), dual) == pytest.approx(expected)


class TestCertificate:
    def test_constant_field_reduces_to_data(self):
        problem = small_problem(weight=2.0)
        vals = np.full((3, 1), problem.tri.labels[1, 0])
        cert = make_certificate(problem, vals)
        assert np.allclose(cert.p, 0.0)
        assert np.allclose(cert.q, problem.rho.rho)
        value = lifted_energy_at(problem, lift_dirac(problem.tri, vals), cert)
        assert value == pytest.approx(problem.rho.rho[:, 1].sum())

    def test_hat_field_value(self):
        grid = Grid((3,))
        tri = build_interval(-1.0, 1.0, 3)
        rho = DataTermSamples(np.zeros((3, 3)))
        problem = assemble(grid, tri, rho, Regularizer("squared-euclid", 1.0))
        vals = np.array([[0.0], [1.0], [0.0]])
        cert = make_certificate(problem, vals)
        report = check_dual_feasibility(problem, cert, tol=1e-8)
        assert report.feasible
        value = lifted_energy_at(problem, lift_dirac(tri, vals), cert)
        assert value == pytest.approx(3.0)

    @pytest.mark.parametrize("kind", ["squared-euclid", "one-norm", "euclid-norm"])
    @pytest.mark.parametrize("weight", [0.0, 0.4, 1.0])
    def test_tightness_random_instances(self, kind, weight, rng):
        for trial in range(6):
            problem = (small_problem(n=4, labels=4, weight=weight, kind=kind,
                                     seed=trial)
                       if trial % 2 == 0
                       else disk_problem(weight=weight, kind=kind, seed=trial))
            idx = rng.integers(0, problem.n_labels, problem.n_pixels)
            vals = problem.tri.labels[idx]
            cert = make_certificate(problem, vals)
            report = check_dual_feasibility(problem, cert, tol=1e-8)
            assert report.feasible, report.violations
            lifted = lifted_energy_at(problem, lift_dirac(problem.tri, vals), cert)
            original = original_energy(problem.grid, problem.tri, problem.rho,
                                       problem.reg, vals)
            assert lifted == pytest.approx(original, rel=1e-8, abs=1e-10)


class TestDualFeasibility:
    def test_zero_dual_feasible_for_nonnegative_data(self):
        problem = small_problem()
        zero = DualVars(np.zeros((3, 3)), np.zeros((3, 3)),
                        np.zeros((3, 2, 1)), np.zeros((3, 2)))
        assert check_dual_feasibility(problem, zero).feasible

    def test_concavity_detection(self):
        problem = small_problem()
        tri = problem.tri
        hat = np.tile([0.0, 1.0, 0.0], (3, 1))
        g_hat = simplex_gradients(tri, hat)
        dual = DualVars(hat, np.zeros((3, 3)) - 10.0, g_hat, np.zeros((3, 2)))
        report = check_dual_feasibility(problem, dual)
        assert report.violations["concavity"] == pytest.approx(0.0, abs=1e-12)

        valley = -hat
        dual_v = DualVars(valley, np.zeros((3, 3)) - 10.0,
                          simplex_gradients(tri, valley), np.zeros((3, 2)))
        report_v = check_dual_feasibility(problem, dual_v)
        assert not report_v.feasible
        assert report_v.violations["concavity"] == pytest.approx(2.0)

    def test_gradient_consistency_detection(self):
        problem = small_problem()
        dual = DualVars(np.zeros((3, 3)), np.zeros((3, 3)) - 1.0,
                        np.full((3, 2, 1), 0.5), np.ones((3, 2)))
        report = check_dual_feasibility(problem, dual)
        assert report.violations["gradient_consistency"] == pytest.approx(0.5)


class TestWeakDuality:
    @pytest.mark.parametrize("kind", ["squared-euclid", "one-norm", "euclid-norm"])
    def test_certificate_duals_bound_other_fields(self, kind, rng):
        # the feasible dual built at one field bounds the energy of any other
        for trial in range(5):
            problem = small_problem(n=4, labels=4, weight=0.6, kind=kind, seed=trial)
            anchor = problem.tri.labels[rng.integers(0, 4, 4)]
            cert = make_certificate(problem, anchor)
            for _ in range(6):
                other = problem.tri.labels[rng.integers(0, 4, 4)]
                lifted = lifted_energy_at(problem, lift_dirac(problem.tri, other), cert)
                original = original_energy(problem.grid, problem.tri, problem.rho,
                                           problem.reg, other)
                assert lifted <= original + 1e-8

    def test_dual_lower_bound_below_all_vertex_fields(self, rng):
        problem = small_problem(n=4, labels=3, weight=0.3, seed=9)
        anchor = problem.tri.labels[rng.integers(0, 3, 4)]
        cert = make_certificate(problem, anchor)
        bound = dual_lower_bound(problem, cert)
        idx = np.stack(np.meshgrid(*[np.arange(3)] * 4, indexing="ij"), axis=-1)
        for assignment in idx.reshape(-1, 4):
            vals = problem.tri.labels[assignment]
            assert bound <= original_energy(
                problem.grid, problem.tri, problem.rho, problem.reg, vals
            ) + 1e-9

    def test_repair_restores_fenchel_and_epigraph(self, rng):
        problem = small_problem(weight=0.8)
        dual = DualVars(
            rng.standard_normal((3, 3)),
            rng.standard_normal((3, 3)) + 2.0,
            rng.standard_normal((3, 2, 1)),
            rng.standard_normal((3, 2)) - 1.0,
        )
        repaired = repair_dual(problem, dual)
        report = check_dual_feasibility(problem, repaired, tol=1e-9)
        assert report.violations["fenchel"] <= 1e-9
        assert report.violations["epigraph"] <= 1e-9


class TestLiftedFieldValidation:
    def test_accepts_valid_rows(self):
        LiftedField(np.array([[0.5, 0.5], [1.0, 0.0]])).validate()

    def test_rejects_bad_rows(self):
        with pytest.raises(ValueError):
            LiftedField(np.array([[0.7, 0.7]])).validate()
        with pytest.raises(ValueError):
            LiftedField(np.array([[1.5, -0.5]])).validate()


class TestKSet:
    def test_concave_tent_is_member(self):
        tri = build_interval(-1.0, 1.0, 3)
        spec = KSetSpec(tri, norm="euclid-norm", m=2)
        assert kset_membership(spec, [-1.0, 0.0, -1.0])

    def test_steep_tent_violates_lipschitz(self):
        tri = build_interval(-1.0, 1.0, 3)
        spec = KSetSpec(tri, norm="euclid-norm", m=2)
        assert not kset_membership(spec, [0.0, 1.5, 0.0])

    def test_convex_kink_violates_concavity(self):
        tri = build_interval(-1.0, 1.0, 3)
        spec = KSetSpec(tri, norm="euclid-norm", m=2)
        assert not kset_membership(spec, [0.0, -1.0, 0.0])

    def test_sampled_check_agrees_on_members(self, rng):
        tri = build_disk(1.0, (4,))
        spec = KSetSpec(tri, norm="euclid-norm", m=2)
        a = np.array([0.5, -0.4])
        f = tri.labels @ a + 0.3
        assert kset_membership(spec, f)
        assert kset_sampled_check(spec, f, 4000, rng_seed=7)

    def test_sampled_check_finds_lipschitz_violation_m1(self):
        tri = build_interval(-1.0, 1.0, 3)
        spec = KSetSpec(tri, norm="euclid-norm", m=1)
        assert not kset_sampled_check(spec, [0.0, 1.5, 0.0], 2000, rng_seed=3)

    def test_constant_function_is_member(self):
        tri = build_disk(1.0, (8, 16))
        spec = KSetSpec(tri, norm="one-norm", m=4)
        f = np.full(25, 2.2)
        assert kset_membership(spec, f)
        assert kset_sampled_check(spec, f, 2000, rng_seed=5)

    def test_constraint_count_bounded_by_faces(self):
        for tri in [build_interval(-1, 1, 2), build_interval(-1, 1, 8),
                    build_disk(1.0, (4,)), build_disk(1.0, (8, 16))]:
            for norm in ("one-norm", "euclid-norm"):
                spec = KSetSpec(tri, norm=norm, m=2)
                assert kset_constraint_count(spec) <= tri.num_faces

    def test_trials_must_be_positive(self):
        spec = KSetSpec(build_interval(-1, 1, 3))
        with pytest.raises(ValueError):
            kset_sampled_check(spec, [0.0, 0.0, 0.0], 0)

    def test_norm_kind_validated(self):
        with pytest.raises(ValueError):
            KSetSpec(build_interval(-1, 1, 3), norm="max-norm")


class TestSerialization:
    def test_lifted_field_round_trip(self, tmp_path, rng):
        field = LiftedField(rng.dirichlet(np.ones(4), size=6))
        save_lifted_field(field, tmp_path)
        loaded = load_lifted_field(tmp_path)
        assert np.array_equal(loaded.u, field.u)

    def test_dual_vars_round_trip(self, tmp_path, rng):
        dual = DualVars(
            rng.standard_normal((4, 5)),
            rng.standard_normal((4, 5)),
            rng.standard_normal((4, 3, 2)),
            rng.standard_normal((4, 3)),
        )
        save_dual_vars(dual, tmp_path)
        loaded = load_dual_vars(tmp_path)
        for name in ("p", "q", "g", "t"):
            assert np.array_equal(getattr(loaded, name), getattr(dual, name))
