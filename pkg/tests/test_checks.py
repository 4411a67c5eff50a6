import numpy as np
import pytest

from laplift.checks import (
    CheckOptions,
    brute_force_epigraph_project,
    brute_force_simplex_project,
    run_checks,
)
from laplift.energies import Regularizer


def fast_options(**kwargs):
    base = dict(
        duality_instances=4,
        certificate_count=6,
        kset_functions=12,
        kset_trials=800,
        projection_points=8,
        seed=0,
    )
    base.update(kwargs)
    return CheckOptions(**base)


class TestRunChecks:
    def test_default_suites_pass(self):
        report = run_checks(fast_options())
        assert report["passed"], report
        assert set(report["suites"]) == {
            "duality", "certificates", "kset", "projections",
        }

    @pytest.mark.parametrize(
        "target", ["duality", "certificates", "kset", "projections"]
    )
    def test_fault_injection_fails_named_suite(self, target):
        report = run_checks(fast_options(inject_fault=target))
        assert not report["passed"]
        assert not report["suites"][target]["passed"]
        others = [n for n in report["suites"] if n != target]
        assert all(report["suites"][n]["passed"] for n in others)

    def test_unknown_fault_target(self):
        with pytest.raises(ValueError):
            run_checks(fast_options(inject_fault="nonsense"))

    def test_zero_trials_rejected(self):
        with pytest.raises(ValueError):
            fast_options(kset_trials=0).validate()


class TestOracles:
    def test_simplex_oracle_known_points(self):
        assert brute_force_simplex_project(np.array([0.6, 0.6])) == pytest.approx(
            [0.5, 0.5], abs=1e-5
        )
        assert brute_force_simplex_project(np.array([1.2, -0.2])) == pytest.approx(
            [1.0, 0.0], abs=1e-5
        )

    def test_epigraph_oracle_inside_point(self):
        reg = Regularizer("squared-euclid", 1.0)
        out = brute_force_epigraph_project(reg, [0.5, 0.0], 1.0)
        assert out == pytest.approx([0.5, 0.0, 1.0])

    def test_epigraph_oracle_parabola_frozen(self):
        reg = Regularizer("squared-euclid", 1.0)
        out = brute_force_epigraph_project(reg, [2.0], 0.0)
        assert out == pytest.approx([1.17951, 0.69562], abs=1e-4)

    def test_epigraph_oracle_ball_corner(self):
        reg = Regularizer("euclid-norm", 1.0)
        out = brute_force_epigraph_project(reg, [2.0, 0.0], -1.0)
        assert out == pytest.approx([1.0, 0.0, 0.0], abs=1e-4)
