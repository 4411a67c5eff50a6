import json

import numpy as np
import pytest

from laplift.energies import Regularizer
from laplift.images import Image, make_blob_image, make_texture_image, warp
from laplift.labelspace import build_disk
from laplift.registration import (
    RegistrationConfig,
    endpoint_error,
    run_registration,
    ssd,
    write_deformation_csv,
)
from laplift.solver import SolverConfig


class TestEndpointError:
    def test_exact_match(self):
        d = np.ones((10, 2))
        out = endpoint_error(d, d, np.ones(10, dtype=bool))
        assert out == {"mean": 0.0, "max": 0.0}

    def test_unit_offset(self):
        gt = np.zeros((6, 2))
        d = gt + [1.0, 0.0]
        out = endpoint_error(d, gt, np.ones(6, dtype=bool))
        assert out["mean"] == pytest.approx(1.0)
        assert out["max"] == pytest.approx(1.0)

    def test_mean_bounded_by_max(self, rng):
        d = rng.normal(size=(20, 2))
        gt = rng.normal(size=(20, 2))
        mask = rng.random(20) > 0.3
        out = endpoint_error(d, gt, mask)
        assert out["mean"] <= out["max"]

    def test_empty_mask(self):
        with pytest.raises(ValueError):
            endpoint_error(np.zeros((4, 2)), np.zeros((4, 2)), np.zeros(4, bool))


class TestSsd:
    def test_identical_images(self, rng):
        v = rng.uniform(0, 1, (5, 5))
        assert ssd(v, v) == 0.0

    def test_known_difference(self):
        a = np.zeros((2, 2))
        b = np.full((2, 2), 0.5)
        assert ssd(a, b) == pytest.approx(4 * 0.25)


class TestDeformationCsv:
    def test_layout(self, tmp_path):
        d = np.arange(12, dtype=float).reshape(6, 2)
        path = tmp_path / "def.csv"
        write_deformation_csv(path, (2, 3), d)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "x,y,dx,dy"
        assert len(lines) == 7
        x, y, dx, dy = lines[4].split(",")
        assert (x, y) == ("0", "1")
        assert float(dx) == 6.0


def quick_solver(max_iter=6000):
    return SolverConfig(max_iter=max_iter, check_every=50)


class TestRunRegistration:
    def test_identity_pair_near_zero_deformation(self, tmp_path):
        tmpl = make_blob_image((12, 12), seed=6, max_offset=3.0)
        cfg = RegistrationConfig(
            reference=tmpl, template=tmpl,
            tri=build_disk(2.0, (4, 8)),
            reg=Regularizer("squared-euclid", 0.05),
            solver=quick_solver(), out_dir=str(tmp_path), make_figures=False,
        )
        summary = run_registration(cfg)
        d = np.loadtxt(tmp_path / "deformation.csv", delimiter=",", skiprows=1)
        norms = np.linalg.norm(d[:, 2:], axis=1)
        assert norms.mean() <= 0.2
        assert summary["ssd_before"] == 0.0
        assert summary["ssd_after"] <= 1e-6

    def test_shift_recovery_and_artifacts(self, tmp_path):
        tmpl = make_texture_image((16, 16), seed=5, smooth=1.6, taper_radius=5.5)
        shift = np.tile([2.0, 0.0], (256, 1))
        ref = warp(tmpl, shift)
        cfg = RegistrationConfig(
            reference=ref, template=tmpl,
            tri=build_disk(3.0, (8, 16)),
            reg=Regularizer("squared-euclid", 0.02),
            solver=quick_solver(9000), out_dir=str(tmp_path), make_figures=False,
            gt_displacement=shift,
        )
        summary = run_registration(cfg)
        assert summary["ssd_after"] <= 0.10 * summary["ssd_before"]
        assert summary["epe_mean"] <= 1.0
        for name in ("deformation.csv", "warped.pgm", "diff_before.pgm",
                     "diff_after.pgm", "summary.json"):
            assert (tmp_path / name).exists()
        on_disk = json.loads((tmp_path / "summary.json").read_text())
        assert on_disk["ssd_after"] == summary["ssd_after"]

    @pytest.mark.slow
    def test_ssd_monotone_over_weight_sweep(self, tmp_path):
        # wiring sanity: stronger smoothing never helps the shift fit
        # (nondecreasing up to a small solver-accuracy slack, not a theorem)
        tmpl = make_texture_image((12, 12), seed=8, smooth=1.5, taper_radius=4.0)
        ref = warp(tmpl, np.tile([1.5, 0.0], (144, 1)))
        results = []
        for i, lam in enumerate((0.02, 0.5, 5.0)):
            cfg = RegistrationConfig(
                reference=ref, template=tmpl,
                tri=build_disk(2.5, (4, 8)),
                reg=Regularizer("squared-euclid", lam),
                solver=SolverConfig(max_iter=30000, check_every=100),
                out_dir=str(tmp_path / str(i)), make_figures=False,
            )
            summary = run_registration(cfg)
            assert summary["termination"] == "converged"
            results.append(summary["ssd_after"])
            assert summary["ssd_after"] <= 0.10 * summary["ssd_before"]
        assert results[0] <= 1.01 * results[1] + 1e-9
        assert results[1] <= 1.01 * results[2] + 1e-9

    def test_figures_written_when_enabled(self, tmp_path):
        tmpl = make_blob_image((10, 10), seed=3, max_offset=2.0)
        cfg = RegistrationConfig(
            reference=tmpl, template=tmpl,
            tri=build_disk(1.5, (4,)),
            reg=Regularizer("squared-euclid", 0.05),
            solver=quick_solver(300), out_dir=str(tmp_path), make_figures=True,
        )
        run_registration(cfg)
        for name in ("registration_overview.png", "label_mesh.png", "residuals.png"):
            assert (tmp_path / name).exists()
