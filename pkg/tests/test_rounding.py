import numpy as np
import pytest
from hypothesis import given, strategies as st

from laplift.grid import Grid
from laplift.labelspace import build_disk, build_interval, embed_dirac_many
from laplift.lifting import LiftedField, lift_dirac
from laplift.rounding import (
    export_rounded_csv,
    extract_modes,
    round_mean,
    round_threshold,
)


@pytest.fixture
def tri3():
    return build_interval(-1.0, 1.0, 3)


class TestRoundMean:
    def test_one_hot_rows(self, tri3):
        u = np.eye(3)
        out = round_mean(tri3, LiftedField(u))
        assert out.values[:, 0] == pytest.approx([-1.0, 0.0, 1.0])

    def test_symmetric_mixture_averages_to_zero(self, tri3):
        out = round_mean(tri3, np.array([[0.5, 0.0, 0.5]]))
        assert out.values[0, 0] == pytest.approx(0.0)

    def test_inverts_dirac_embedding(self, rng):
        tri = build_disk(1.0, (8, 16))
        pts = rng.uniform(-0.5, 0.5, size=(100, 2))
        lifted = lift_dirac(tri, pts)
        out = round_mean(tri, lifted)
        assert np.max(np.abs(out.values - pts)) < 1e-10


class TestRoundThreshold:
    def test_mixture_low_threshold(self, tri3):
        out = round_threshold(tri3, np.array([[0.5, 0.0, 0.5]]), 0.4)
        assert out.values[0, 0] == -1.0

    def test_mixture_high_threshold(self, tri3):
        out = round_threshold(tri3, np.array([[0.5, 0.0, 0.5]]), 0.6)
        assert out.values[0, 0] == 1.0

    def test_one_hot_any_threshold(self, tri3):
        row = np.array([[0.0, 1.0, 0.0]])
        for s in (0.0, 0.3, 0.9):
            assert round_threshold(tri3, row, s).values[0, 0] == 0.0

    def test_invalid_threshold(self, tri3):
        with pytest.raises(ValueError):
            round_threshold(tri3, np.eye(3), 1.0)
        with pytest.raises(ValueError):
            round_threshold(tri3, np.eye(3), -0.1)

    def test_requires_1d_labels(self):
        tri = build_disk(1.0, (4,))
        with pytest.raises(ValueError):
            round_threshold(tri, np.ones((1, 5)) / 5.0, 0.5)

    @given(st.floats(0.0, 0.99), st.floats(0.0, 0.99))
    def test_monotone_in_threshold(self, s1, s2):
        tri = build_interval(-1.0, 1.0, 5)
        u = np.array([[0.2, 0.3, 0.1, 0.25, 0.15], [0.0, 0.0, 0.5, 0.5, 0.0]])
        lo, hi = sorted((s1, s2))
        a = round_threshold(tri, u, lo).values
        b = round_threshold(tri, u, hi).values
        assert np.all(a <= b)


class TestExtractModes:
    def test_one_hot_single_mode(self, tri3):
        modes = extract_modes(tri3, np.array([[0.0, 1.0, 0.0]]), 0.1, 4)
        assert len(modes[0]) == 1
        pos, weight = modes[0][0]
        assert pos == pytest.approx([0.0])
        assert weight == pytest.approx(1.0)

    def test_split_mixture_two_modes(self, tri3):
        modes = extract_modes(tri3, np.array([[0.5, 0.0, 0.5]]), 0.1, 4)
        assert len(modes[0]) == 2
        positions = sorted(float(p[0]) for p, _ in modes[0])
        assert positions == pytest.approx([-1.0, 1.0])
        assert all(w == pytest.approx(0.5) for _, w in modes[0])

    def test_connected_support_single_mode(self, tri3):
        modes = extract_modes(tri3, np.array([[0.25, 0.5, 0.25]]), 0.1, 4)
        assert len(modes[0]) == 1
        pos, weight = modes[0][0]
        assert pos == pytest.approx([0.0])
        assert weight == pytest.approx(1.0)

    def test_mass_tol_drops_light_modes(self, tri3):
        modes = extract_modes(tri3, np.array([[0.05, 0.0, 0.95]]), 0.1, 4)
        assert len(modes[0]) == 1
        assert modes[0][0][0] == pytest.approx([1.0])

    def test_max_modes_truncates_by_weight(self):
        tri = build_interval(-1.0, 1.0, 5)
        u = np.array([[0.5, 0.0, 0.3, 0.0, 0.2]])
        modes = extract_modes(tri, u, 0.05, 2)
        weights = [w for _, w in modes[0]]
        assert weights == pytest.approx([0.5, 0.3])

    def test_weights_sum_to_one_without_pruning(self, rng):
        tri = build_interval(-1.0, 1.0, 6)
        rows = rng.dirichlet(np.ones(6) * 5.0, size=20)
        rows = np.maximum(rows, 2e-3)
        rows /= rows.sum(axis=1, keepdims=True)
        modes = extract_modes(tri, rows, 1e-6, 6)
        for row_modes in modes:
            total = sum(w for _, w in row_modes)
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_weights_never_exceed_one(self, rng):
        tri = build_disk(1.0, (4,))
        rows = rng.dirichlet(np.ones(5), size=30)
        modes = extract_modes(tri, rows, 0.05, 5)
        for row_modes in modes:
            assert sum(w for _, w in row_modes) <= 1.0 + 1e-9

    def test_parameter_validation(self, tri3):
        with pytest.raises(ValueError):
            extract_modes(tri3, np.eye(3), 0.0, 3)
        with pytest.raises(ValueError):
            extract_modes(tri3, np.eye(3), 0.5, 0)


class TestCsvExport:
    def test_1d_layout(self, tmp_path, tri3):
        grid = Grid((3,))
        out = round_mean(tri3, LiftedField(np.eye(3)))
        path = tmp_path / "mean.csv"
        export_rounded_csv(grid, out, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "ix,v0"
        assert len(lines) == 4
        assert float(lines[1].split(",")[1]) == -1.0

    def test_2d_layout(self, tmp_path, rng):
        grid = Grid((2, 3))
        tri = build_disk(1.0, (4,))
        rows = embed_dirac_many(tri, rng.uniform(-0.4, 0.4, size=(6, 2)))
        out = round_mean(tri, LiftedField(rows))
        path = tmp_path / "mean.csv"
        export_rounded_csv(grid, out, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "ix,iy,v0,v1"
        assert len(lines) == 7
        assert lines[1].split(",")[:2] == ["0", "0"]
        assert lines[4].split(",")[:2] == ["0", "1"]
