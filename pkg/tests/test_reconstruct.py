import numpy as np
import pytest

from msreg import GridParams, OcclusionMask, SpectralImage, reconstruct_guided
from msreg.reconstruct import (
    CoefficientGrid,
    apply_coefficients,
    blend,
    fit_grid,
    grid_dims,
    slice_grid,
    tent,
)
from msreg.warp import WarpedView


def literal_slice(grid, guide, params):
    """Slicing evaluated as the full sum over every lattice node."""
    gx_nodes, gy_nodes, gl_nodes = grid.dims
    h, w = guide.data.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    lx = xs / params.spatial_bin
    ly = ys / params.spatial_bin
    ll = guide.data * (params.luma_bins - 1)
    gain = np.zeros((h, w))
    bias = np.zeros((h, w))
    for i in range(gx_nodes):
        wx = tent(lx - i)
        if not wx.any():
            continue
        for j in range(gy_nodes):
            wy = wx * tent(ly - j)
            if not wy.any():
                continue
            for k in range(gl_nodes):
                wgt = wy * tent(ll - k)
                gain += wgt * grid.gain[i, j, k]
                bias += wgt * grid.bias[i, j, k]
    return gain, bias


class TestGridGeometry:
    def test_dims_round_up_plus_one(self):
        assert grid_dims(128, 128, GridParams(spatial_bin=16, luma_bins=32)) == (9, 9, 32)
        assert grid_dims(130, 64, GridParams(spatial_bin=16, luma_bins=8)) == (10, 5, 8)

    def test_tent_kernel(self):
        t = tent(np.array([-2.0, -1.0, -0.5, 0.0, 0.25, 1.0, 3.0]))
        assert t.tolist() == [0.0, 0.0, 0.5, 1.0, 0.75, 0.0, 0.0]


class TestSlicing:
    def test_matches_literal_lattice_sum(self, rng):
        params = GridParams(spatial_bin=16, luma_bins=8)
        dims = grid_dims(48, 32, params)
        grid = CoefficientGrid(gain=rng.normal(size=dims), bias=rng.normal(size=dims))
        guide = SpectralImage(data=rng.random((32, 48)))
        coeffs = slice_grid(grid, guide, params)
        gain_ref, bias_ref = literal_slice(grid, guide, params)
        assert np.abs(coeffs.gain - gain_ref).max() < 1e-12
        assert np.abs(coeffs.bias - bias_ref).max() < 1e-12

    def test_constant_grid_partition_of_unity(self, rng):
        params = GridParams()
        dims = grid_dims(80, 60, params)
        grid = CoefficientGrid(gain=np.full(dims, 1.7), bias=np.full(dims, -0.3))
        coeffs = slice_grid(grid, SpectralImage(data=rng.random((60, 80))), params)
        assert np.abs(coeffs.gain - 1.7).max() < 1e-12
        assert np.abs(coeffs.bias + 0.3).max() < 1e-12

    def test_luma_extremes_stay_in_range(self):
        params = GridParams(spatial_bin=8, luma_bins=4)
        dims = grid_dims(16, 16, params)
        grid = CoefficientGrid(
            gain=np.arange(np.prod(dims), dtype=float).reshape(dims), bias=np.zeros(dims)
        )
        guide = SpectralImage(data=np.tile(np.array([[0.0, 1.0]]), (16, 8)))
        coeffs = slice_grid(grid, guide, params)  # must not index out of bounds
        assert np.isfinite(coeffs.gain).all()

    def test_dims_mismatch_rejected(self, rng):
        params = GridParams()
        grid = CoefficientGrid(gain=np.zeros((3, 3, 4)), bias=np.zeros((3, 3, 4)))
        with pytest.raises(ValueError):
            slice_grid(grid, SpectralImage(data=rng.random((128, 128))), params)


class TestFit:
    def test_recovers_global_affine_exactly(self, rng):
        guide = SpectralImage(data=rng.random((64, 64)))
        target = SpectralImage(data=np.clip(0.6 * guide.data + 0.2, 0, 1))
        occ = OcclusionMask(data=rng.random((64, 64)) < 0.3)
        grid = fit_grid(guide, target, occ, GridParams())
        assert np.abs(grid.gain - 0.6).max() < 1e-6
        assert np.abs(grid.bias - 0.2).max() < 1e-6

    def test_empty_support_rejected(self, rng):
        guide = SpectralImage(data=rng.random((32, 32)))
        with pytest.raises(ValueError, match="every pixel is occluded"):
            fit_grid(guide, guide, OcclusionMask(data=np.ones((32, 32), bool)), GridParams())

    def test_unweighted_cells_take_global_fit(self, rng):
        # occlude an entire spatial region: its interior cells have no
        # support and must fall back to the global affine relation
        guide = SpectralImage(data=rng.random((64, 64)))
        target = SpectralImage(data=np.clip(0.5 * guide.data + 0.25, 0, 1))
        occ = np.zeros((64, 64), bool)
        occ[:, 32:] = True
        grid = fit_grid(guide, target, OcclusionMask(data=occ), GridParams())
        assert np.abs(grid.gain[-1, :, :] - 0.5).max() < 1e-6
        assert np.abs(grid.bias[-1, :, :] - 0.25).max() < 1e-6

    def test_warped_view_validity_excluded_from_support(self, rng):
        # corrupt values behind valid=False must not influence the fit
        guide_data = rng.random((32, 32))
        target_data = np.clip(0.5 * guide_data + 0.1, 0, 1)
        valid = np.ones((32, 32), bool)
        valid[:, :8] = False
        corrupted = target_data.copy()
        corrupted[:, :8] = 1.0
        wv = WarpedView(view=3, image=SpectralImage(data=corrupted, valid=valid))
        grid = fit_grid(
            SpectralImage(data=guide_data), wv, OcclusionMask(data=np.zeros((32, 32), bool)), GridParams()
        )
        assert np.abs(grid.gain - 0.5).max() < 1e-5


class TestApplyAndBlend:
    def test_apply_is_affine_and_clamped(self, rng):
        guide = SpectralImage(data=rng.random((8, 8)))
        from msreg.reconstruct import CoefficientImage

        coeffs = CoefficientImage(gain=np.full((8, 8), 2.0), bias=np.full((8, 8), -0.1))
        out = apply_coefficients(coeffs, guide)
        expected = np.clip(2.0 * guide.data - 0.1, 0.0, 1.0)
        assert np.array_equal(out.data, expected)

    def test_blend_keeps_observed_bits(self, rng):
        target = SpectralImage(data=rng.random((16, 16)))
        filled = SpectralImage(data=rng.random((16, 16)))
        occ = OcclusionMask(data=rng.random((16, 16)) < 0.4)
        out = blend(target, filled, occ)
        assert np.array_equal(out.data[~occ.data], target.data[~occ.data])
        assert np.array_equal(out.data[occ.data], filled.data[occ.data])


class TestReconstructGuided:
    def test_affine_occlusion_recovery(self, rng):
        guide = SpectralImage(data=rng.random((128, 128)))
        truth = 0.7 * guide.data + 0.1
        occ = OcclusionMask(data=rng.random((128, 128)) < 0.3)
        observed = SpectralImage(data=np.where(occ.data, 0.0, truth))
        out = reconstruct_guided(guide, observed, occ, GridParams())
        assert np.abs(out.data[occ.data] - truth[occ.data]).max() < 1e-3
        assert np.array_equal(out.data[~occ.data], observed.data[~occ.data])

    def test_non_multiple_sizes_pad_and_crop(self, rng):
        guide = SpectralImage(data=rng.random((50, 70)))
        truth = 0.8 * guide.data + 0.05
        occ = OcclusionMask(data=rng.random((50, 70)) < 0.25)
        observed = SpectralImage(data=np.where(occ.data, 0.0, truth))
        out = reconstruct_guided(guide, observed, occ, GridParams())
        assert out.data.shape == (50, 70)
        assert np.abs(out.data[occ.data] - truth[occ.data]).max() < 1e-3

    def test_piecewise_relation_tracked_locally(self, rng):
        # different affine maps left/right of the image: the grid localizes
        # them while a single global fit necessarily compromises
        from msreg.reconstruct import _global_affine

        guide_data = rng.random((64, 64))
        truth = np.where(
            np.arange(64)[None, :] < 32,
            0.9 * guide_data,
            np.clip(1.0 - 0.9 * guide_data, 0, 1),
        )
        occ = OcclusionMask(data=rng.random((64, 64)) < 0.25)
        observed = SpectralImage(data=np.where(occ.data, 0.0, truth))
        out = reconstruct_guided(SpectralImage(data=guide_data), observed, occ, GridParams())
        # one full bin away from the seam, interpolation no longer mixes
        # cells straddling it
        away = np.broadcast_to(np.abs(np.arange(64)[None, :] - 32) > 16, (64, 64))
        err = np.abs(out.data - truth)[occ.data & away]
        a_g, b_g = _global_affine(guide_data[~occ.data], truth[~occ.data])
        global_err = np.abs(a_g * guide_data + b_g - truth)[occ.data & away]
        assert err.mean() < 0.02
        assert err.mean() < global_err.mean() / 4
