import numpy as np
import pytest
from conftest import shift_int

from msreg import (
    DisparityMap,
    MatcherParams,
    SpectralImage,
    estimate_all,
    fuse_median,
    standard_3x3_geometry,
)
from msreg.disparity import estimate_zncc


def shifted_pair(rng, shape=(60, 90), d=5):
    """Center image plus a peripheral one displaced by ``d`` along +x.

    The matcher compares center (x, y) with peripheral (x + d, y), so the
    peripheral content sits d pixels to the right of the center content.
    """
    base = rng.random(shape)
    per = shift_int(base, d, 0)
    per[:, :d] = rng.random((shape[0], d))
    return SpectralImage(data=base), SpectralImage(data=per)


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            MatcherParams(window_radius=0)
        with pytest.raises(ValueError):
            MatcherParams(d_min=-1)
        with pytest.raises(ValueError):
            MatcherParams(d_min=8, d_max=4)

    def test_d_max_must_fit_image(self, rng):
        img = SpectralImage(data=rng.random((10, 10)))
        with pytest.raises(ValueError):
            estimate_zncc(img, img, MatcherParams(d_max=10))


class TestZncc:
    def test_recovers_integer_shift(self, rng):
        center, per = shifted_pair(rng, d=5)
        est = estimate_zncc(center, per, MatcherParams(d_min=0, d_max=10, subpixel=False))
        inner = est.data[10:-10, 5:-15]
        assert (inner == 5).mean() > 0.99

    def test_inverted_contrast_matches_with_abs(self, rng):
        center, per = shifted_pair(rng, d=4)
        inverted = SpectralImage(data=1.0 - per.data)
        est = estimate_zncc(center, inverted, MatcherParams(d_min=0, d_max=10, subpixel=False))
        inner = est.data[10:-10, 5:-15]
        assert (inner == 4).mean() > 0.99

    def test_signed_scoring_rejects_inversion(self, rng):
        center, per = shifted_pair(rng, d=4)
        inverted = SpectralImage(data=1.0 - per.data)
        est = estimate_zncc(
            center,
            inverted,
            MatcherParams(d_min=0, d_max=10, subpixel=False, abs_correlation=False),
        )
        inner = est.data[10:-10, 5:-15]
        assert (inner == 4).mean() < 0.5

    def test_subpixel_refines_fractional_shift(self, rng):
        # shift a smooth texture by 4.5 px via linear blending of shifts 4, 5
        base = rng.random((50, 120))
        from scipy import ndimage

        smooth = ndimage.gaussian_filter(base, 2.0)
        smooth = (smooth - smooth.min()) / (smooth.max() - smooth.min())
        per = 0.5 * shift_int(smooth, 4, 0) + 0.5 * shift_int(smooth, 5, 0)
        est = estimate_zncc(
            SpectralImage(data=smooth),
            SpectralImage(data=per),
            MatcherParams(d_min=0, d_max=10, subpixel=True),
        )
        inner = est.data[10:-10, 10:-20]
        assert abs(inner.mean() - 4.5) < 0.2
        assert not np.all(inner == np.round(inner))  # actually fractional

    def test_textureless_input_falls_back_to_d_min(self):
        flat = SpectralImage(data=np.full((20, 30), 0.5))
        est = estimate_zncc(flat, flat, MatcherParams(d_min=2, d_max=6, subpixel=False))
        assert np.all(est.data == 2.0)

    def test_holes_fill_from_nearest_on_row(self, rng):
        # textureless stripe inside an otherwise matchable image takes the
        # nearest confident estimate on its row
        base = rng.random((40, 80))
        base[:, 30:50] = 0.5
        center = SpectralImage(data=base)
        per = SpectralImage(data=shift_int(base, 3, 0, fill=0.5))
        est = estimate_zncc(center, per, MatcherParams(d_min=0, d_max=6, subpixel=False))
        assert (est.data[10:-10, 33:47] == 3.0).mean() > 0.95

    def test_range_clamped(self, rng):
        center, per = shifted_pair(rng, d=8)
        est = estimate_zncc(center, per, MatcherParams(d_min=0, d_max=5, subpixel=False))
        assert est.data.max() <= 5.0


class TestFusion:
    def test_median_of_odd_count(self):
        maps = [DisparityMap(data=np.full((4, 4), v)) for v in (1.0, 2.0, 9.0)]
        assert np.all(fuse_median(maps).data == 2.0)

    def test_even_count_averages_middle(self):
        maps = [DisparityMap(data=np.full((2, 2), v)) for v in (1.0, 2.0, 4.0, 8.0)]
        assert np.all(fuse_median(maps).data == 3.0)

    def test_minority_corruption_ignored(self, rng):
        truth = np.round(rng.random((16, 16)) * 10)
        maps = [DisparityMap(data=truth.copy()) for _ in range(8)]
        for k in range(3):  # corrupt 3 of 8 maps at random places
            bad = truth.copy()
            hit = rng.random(truth.shape) < 0.3
            bad[hit] = 99.0
            maps[k] = DisparityMap(data=bad)
        fused = fuse_median(maps)
        assert np.array_equal(fused.data, truth)

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            fuse_median([])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fuse_median([DisparityMap(data=np.zeros((2, 2))), DisparityMap(data=np.zeros((3, 3)))])


class TestEstimateAll:
    @pytest.fixture
    def const_shift_scene(self, rng):
        geom = standard_3x3_geometry()
        base = rng.random((72, 72))
        frames = []
        for v in range(9):
            if v == geom.center_index:
                frames.append(SpectralImage(data=base))
                continue
            vg = geom.view(v)
            per = shift_int(base, int(vg.alpha_x * 3), int(vg.alpha_y * 3))
            frames.append(SpectralImage(data=per))
        return geom, frames

    def test_fused_map_close_to_truth(self, const_shift_scene):
        geom, frames = const_shift_scene
        fused = estimate_all(frames, geom, MatcherParams(d_min=0, d_max=8))
        inner = fused.data[10:-10, 10:-10]
        assert abs(np.median(inner) - 3.0) < 0.15
        assert np.abs(inner - 3.0).mean() < 0.25

    def test_threads_do_not_change_result(self, const_shift_scene):
        geom, frames = const_shift_scene
        params = MatcherParams(d_min=0, d_max=8)
        serial = estimate_all(frames, geom, params, threads=1)
        pooled = estimate_all(frames, geom, params, threads=4)
        assert np.array_equal(serial.data, pooled.data)

    def test_frame_count_checked(self, const_shift_scene):
        geom, frames = const_shift_scene
        with pytest.raises(ValueError):
            estimate_all(frames[:5], geom, MatcherParams())
