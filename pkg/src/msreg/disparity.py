"""Cross-spectral disparity estimation and median fusion.

The built-in matcher scores window pairs by the absolute value of the
zero-normalized cross correlation, so spectrally inverted contrast still
matches.  Externally computed disparity maps can be substituted at the
pipeline level; see :mod:`msreg.pipeline`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import ndimage

from .core import ArrayGeometry, DisparityMap, SpectralImage, derotate_disparity, rotate_image

__all__ = ["MatcherParams", "estimate_zncc", "fuse_median", "estimate_all"]

# windows whose intensity variance falls below this are treated as textureless
_VAR_EPS = 1e-9


@dataclass(frozen=True)
class MatcherParams:
    """Block-matching configuration.

    ``d_min``/``d_max`` bound the integer search range in pixels of the
    frame the matcher runs in; :func:`estimate_all` rescales them per view
    by the baseline factor.  ``abs_correlation`` selects |ZNCC| scoring
    (cross-spectral); plain signed ZNCC is kept for same-band stereo.
    """

    window_radius: int = 7
    d_min: int = 0
    d_max: int = 64
    subpixel: bool = True
    abs_correlation: bool = True

    def __post_init__(self):
        if self.window_radius < 1:
            raise ValueError("window_radius must be >= 1")
        if self.d_min < 0:
            raise ValueError("d_min must be >= 0")
        if self.d_min > self.d_max:
            raise ValueError("d_min must not exceed d_max")


def _window_mean(arr: np.ndarray, radius: int) -> np.ndarray:
    # constant-mode zero padding makes truncated border windows count the
    # missing samples as invalid, which the coverage threshold then handles
    return ndimage.uniform_filter(arr, size=2 * radius + 1, mode="constant", cval=0.0)


def _fill_rows(values: np.ndarray, has: np.ndarray, fallback: float) -> np.ndarray:
    """Fill holes from the nearest valid pixel on the same row, ties leftward."""
    h, w = values.shape
    cols = np.arange(w)
    left = np.where(has, cols, -1)
    left = np.maximum.accumulate(left, axis=1)
    right = np.where(has, cols, w)
    right = np.flip(np.minimum.accumulate(np.flip(right, axis=1), axis=1), axis=1)

    dist_left = np.where(left >= 0, cols[None, :] - left, np.inf)
    dist_right = np.where(right < w, right - cols[None, :], np.inf)
    pick_left = dist_left <= dist_right

    out = np.full((h, w), fallback, dtype=np.float64)
    rows = np.arange(h)[:, None]
    left_ok = left >= 0
    right_ok = right < w
    use_left = pick_left & left_ok
    use_right = (~pick_left) & right_ok
    out[use_left] = values[rows.repeat(w, 1)[use_left], left[use_left]]
    out[use_right] = values[rows.repeat(w, 1)[use_right], right[use_right]]
    return out


def estimate_zncc(
    center_rot: SpectralImage, periph_rot: SpectralImage, params: MatcherParams
) -> DisparityMap:
    """Block-matching disparity from a rotated, horizontally aligned pair.

    For every center pixel the score of candidate ``d`` compares the window
    at ``(x, y)`` against the peripheral window at ``(x + d, y)``.  Windows
    overlapping invalid pixels are truncated; pixels with less than 25 %
    window coverage at every candidate, or with textureless windows, are
    filled from the nearest estimate on their row.
    """
    if center_rot.data.shape != periph_rot.data.shape:
        raise ValueError("center and peripheral images must share dimensions")
    h, w = center_rot.data.shape
    if params.d_max >= w:
        raise ValueError(f"d_max {params.d_max} must be below the image width {w}")

    radius = params.window_radius
    vc = center_rot.valid_mask().astype(np.float64)
    vp = periph_rot.valid_mask().astype(np.float64)
    center = center_rot.data * vc
    periph = periph_rot.data * vp

    cands = np.arange(int(params.d_min), int(params.d_max) + 1)
    invalid_score = -2.0  # below any correlation value
    scores = np.full((len(cands), h, w), invalid_score, dtype=np.float64)

    for k, d in enumerate(cands):
        m_shift = np.zeros((h, w))
        j_shift = np.zeros((h, w))
        if d == 0:
            m_shift[:] = vp
            j_shift[:] = periph
        else:
            m_shift[:, : w - d] = vp[:, d:]
            j_shift[:, : w - d] = periph[:, d:]

        m = vc * m_shift
        n = _window_mean(m, radius)
        with np.errstate(divide="ignore", invalid="ignore"):
            mu_i = _window_mean(m * center, radius) / n
            mu_j = _window_mean(m * j_shift, radius) / n
            var_i = _window_mean(m * center * center, radius) / n - mu_i * mu_i
            var_j = _window_mean(m * j_shift * j_shift, radius) / n - mu_j * mu_j
            cov = _window_mean(m * center * j_shift, radius) / n - mu_i * mu_j
            zncc = cov / np.sqrt(var_i * var_j)
        usable = (n >= 0.25) & (var_i > _VAR_EPS) & (var_j > _VAR_EPS)
        score = np.abs(zncc) if params.abs_correlation else zncc
        scores[k] = np.where(usable, score, invalid_score)

    best = np.argmax(scores, axis=0)  # first max: smallest d wins ties
    best_score = np.take_along_axis(scores, best[None], axis=0)[0]
    has_estimate = best_score > invalid_score
    disp = cands[best].astype(np.float64)

    if params.subpixel and len(cands) >= 3:
        inner = np.clip(best, 1, len(cands) - 2)
        s0 = np.take_along_axis(scores, inner[None], axis=0)[0]
        sm = np.take_along_axis(scores, (inner - 1)[None], axis=0)[0]
        sp = np.take_along_axis(scores, (inner + 1)[None], axis=0)[0]
        denom = sm - 2.0 * s0 + sp
        refinable = (
            has_estimate
            & (inner == best)
            & (sm > invalid_score)
            & (sp > invalid_score)
            & (denom < -1e-12)
        )
        delta = np.zeros((h, w))
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = 0.5 * (sm - sp) / denom
        delta[refinable] = np.clip(raw[refinable], -0.5, 0.5)
        disp = disp + delta

    disp = np.clip(disp, params.d_min, params.d_max)
    if not has_estimate.all():
        disp = _fill_rows(disp, has_estimate, fallback=float(params.d_min))
    return DisparityMap(data=disp)


def fuse_median(estimates: Sequence[DisparityMap]) -> DisparityMap:
    """Per-pixel median across disparity maps; even counts average the middle two."""
    if len(estimates) == 0:
        raise ValueError("cannot fuse an empty list of disparity maps")
    shape = estimates[0].data.shape
    for est in estimates[1:]:
        if est.data.shape != shape:
            raise ValueError("disparity maps must share dimensions")
    stack = np.stack([est.data for est in estimates], axis=0)
    return DisparityMap(data=np.median(stack, axis=0))


def estimate_all(
    frames: Sequence[SpectralImage],
    geom: ArrayGeometry,
    params: MatcherParams,
    threads: int = 1,
) -> DisparityMap:
    """Fused center-view disparity from all peripheral views.

    Each pair is rotated so its disparity is horizontal, matched, rotated
    back (dividing by the view's baseline factor) and the per-view maps are
    median-fused.  The search range of ``params`` is interpreted in
    center-baseline units and scaled per view.  Views are independent, so
    ``threads`` > 1 runs them on a worker pool; results are assembled in
    view order, keeping the output deterministic.
    """
    if len(frames) != geom.num_views:
        raise ValueError(f"expected {geom.num_views} frames, got {len(frames)}")
    if not geom.views:
        raise ValueError("nothing to register: geometry has no peripheral views")
    center = frames[geom.center_index]
    shape = center.data.shape
    for f in frames:
        if f.data.shape != shape:
            raise ValueError("all frames must share dimensions")

    def one_view(vg):
        center_rot = rotate_image(center, vg.angle)
        periph_rot = rotate_image(frames[vg.view], vg.angle)
        view_params = replace(
            params,
            d_min=int(math.floor(params.d_min * vg.baseline_factor)),
            d_max=min(
                int(math.ceil(params.d_max * vg.baseline_factor)),
                center_rot.width - 1,
            ),
        )
        disp_rot = estimate_zncc(center_rot, periph_rot, view_params)
        return derotate_disparity(disp_rot, vg.angle, vg.baseline_factor, shape)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            maps = list(pool.map(one_view, geom.views))
    else:
        maps = [one_view(vg) for vg in geom.views]
    return fuse_median(maps)
