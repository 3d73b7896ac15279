"""Guided reconstruction of occluded pixels via a bilateral coefficient grid.

Occluded pixels of a warped view are predicted from the fully observed
center view through a local affine model N = A * guide + B whose
coefficients live on a coarse lattice over (x bin, y bin, guide-luma bin).
Cells are fitted by weighted least squares over the observed pixels with a
Tikhonov pull toward the global affine fit, then sliced back to full
resolution with trilinear tent weights and blended into the known pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import OcclusionMask, SpectralImage
from .warp import WarpedView

__all__ = [
    "GridParams",
    "CoefficientGrid",
    "CoefficientImage",
    "grid_dims",
    "tent",
    "fit_grid",
    "slice_grid",
    "apply_coefficients",
    "blend",
    "reconstruct_guided",
]


@dataclass(frozen=True)
class GridParams:
    spatial_bin: int = 16
    luma_bins: int = 32
    lambda_reg: float = 1e-3
    min_weight: float = 1.0

    def __post_init__(self):
        if self.spatial_bin < 1:
            raise ValueError("spatial_bin must be >= 1")
        if self.luma_bins < 2:
            raise ValueError("luma_bins must be >= 2")
        if self.lambda_reg <= 0.0:
            raise ValueError("lambda_reg must be positive")
        if self.min_weight < 0.0:
            raise ValueError("min_weight must be >= 0")


@dataclass(frozen=True)
class CoefficientGrid:
    """Per-cell affine gain/bias on the (x bin, y bin, luma bin) lattice."""

    gain: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        gain = np.ascontiguousarray(self.gain, dtype=np.float64)
        bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if gain.ndim != 3 or gain.shape != bias.shape:
            raise ValueError("grid gain/bias must be 3-D arrays of equal shape")
        if not (np.all(np.isfinite(gain)) and np.all(np.isfinite(bias))):
            raise ValueError("grid coefficients must be finite")
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "bias", bias)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.gain.shape


@dataclass(frozen=True)
class CoefficientImage:
    """Full-resolution gain/bias after slicing."""

    gain: np.ndarray
    bias: np.ndarray


def grid_dims(width: int, height: int, params: GridParams) -> tuple[int, int, int]:
    """Lattice size: one node past the last bin so every tent support is full."""
    gx = math.ceil(width / params.spatial_bin) + 1
    gy = math.ceil(height / params.spatial_bin) + 1
    return gx, gy, params.luma_bins


def tent(t: np.ndarray) -> np.ndarray:
    """Linear interpolation kernel max(1 - |t|, 0)."""
    return np.maximum(1.0 - np.abs(t), 0.0)


def _unwrap(target) -> SpectralImage:
    return target.image if isinstance(target, WarpedView) else target


def _lattice_coords(guide: np.ndarray, params: GridParams):
    h, w = guide.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    gx = xs / params.spatial_bin
    gy = ys / params.spatial_bin
    gl = guide * (params.luma_bins - 1)
    return gx, gy, gl


def _global_affine(g: np.ndarray, t: np.ndarray) -> tuple[float, float]:
    design = np.stack([g, np.ones_like(g)], axis=1)
    coef, *_ = np.linalg.lstsq(design, t, rcond=None)
    return float(coef[0]), float(coef[1])


def fit_grid(
    guide: SpectralImage,
    target: SpectralImage | WarpedView,
    occluded: OcclusionMask,
    params: GridParams,
) -> CoefficientGrid:
    """Weighted least-squares affine fit per grid cell.

    Non-occluded valid pixels are splatted with trilinear tent weights.
    Each cell minimizes sum(w * (A*g + B - t)^2) plus a Tikhonov term
    lambda_reg * sum(w) pulling (A, B) toward the global affine fit;
    scaling the pull by the cell's weight keeps it resolution-independent.
    Cells with total weight below ``min_weight`` take the global fit.
    """
    tgt = _unwrap(target)
    if guide.data.shape != tgt.data.shape or guide.data.shape != occluded.data.shape:
        raise ValueError("guide, target and mask must share dimensions")
    support = ~occluded.data & guide.valid_mask() & tgt.valid_mask()
    if not support.any():
        raise ValueError("no support for guide fit: every pixel is occluded")

    g = guide.data[support]
    t = tgt.data[support]
    a_g, b_g = _global_affine(g, t)

    dims = grid_dims(guide.width, guide.height, params)
    gx_nodes, gy_nodes, gl_nodes = dims
    gx, gy, gl = _lattice_coords(guide.data, params)
    gx = gx[support]
    gy = gy[support]
    gl = gl[support]

    i0 = np.floor(gx).astype(np.int64)
    j0 = np.floor(gy).astype(np.int64)
    l0 = np.floor(gl).astype(np.int64)
    fx = gx - i0
    fy = gy - j0
    fl = gl - l0
    l1 = np.minimum(l0 + 1, gl_nodes - 1)  # top of the luma range has weight 0 there

    ncells = gx_nodes * gy_nodes * gl_nodes
    sums = np.zeros((5, ncells))
    quantities = (np.ones_like(g), g, g * g, t, g * t)
    for di, wx in ((0, 1.0 - fx), (1, fx)):
        for dj, wy in ((0, 1.0 - fy), (1, fy)):
            for corner_l, wl in ((l0, 1.0 - fl), (l1, fl)):
                w = wx * wy * wl
                idx = ((i0 + di) * gy_nodes + (j0 + dj)) * gl_nodes + corner_l
                for q, quantity in enumerate(quantities):
                    sums[q] += np.bincount(idx, weights=w * quantity, minlength=ncells)

    s_w, s_g, s_gg, s_t, s_gt = (s.reshape(dims) for s in sums)
    rho = params.lambda_reg * s_w
    a11 = s_gg + rho
    a12 = s_g
    a22 = s_w + rho
    det = a11 * a22 - a12 * a12
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = ((s_gt + rho * a_g) * a22 - (s_t + rho * b_g) * a12) / det
        bias = (a11 * (s_t + rho * b_g) - a12 * (s_gt + rho * a_g)) / det
    fallback = (s_w < params.min_weight) | ~np.isfinite(gain) | ~np.isfinite(bias)
    gain = np.where(fallback, a_g, gain)
    bias = np.where(fallback, b_g, bias)
    return CoefficientGrid(gain=gain, bias=bias)


def slice_grid(
    grid: CoefficientGrid, guide: SpectralImage, params: GridParams
) -> CoefficientImage:
    """Trilinear gather of per-pixel coefficients from the grid.

    Equivalent to the full sum over cells of
    tent(x/bin - i) * tent(y/bin - j) * tent(luma*(bins-1) - k) * coeff,
    restricted to the at most 8 cells with nonzero weight.
    """
    dims = grid_dims(guide.width, guide.height, params)
    if grid.dims != dims:
        raise ValueError(f"grid dims {grid.dims} inconsistent with image and params {dims}")
    gx_nodes, gy_nodes, gl_nodes = dims
    gx, gy, gl = _lattice_coords(guide.data, params)
    i0 = np.floor(gx).astype(np.int64)
    j0 = np.floor(gy).astype(np.int64)
    l0 = np.floor(gl).astype(np.int64)
    fx = gx - i0
    fy = gy - j0
    fl = gl - l0
    l1 = np.minimum(l0 + 1, gl_nodes - 1)

    gain_flat = grid.gain.reshape(-1)
    bias_flat = grid.bias.reshape(-1)
    gain = np.zeros(gx.shape)
    bias = np.zeros(gx.shape)
    for di, wx in ((0, 1.0 - fx), (1, fx)):
        for dj, wy in ((0, 1.0 - fy), (1, fy)):
            for corner_l, wl in ((l0, 1.0 - fl), (l1, fl)):
                w = wx * wy * wl
                idx = ((i0 + di) * gy_nodes + (j0 + dj)) * gl_nodes + corner_l
                gain += w * gain_flat[idx]
                bias += w * bias_flat[idx]
    return CoefficientImage(gain=gain, bias=bias)


def apply_coefficients(coeffs: CoefficientImage, guide: SpectralImage) -> SpectralImage:
    """N = A * guide + B, clamped to [0, 1]."""
    if coeffs.gain.shape != guide.data.shape:
        raise ValueError("coefficient images must match guide dimensions")
    values = coeffs.gain * guide.data + coeffs.bias
    return SpectralImage(data=np.clip(values, 0.0, 1.0))


def blend(
    target: SpectralImage | WarpedView, filled: SpectralImage, occluded: OcclusionMask
) -> SpectralImage:
    """Keep observed pixels, take reconstructed values where occluded."""
    tgt = _unwrap(target)
    if tgt.data.shape != filled.data.shape or tgt.data.shape != occluded.data.shape:
        raise ValueError("blend inputs must share dimensions")
    occ = occluded.data
    data = np.where(occ, filled.data, tgt.data)
    valid = tgt.valid_mask() | occ
    return SpectralImage(data=data, valid=valid)


def reconstruct_guided(
    guide: SpectralImage,
    target: SpectralImage | WarpedView,
    occluded: OcclusionMask,
    params: GridParams,
) -> SpectralImage:
    """fit_grid -> slice_grid -> apply_coefficients -> blend, with padding.

    Images are padded by edge replication to a multiple of the spatial bin
    so the lattice covers them exactly, and cropped back afterwards.
    Non-occluded pixels pass through bit-exactly.
    """
    tgt = _unwrap(target)
    h, w = guide.data.shape
    if tgt.data.shape != (h, w) or occluded.data.shape != (h, w):
        raise ValueError("guide, target and mask must share dimensions")
    bin_px = params.spatial_bin
    pad_x = (bin_px - w % bin_px) % bin_px
    pad_y = (bin_px - h % bin_px) % bin_px

    def pad(arr):
        return np.pad(arr, ((0, pad_y), (0, pad_x)), mode="edge")

    guide_p = SpectralImage(data=pad(guide.data), valid=pad(guide.valid_mask()))
    target_p = SpectralImage(data=pad(tgt.data), valid=pad(tgt.valid_mask()))
    occ_p = OcclusionMask(data=pad(occluded.data))

    grid = fit_grid(guide_p, target_p, occ_p, params)
    coeffs = slice_grid(grid, guide_p, params)
    filled = apply_coefficients(coeffs, guide_p)
    blended = blend(target_p, filled, occ_p)
    return SpectralImage(
        data=blended.data[:h, :w].copy(), valid=blended.valid_mask()[:h, :w].copy()
    )
