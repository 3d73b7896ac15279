"""Layer-wise occlusion detection from a single disparity map.

A pixel of the center view is occluded in a peripheral view when some
other pixel with sufficiently larger disparity lands on the same spot
after warping.  Instead of comparing all pixel pairs, the detector slices
the disparity range into unit-spaced layers, shifts each layer by its own
disparity, and sweeps a running maximum from near to far; one pass over
the layers replaces the quadratic search.  A direct pairwise detector,
:func:`oracle_occlusions`, is kept as the reference the sweep must agree
with on integer-valued maps.

Layer cells keep an explicit presence mask, so a pixel with disparity 0
is still distinguishable from an empty cell and can be reported occluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ArrayGeometry,
    DisparityMap,
    OcclusionMask,
    ViewGeometry,
    bilinear_sample,
)

__all__ = [
    "OcclusionParams",
    "LayerImage",
    "extract_layer",
    "detect_occlusions",
    "oracle_occlusions",
    "out_of_frame",
    "dilate_directional",
    "detect_all",
]

# shear padding takes this value; it never falls within tau of a layer
_PAD_VALUE = -1e9


@dataclass(frozen=True)
class OcclusionParams:
    """Sweep configuration.

    ``tau`` is the half-width of each disparity layer (pixels), ``phi`` the
    margin by which an occluder must exceed the occludee, ``kappa`` the
    dilation radius applied along the view direction.
    """

    tau: float = 0.75
    phi: float = 0.5
    kappa: int = 2

    def __post_init__(self):
        if not 0.5 <= self.tau < 1.0:
            raise ValueError("tau must lie in [0.5, 1.0) so layers cover all values")
        if self.phi <= 0.0:
            raise ValueError("phi must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")


@dataclass(frozen=True)
class LayerImage:
    """One disparity layer: values within ``tau`` of ``d`` plus presence."""

    d: int
    values: np.ndarray
    mask: np.ndarray


def extract_layer(disp: DisparityMap, d: int, tau: float = 0.75) -> LayerImage:
    """Slice out the layer of pixels whose disparity is within ``tau`` of ``d``."""
    mask = np.abs(disp.data - d) <= tau
    return LayerImage(d=d, values=np.where(mask, disp.data, 0.0), mask=mask)


def _sweep(disp: np.ndarray, in_image: np.ndarray, tau: float, phi: float) -> np.ndarray:
    """Near-to-far layer sweep along +x.

    ``in_image`` is False on shear-padding cells; landings there neither
    occlude nor get tested, which matches dropping out-of-frame landings.
    """
    h, width = disp.shape
    occ = np.zeros((h, width), dtype=bool)
    if not in_image.any():
        return occ
    content = disp[in_image]
    d_lo = int(math.floor(content.min()))
    d_hi = int(math.ceil(content.max()))

    wmax = np.full((h, width), -np.inf)
    for d in range(d_hi, d_lo - 1, -1):
        if d >= width:
            continue
        member = np.abs(disp - d) <= tau
        src = np.s_[:, : width - d]
        dst = np.s_[:, d:]
        m = member[src]
        if not m.any():
            continue
        landed = m & in_image[dst]
        values = disp[src]
        # test against layers already swept, then fold this layer in
        occ[src] |= landed & (values <= wmax[dst] - phi)
        np.maximum(wmax[dst], np.where(landed, values, -np.inf), out=wmax[dst])
    return occ


def _pack_shear(arr: np.ndarray, fill) -> np.ndarray:
    """Rearrange so each (+1, +1) diagonal becomes a row, position = y."""
    h, w = arr.shape
    padded = np.full((h, h + w - 1), fill, dtype=arr.dtype)
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    padded[ys, xs + (h - 1 - ys)] = arr
    return padded.T.copy()


def _unpack_shear(packed: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    h, w = shape
    padded = packed.T
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    return padded[ys, xs + (h - 1 - ys)].copy()


def detect_occlusions(
    disp: DisparityMap, params: OcclusionParams, direction: tuple[int, int] = (1, 0)
) -> OcclusionMask:
    """Sweep-detect occlusions for a view stepping along ``direction``.

    ``direction`` is one of the 8 compass steps; the disparity must already
    be expressed in steps of that direction (a pixel lands ``D`` steps
    away).  The diagonal case rides on the same row sweep after packing
    each diagonal into a row.  No dilation is applied here.
    """
    sx, sy = direction
    if (sx, sy) == (0, 0) or sx not in (-1, 0, 1) or sy not in (-1, 0, 1):
        raise ValueError(f"direction must be a compass step, got {direction}")
    data = disp.data
    if data.size == 0:
        return OcclusionMask(np.zeros(data.shape, dtype=bool))

    arr = data
    if sx < 0:
        arr = arr[:, ::-1]
    if sy < 0:
        arr = arr[::-1, :]

    axis = (abs(sx), abs(sy))
    if axis == (1, 0):
        occ = _sweep(arr, np.ones(arr.shape, dtype=bool), params.tau, params.phi)
    elif axis == (0, 1):
        occ = _sweep(arr.T, np.ones(arr.T.shape, dtype=bool), params.tau, params.phi).T
    else:
        packed = _pack_shear(arr, _PAD_VALUE)
        in_image = _pack_shear(np.ones(arr.shape, dtype=bool), False)
        occ = _unpack_shear(_sweep(packed, in_image, params.tau, params.phi), arr.shape)

    if sy < 0:
        occ = occ[::-1, :]
    if sx < 0:
        occ = occ[:, ::-1]
    return OcclusionMask(np.ascontiguousarray(occ))


def oracle_occlusions(disp: DisparityMap, phi: float = 0.5) -> OcclusionMask:
    """Reference pairwise detector for the canonical +x direction.

    Pixel ``x`` is occluded when some ``x'`` on its row satisfies
    ``D[x'] > D[x] + phi`` and both land within half a pixel of each other
    inside the frame.  Quadratic per row; used to validate the sweep.
    """
    data = disp.data
    h, w = data.shape
    occ = np.zeros((h, w), dtype=bool)
    xs = np.arange(w, dtype=np.float64)
    for y in range(h):
        row = data[y]
        land = xs + row
        inframe = land < w - 0.5
        deeper = row[None, :] > row[:, None] + phi
        collide = np.abs(land[None, :] - land[:, None]) < 0.5
        occ[y] = (deeper & collide & inframe[:, None] & inframe[None, :]).any(axis=1)
    return OcclusionMask(occ)


def out_of_frame(disp: DisparityMap, vg: ViewGeometry) -> np.ndarray:
    """Center pixels whose warp target lies outside the peripheral frame."""
    h, w = disp.data.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    sample_x = xs + vg.alpha_x * disp.data
    sample_y = ys + vg.alpha_y * disp.data
    _, inside = bilinear_sample(np.zeros((h, w)), sample_x, sample_y)
    return ~inside


def _shift(mask: np.ndarray, dx: int, dy: int) -> np.ndarray:
    h, w = mask.shape
    out = np.zeros_like(mask)
    xs_src = slice(max(0, -dx), w - max(0, dx))
    xs_dst = slice(max(0, dx), w - max(0, -dx))
    ys_src = slice(max(0, -dy), h - max(0, dy))
    ys_dst = slice(max(0, dy), h - max(0, -dy))
    out[ys_dst, xs_dst] = mask[ys_src, xs_src]
    return out


def dilate_directional(mask: np.ndarray, direction: tuple[int, int], kappa: int) -> np.ndarray:
    """Grow the mask by ``kappa`` extra pixels along the masking direction.

    One-sided on purpose: blur-mixed pixels sit where foreground content
    smears over the strip being hidden, which is the warp direction.
    """
    sx, sy = direction
    out = mask.copy()
    for t in range(1, kappa + 1):
        out |= _shift(mask, t * sx, t * sy)
    return out


def detect_all(
    disp: DisparityMap,
    geom: ArrayGeometry,
    params: OcclusionParams,
    include_out_of_frame: bool = True,
) -> dict[int, OcclusionMask]:
    """Per-view occlusion masks from one center-view disparity map.

    Disparity is rescaled to per-view steps, swept along the view
    direction, optionally unioned with out-of-frame pixels, then dilated
    by ``kappa`` along that direction.
    """
    masks: dict[int, OcclusionMask] = {}
    for vg in geom.views:
        sx, sy = vg.direction
        if sx != 0 and sy != 0 and abs(abs(vg.alpha_x) - abs(vg.alpha_y)) > 1e-12:
            raise ValueError(
                f"view {vg.view}: diagonal sweeps need equal |alpha_x| and |alpha_y|"
            )
        scale = max(abs(vg.alpha_x), abs(vg.alpha_y))
        eff = DisparityMap(data=disp.data * scale)
        occ = detect_occlusions(eff, params, (sx, sy)).data
        if include_out_of_frame:
            occ = occ | out_of_frame(disp, vg)
        if params.kappa > 0:
            occ = dilate_directional(occ, (sx, sy), params.kappa)
        masks[vg.view] = OcclusionMask(data=occ)
    return masks
