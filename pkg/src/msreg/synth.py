"""Synthetic camera-array scenes with exact ground truth.

Scenes are stacks of fronto-parallel textured layers (constant disparity
each).  Every view of every band is rendered from the same continuous
geometry, so ground-truth disparity and per-view occlusion labels are
exact by construction rather than estimated.  The world is clipped to
what the center camera sees: layer content outside the center frame does
not exist, which keeps the labels consistent with detectors that only see
the center-view disparity map.

For integer disparities and pixel-aligned regions the ground-truth
occlusion of a view equals the pairwise reference detector applied to the
ground-truth disparity, unioned with out-of-frame pixels, as long as no
occluding layer is itself hidden in the center view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import (
    ArrayGeometry,
    DisparityMap,
    OcclusionMask,
    SpectralImage,
    bilinear_sample,
)

__all__ = [
    "Rect",
    "HalfPlane",
    "Layer",
    "SceneSpec",
    "RenderedScene",
    "render",
    "value_noise",
]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned region [x0, x1) x [y0, y1)."""

    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return (xs >= self.x0) & (xs < self.x1) & (ys >= self.y0) & (ys < self.y1)


@dataclass(frozen=True)
class HalfPlane:
    """Region a*x + b*y >= c."""

    a: float
    b: float
    c: float

    def contains(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.a * xs + self.b * ys >= self.c


Region = Union[Rect, HalfPlane]


@dataclass(frozen=True)
class Layer:
    """A textured fronto-parallel plane.

    ``spectral_gains`` holds one (gain, bias) pair per band; band b of the
    layer is gain*texture + bias, which must stay within [0, 1].
    """

    region: Region
    disparity: float
    texture_seed: int
    spectral_gains: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not (math.isfinite(self.disparity) and self.disparity >= 0.0):
            raise ValueError("layer disparity must be finite and non-negative")
        gains = tuple((float(g), float(b)) for g, b in self.spectral_gains)
        object.__setattr__(self, "spectral_gains", gains)
        for gain, bias in gains:
            lo, hi = sorted((bias, gain + bias))
            if lo < 0.0 or hi > 1.0:
                raise ValueError(
                    f"spectral gain ({gain}, {bias}) maps [0,1] textures outside [0,1]"
                )


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    layers: tuple[Layer, ...]
    num_bands: int
    geometry: ArrayGeometry
    noise_scale: float = 8.0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.width < 1 or self.height < 1:
            raise ValueError("scene dimensions must be positive")
        if not self.layers:
            raise ValueError("scene needs at least one layer")
        if self.num_bands < 1:
            raise ValueError("num_bands must be >= 1")
        if self.noise_scale <= 0:
            raise ValueError("noise_scale must be positive")
        for layer in self.layers:
            if len(layer.spectral_gains) != self.num_bands:
                raise ValueError("every layer needs one spectral gain pair per band")


@dataclass(frozen=True)
class RenderedScene:
    """All views and bands plus exact labels.

    ``views[view_id][band]`` is a SpectralImage; peripheral views may carry
    invalid pixels where no layer is visible (content slid out of the
    world).  ``gt_occlusion`` covers peripheral views only.
    """

    spec: SceneSpec
    views: dict[int, tuple[SpectralImage, ...]]
    gt_disparity: DisparityMap
    gt_occlusion: dict[int, OcclusionMask]


def value_noise(height: int, width: int, seed: int, scale: float) -> np.ndarray:
    """Smooth seeded noise in [0, 1): bilinear interpolation of a coarse
    uniform grid with one knot per ``scale`` pixels."""
    rng = np.random.default_rng(seed)
    gh = int(np.ceil((height - 1) / scale)) + 2
    gw = int(np.ceil((width - 1) / scale)) + 2
    coarse = rng.random((gh, gw))
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    values, _ = bilinear_sample(coarse, xs / scale, ys / scale)
    return values


def _render_view(
    spec: SceneSpec, textures: list[np.ndarray], alpha_x: float, alpha_y: float
):
    """Visibility and band images for one view.

    View pixel q shows the layer point q - alpha*d; among covering layers
    the largest disparity wins, ties going to the later layer in the list.
    """
    h, w = spec.height, spec.width
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    best_d = np.full((h, w), -np.inf)
    winner = np.full((h, w), -1, dtype=np.int64)
    samples = []
    for idx, layer in enumerate(spec.layers):
        px = xs - alpha_x * layer.disparity
        py = ys - alpha_y * layer.disparity
        tex, inside = bilinear_sample(textures[idx], px, py)
        covered = layer.region.contains(px, py) & inside
        take = covered & (layer.disparity >= best_d)
        best_d[take] = layer.disparity
        winner[take] = idx
        samples.append(tex)

    valid = winner >= 0
    bands = []
    for b in range(spec.num_bands):
        img = np.zeros((h, w))
        for idx, layer in enumerate(spec.layers):
            sel = winner == idx
            gain, bias = layer.spectral_gains[b]
            img[sel] = gain * samples[idx][sel] + bias
        bands.append(SpectralImage(data=np.clip(img, 0.0, 1.0), valid=valid.copy()))
    return best_d, winner, valid, tuple(bands)


def render(spec: SceneSpec) -> RenderedScene:
    """Render every view and band, with ground-truth disparity and occlusion."""
    h, w = spec.height, spec.width
    textures = [
        value_noise(h, w, layer.texture_seed, spec.noise_scale) for layer in spec.layers
    ]

    center_d, _, center_valid, center_bands = _render_view(spec, textures, 0.0, 0.0)
    if not center_valid.all():
        raise ValueError("layers do not cover the center frame")
    gt_disparity = DisparityMap(data=center_d)

    views: dict[int, tuple[SpectralImage, ...]] = {spec.geometry.center_index: center_bands}
    gt_occlusion: dict[int, OcclusionMask] = {}
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    probe = np.zeros((h, w))
    for vg in spec.geometry.views:
        _, _, _, bands = _render_view(spec, textures, vg.alpha_x, vg.alpha_y)
        views[vg.view] = bands

        # exact occlusion: landing point covered by any strictly nearer layer,
        # or landing outside the frame
        qx = xs + vg.alpha_x * center_d
        qy = ys + vg.alpha_y * center_d
        _, q_inside = bilinear_sample(probe, qx, qy)
        occ = ~q_inside
        for layer in spec.layers:
            tx = qx - vg.alpha_x * layer.disparity
            ty = qy - vg.alpha_y * layer.disparity
            _, t_inside = bilinear_sample(probe, tx, ty)
            occ |= t_inside & layer.region.contains(tx, ty) & (layer.disparity > center_d)
        gt_occlusion[vg.view] = OcclusionMask(data=occ)

    return RenderedScene(
        spec=spec, views=views, gt_disparity=gt_disparity, gt_occlusion=gt_occlusion
    )
