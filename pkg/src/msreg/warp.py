"""Backward (pull) warping of peripheral views into the center frame."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    ArrayGeometry,
    DisparityMap,
    SpectralImage,
    ViewGeometry,
    bilinear_sample,
)

__all__ = ["WarpedView", "warp_view", "warp_all"]


@dataclass(frozen=True)
class WarpedView:
    """A peripheral view resampled onto the center grid.

    ``image.valid`` is False where the sample fell outside the source frame
    or touched invalid source pixels.
    """

    view: int
    image: SpectralImage

    @property
    def data(self) -> np.ndarray:
        return self.image.data

    @property
    def valid(self) -> np.ndarray:
        return self.image.valid_mask()


def warp_view(periph: SpectralImage, disp: DisparityMap, vg: ViewGeometry) -> WarpedView:
    """Pull-warp one peripheral view onto the center grid.

    Center pixel ``(x, y)`` samples the peripheral image at
    ``(x + alpha_x * D, y + alpha_y * D)`` with bilinear interpolation.
    Integer disparities on axis-aligned views reduce to an exact gather.
    """
    h, w = periph.data.shape
    if disp.data.shape != (h, w):
        raise ValueError("disparity map and view must share dimensions")
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    sx = xs + vg.alpha_x * disp.data
    sy = ys + vg.alpha_y * disp.data

    values, inside = bilinear_sample(periph.data, sx, sy)
    valid = inside
    if periph.valid is not None:
        vsamp, _ = bilinear_sample(periph.valid.astype(np.float64), sx, sy)
        valid = inside & (vsamp >= 1.0 - 1e-9)
    values = np.where(valid, values, 0.0)
    return WarpedView(view=vg.view, image=SpectralImage(data=np.clip(values, 0.0, 1.0), valid=valid))


def warp_all(
    frames: Sequence[SpectralImage], geom: ArrayGeometry, disp: DisparityMap
) -> list[WarpedView]:
    """Warp every peripheral view onto the center grid with a shared map."""
    if len(frames) != geom.num_views:
        raise ValueError(f"expected {geom.num_views} frames, got {len(frames)}")
    return [warp_view(frames[vg.view], disp, vg) for vg in geom.views]
