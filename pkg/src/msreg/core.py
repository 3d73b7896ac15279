"""Domain types, camera-array geometry and epipolar rotation.

Coordinate conventions used throughout the package:

* Rasters are ``(height, width)`` numpy arrays, x to the right, y down.
* Disparity is non-negative and expressed in center-baseline pixel units.
  A center pixel ``(x, y)`` appears in peripheral view ``v`` at
  ``(x + alpha_x * D, y + alpha_y * D)``.
* Rotation angles are the bearing ``atan2(alpha_y, alpha_x)`` of a view's
  displacement direction.  ``rotate_image(img, angle)`` turns that
  displacement onto the +x axis, so disparity in the rotated frame is
  purely horizontal and positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpectralImage",
    "DisparityMap",
    "OcclusionMask",
    "ViewGeometry",
    "ArrayGeometry",
    "standard_3x3_geometry",
    "rotate_image",
    "derotate_disparity",
]

# coordinates this close to an integer snap to it; keeps pure 90-degree
# rotations and integer shifts bit-exact despite cos/sin round-off
_SNAP_EPS = 1e-9


def _as_raster(data, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D raster, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SpectralImage:
    """Single-band grayscale raster with values in [0, 1].

    ``valid`` marks pixels that carry scene content; padding introduced by
    rotation is 0 there.  ``None`` means everything is valid.
    """

    data: np.ndarray
    valid: np.ndarray | None = None

    def __post_init__(self):
        data = _as_raster(self.data, "data")
        if not np.all(np.isfinite(data)):
            raise ValueError("image data must be finite")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise ValueError("image data must lie in [0, 1]")
        object.__setattr__(self, "data", data)
        if self.valid is not None:
            valid = np.ascontiguousarray(self.valid).astype(bool)
            if valid.shape != data.shape:
                raise ValueError("valid mask dimensions must match data")
            object.__setattr__(self, "valid", valid)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def valid_mask(self) -> np.ndarray:
        """Validity as a bool raster (all-true when no mask is stored)."""
        if self.valid is None:
            return np.ones(self.data.shape, dtype=bool)
        return self.valid


@dataclass(frozen=True)
class DisparityMap:
    """Per-pixel disparity in center-view coordinates, center-baseline units."""

    data: np.ndarray

    def __post_init__(self):
        data = _as_raster(self.data, "disparity")
        if not np.all(np.isfinite(data)):
            raise ValueError("disparity must be finite")
        if data.size and data.min() < 0.0:
            raise ValueError("disparity must be non-negative")
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class OcclusionMask:
    """Binary raster in center-view coordinates; True = occluded."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data)
        if arr.dtype != bool:
            uniq = np.unique(arr)
            if uniq.size and not np.all(np.isin(uniq, (0, 1))):
                raise ValueError("occlusion mask values must be 0 or 1")
            arr = arr.astype(bool)
        if arr.ndim != 2:
            raise ValueError("occlusion mask must be 2-D")
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class ViewGeometry:
    """Epipolar parameters of one peripheral view.

    ``angle`` is the rotation (bearing of the displacement direction) that
    makes the view's disparity purely horizontal; ``baseline_factor`` is the
    camera distance relative to an axis-aligned neighbor (sqrt(2) for
    corners).  ``alpha_x``/``alpha_y`` place the view in the pull-warp
    ``(x + alpha_x * D, y + alpha_y * D)``.
    """

    view: int
    angle: float
    baseline_factor: float
    alpha_x: float
    alpha_y: float

    def __post_init__(self):
        norm = math.hypot(self.alpha_x, self.alpha_y)
        if abs(norm - self.baseline_factor) > 1e-12:
            raise ValueError(
                f"view {self.view}: |alpha| = {norm} does not match "
                f"baseline_factor {self.baseline_factor}"
            )

    @property
    def direction(self) -> tuple[int, int]:
        """Unit step of the warp direction, one of the 8 compass steps."""
        sx = 0 if abs(self.alpha_x) < 1e-12 else (1 if self.alpha_x > 0 else -1)
        sy = 0 if abs(self.alpha_y) < 1e-12 else (1 if self.alpha_y > 0 else -1)
        return sx, sy


@dataclass(frozen=True)
class ArrayGeometry:
    """Camera-array geometry: one center view plus peripheral views."""

    num_views: int
    center_index: int
    views: tuple[ViewGeometry, ...]
    baseline: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "views", tuple(self.views))
        seen = {v.view for v in self.views}
        if self.center_index in seen:
            raise ValueError("center view cannot appear among peripheral views")
        if len(seen) != len(self.views):
            raise ValueError("duplicate peripheral view index")
        if len(self.views) != self.num_views - 1:
            raise ValueError("expected one geometry entry per peripheral view")

    def view(self, index: int) -> ViewGeometry:
        for v in self.views:
            if v.view == index:
                return v
        raise KeyError(f"no peripheral view {index}")


def standard_3x3_geometry(baseline: float = 1.0) -> ArrayGeometry:
    """Geometry of the standard 3x3 grid, row-major view ids, center id 4.

    Axis-aligned neighbors get baseline_factor 1, corners sqrt(2).  The
    ``baseline`` scalar is carried as metadata: disparities are expressed
    in units of this axis-aligned baseline.
    """
    views = []
    for idx in range(9):
        if idx == 4:
            continue
        row, col = divmod(idx, 3)
        # camera offset in grid steps; content displacement is its negative
        ax = float(1 - col)
        ay = float(1 - row)
        views.append(
            ViewGeometry(
                view=idx,
                angle=math.atan2(ay, ax),
                baseline_factor=math.hypot(ax, ay),
                alpha_x=ax,
                alpha_y=ay,
            )
        )
    return ArrayGeometry(num_views=9, center_index=4, views=tuple(views), baseline=baseline)


def _rotated_canvas(width: int, height: int, angle: float) -> tuple[int, int]:
    c = abs(math.cos(angle))
    s = abs(math.sin(angle))
    # round before ceil so exact multiples of 90 degrees keep their size
    w_out = math.ceil(round(width * c + height * s, 9))
    h_out = math.ceil(round(width * s + height * c, 9))
    return w_out, h_out


def _snap(coords: np.ndarray) -> np.ndarray:
    rounded = np.round(coords)
    return np.where(np.abs(coords - rounded) < _SNAP_EPS, rounded, coords)


def bilinear_sample(
    raster: np.ndarray, xs: np.ndarray, ys: np.ndarray, fill: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``raster`` at float coordinates with bilinear interpolation.

    Returns ``(values, inside)`` where ``inside`` flags samples whose
    coordinates lie within the raster bounds; outside samples get ``fill``.
    Coordinates within 1e-9 of an integer are snapped so that integer
    shifts and quarter-turn rotations reproduce values bit-exactly.
    """
    h, w = raster.shape
    xs = _snap(np.asarray(xs, dtype=np.float64))
    ys = _snap(np.asarray(ys, dtype=np.float64))
    inside = (xs >= 0.0) & (xs <= w - 1.0) & (ys >= 0.0) & (ys <= h - 1.0)

    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    x0 = np.clip(x0, 0, w - 1)
    y0 = np.clip(y0, 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)

    top = (1.0 - fx) * raster[y0, x0] + fx * raster[y0, x1]
    bot = (1.0 - fx) * raster[y1, x0] + fx * raster[y1, x1]
    values = (1.0 - fy) * top + fy * bot
    return np.where(inside, values, fill), inside


def _rotation_pull_coords(
    out_shape: tuple[int, int], in_shape: tuple[int, int], angle: float
) -> tuple[np.ndarray, np.ndarray]:
    """Source coordinates in the input frame for every output pixel."""
    h_out, w_out = out_shape
    h_in, w_in = in_shape
    cx_out = (w_out - 1) / 2.0
    cy_out = (h_out - 1) / 2.0
    cx_in = (w_in - 1) / 2.0
    cy_in = (h_in - 1) / 2.0
    ys, xs = np.mgrid[0:h_out, 0:w_out].astype(np.float64)
    dx = xs - cx_out
    dy = ys - cy_out
    c = math.cos(angle)
    s = math.sin(angle)
    src_x = c * dx - s * dy + cx_in
    src_y = s * dx + c * dy + cy_in
    return src_x, src_y


def rotate_image(img: SpectralImage, angle: float) -> SpectralImage:
    """Resample ``img`` under rotation about the image center.

    The output canvas is the axis-aligned bounding box of the rotated
    frame; padding introduced by the rotation carries value 0 and
    ``valid`` 0.  Bilinear interpolation, center-of-pixel convention.
    """
    h, w = img.data.shape
    w_out, h_out = _rotated_canvas(w, h, angle)
    src_x, src_y = _rotation_pull_coords((h_out, w_out), (h, w), angle)

    values, inside = bilinear_sample(img.data, src_x, src_y)
    valid_f, _ = bilinear_sample(img.valid_mask().astype(np.float64), src_x, src_y)
    valid = inside & (valid_f >= 1.0 - 1e-9)
    values = np.where(valid, values, 0.0)
    return SpectralImage(data=np.clip(values, 0.0, 1.0), valid=valid)


def derotate_disparity(
    disp_rot: DisparityMap,
    angle: float,
    baseline_factor: float,
    out_shape: tuple[int, int],
) -> DisparityMap:
    """Rotate a disparity raster back to center-view orientation.

    Inverse of :func:`rotate_image` for value rasters: the padding grown by
    the forward rotation is cropped away and every value is divided by
    ``baseline_factor``, converting to center-baseline units.  ``out_shape``
    is the ``(height, width)`` of the unrotated frame.
    """
    h, w = out_shape
    w_canvas, h_canvas = _rotated_canvas(w, h, angle)
    if disp_rot.data.shape != (h_canvas, w_canvas):
        raise ValueError(
            f"rotated disparity shape {disp_rot.data.shape} does not match the "
            f"{(h_canvas, w_canvas)} canvas of a {out_shape} frame at this angle"
        )
    # forward map of rotate_image: original pixel p landed at
    # R(-angle) (p - c_in) + c_out, which is where we pull the value from
    src_x, src_y = _rotation_pull_coords((h, w), (h_canvas, w_canvas), -angle)
    values, _ = bilinear_sample(disp_rot.data, src_x, src_y)
    values = np.maximum(values, 0.0) / float(baseline_factor)
    return DisparityMap(data=values)
