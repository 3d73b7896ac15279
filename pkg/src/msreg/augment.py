"""Pseudo-spectral grayscale generation from RGB images.

A color image is jittered in HSV/RGB space (hue rotation, brightness,
saturation, contrast, applied in a configurable order) and a single
channel is kept, producing grayscale images whose contrast relationships
differ from plain luma the way other spectral bands would.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from matplotlib.colors import hsv_to_rgb, rgb_to_hsv

from .core import SpectralImage

__all__ = ["AugmentParams", "augment", "sample_params"]

OPS = ("hue", "brightness", "saturation", "contrast")
CHANNELS = ("R", "G", "B")


@dataclass(frozen=True)
class AugmentParams:
    """Jitter settings; factors of exactly 1 (and hue 0 or 2*pi) are no-ops."""

    hue_angle: float = 0.0
    brightness: float = 1.0
    saturation: float = 1.0
    contrast: float = 1.0
    order: tuple[str, ...] = OPS
    channel: str = "R"

    def __post_init__(self):
        if not (0.0 <= self.hue_angle <= math.tau):
            raise ValueError("hue_angle must lie in [0, 2*pi]")
        for name in ("brightness", "saturation", "contrast"):
            value = getattr(self, name)
            if not 0.5 <= value <= 1.5:
                raise ValueError(f"{name} factor {value} outside [0.5, 1.5]")
        object.__setattr__(self, "order", tuple(self.order))
        if sorted(self.order) != sorted(OPS):
            raise ValueError(f"order must be a permutation of {OPS}")
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}")


def _check_rgb(rgb: np.ndarray) -> np.ndarray:
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) RGB array")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("RGB values must lie in [0, 1]")
    return arr


def _apply_hue(rgb: np.ndarray, angle: float) -> np.ndarray:
    shift = (angle / math.tau) % 1.0
    if shift == 0.0:
        return rgb
    hsv = rgb_to_hsv(rgb)
    hsv[..., 0] = (hsv[..., 0] + shift) % 1.0
    return np.clip(hsv_to_rgb(hsv), 0.0, 1.0)


def _apply_hsv_factor(rgb: np.ndarray, channel: int, factor: float) -> np.ndarray:
    if factor == 1.0:
        return rgb
    hsv = rgb_to_hsv(rgb)
    hsv[..., channel] = np.clip(hsv[..., channel] * factor, 0.0, 1.0)
    return np.clip(hsv_to_rgb(hsv), 0.0, 1.0)


def _apply_contrast(rgb: np.ndarray, factor: float) -> np.ndarray:
    if factor == 1.0:
        return rgb
    return np.clip(0.5 + factor * (rgb - 0.5), 0.0, 1.0)


def augment(rgb: np.ndarray, params: AugmentParams) -> SpectralImage:
    """Apply the jitters in ``params.order`` and keep one channel.

    Purely per-pixel, so it commutes with cropping.  Each step clamps its
    result to [0, 1].  Identity parameters skip their conversions entirely
    and reproduce the selected channel bit-exactly.
    """
    out = _check_rgb(rgb)
    for op in params.order:
        if op == "hue":
            out = _apply_hue(out, params.hue_angle)
        elif op == "brightness":
            out = _apply_hsv_factor(out, 2, params.brightness)
        elif op == "saturation":
            out = _apply_hsv_factor(out, 1, params.saturation)
        else:
            out = _apply_contrast(out, params.contrast)
    idx = CHANNELS.index(params.channel)
    return SpectralImage(data=out[..., idx])


def sample_params(rng_seed) -> AugmentParams:
    """Draw jitter parameters: hue uniform on the circle, factors uniform
    in [0.5, 1.5], order uniform over the 24 permutations, channel uniform."""
    rng = np.random.default_rng(rng_seed)
    hue = rng.uniform(0.0, math.tau)
    brightness, saturation, contrast = rng.uniform(0.5, 1.5, size=3)
    order = tuple(OPS[i] for i in rng.permutation(len(OPS)))
    channel = CHANNELS[int(rng.integers(0, len(CHANNELS)))]
    return AugmentParams(
        hue_angle=float(hue),
        brightness=float(brightness),
        saturation=float(saturation),
        contrast=float(contrast),
        order=order,
        channel=channel,
    )
