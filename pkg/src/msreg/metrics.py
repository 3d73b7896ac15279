"""Image quality metrics: PSNR, SSIM, MS-SSIM, and the masked composite loss."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import OcclusionMask, SpectralImage

__all__ = [
    "LossParams",
    "psnr",
    "ssim",
    "ms_ssim",
    "masked_loss",
    "masked_mae",
]

_WINDOW_SIZE = 11
_WINDOW_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03

# canonical 5-scale MS-SSIM weights (their published sum is 1.0001)
_MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


@dataclass(frozen=True)
class LossParams:
    theta: float = 0.84
    msssim_scales: int = 5
    msssim_weights: tuple[float, ...] = _MSSSIM_WEIGHTS

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        object.__setattr__(self, "msssim_weights", tuple(self.msssim_weights))
        if len(self.msssim_weights) != self.msssim_scales:
            raise ValueError("need one MS-SSIM weight per scale")
        if abs(sum(self.msssim_weights) - 1.0) > 2e-3:
            raise ValueError("MS-SSIM weights must sum to 1 (within rounding)")


def _check_pair(a: SpectralImage, b: SpectralImage) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError("images must share dimensions")


def psnr(a: SpectralImage, b: SpectralImage, mask: np.ndarray | None = None) -> float:
    """10*log10(1/MSE) with peak 1.0; identical images give +inf.

    ``mask`` restricts the MSE to selected pixels (used for occluded-region
    scores); an empty mask also returns the +inf sentinel.
    """
    _check_pair(a, b)
    diff = a.data - b.data
    if mask is not None:
        if mask.shape != diff.shape:
            raise ValueError("mask must match image dimensions")
        diff = diff[mask]
    if diff.size == 0:
        return math.inf
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse)


def _gaussian_kernel() -> np.ndarray:
    offsets = np.arange(_WINDOW_SIZE, dtype=np.float64) - (_WINDOW_SIZE - 1) / 2.0
    k = np.exp(-(offsets**2) / (2.0 * _WINDOW_SIGMA**2))
    return k / k.sum()


def _window_filter(arr: np.ndarray) -> np.ndarray:
    """Gaussian-window local mean, cropped to windows fully inside the image."""
    k = _gaussian_kernel()
    out = ndimage.correlate1d(arr, k, axis=0, mode="constant")
    out = ndimage.correlate1d(out, k, axis=1, mode="constant")
    m = _WINDOW_SIZE // 2
    return out[m:-m, m:-m]


def _ssim_maps(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if min(a.shape) < _WINDOW_SIZE:
        raise ValueError(f"images must be at least {_WINDOW_SIZE} pixels per side for SSIM")
    c1 = _K1 * _K1
    c2 = _K2 * _K2
    mu_a = _window_filter(a)
    mu_b = _window_filter(b)
    var_a = _window_filter(a * a) - mu_a * mu_a
    var_b = _window_filter(b * b) - mu_b * mu_b
    cov = _window_filter(a * b) - mu_a * mu_b
    cs = (2.0 * cov + c2) / (var_a + var_b + c2)
    lum = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1)
    return lum * cs, cs


def ssim(a: SpectralImage, b: SpectralImage) -> float:
    """Mean SSIM, 11x11 Gaussian window (sigma 1.5), dynamic range 1.0."""
    _check_pair(a, b)
    ssim_map, _ = _ssim_maps(a.data, b.data)
    return float(ssim_map.mean())


def _half(arr: np.ndarray) -> np.ndarray:
    h, w = arr.shape
    h2, w2 = h // 2, w // 2
    return arr[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2).mean(axis=(1, 3))


def ms_ssim(a: SpectralImage, b: SpectralImage, params: LossParams | None = None) -> float:
    """Multi-scale SSIM over a dyadic pyramid.

    Contrast-structure means weight every scale; the luminance term enters
    at the coarsest only.  Non-positive scale terms clamp to 0 before the
    weighted geometric mean (they only arise on adversarial inputs).
    """
    if params is None:
        params = LossParams()
    _check_pair(a, b)
    scales = params.msssim_scales
    need = _WINDOW_SIZE * 2 ** (scales - 1)
    if min(a.data.shape) < need:
        raise ValueError(
            f"images must be at least {need} pixels per side for {scales} scales"
        )
    xa, xb = a.data, b.data
    terms = []
    for level in range(scales):
        ssim_map, cs_map = _ssim_maps(xa, xb)
        if level < scales - 1:
            terms.append(float(cs_map.mean()))
            xa = _half(xa)
            xb = _half(xb)
        else:
            terms.append(float(ssim_map.mean()))
    score = 1.0
    for term, weight in zip(terms, params.msssim_weights):
        score *= max(term, 0.0) ** weight
    return float(score)


def masked_mae(a: SpectralImage, b: SpectralImage, mask: np.ndarray) -> float:
    """Mean absolute error over selected pixels (0 when mask is empty)."""
    _check_pair(a, b)
    if mask.shape != a.data.shape:
        raise ValueError("mask must match image dimensions")
    n = int(np.count_nonzero(mask))
    if n == 0:
        return 0.0
    return float(np.abs(a.data - b.data)[mask].sum() / n)


def masked_loss(
    filled: SpectralImage,
    reference: SpectralImage,
    occluded: OcclusionMask,
    params: LossParams | None = None,
) -> float:
    """Occluded-region L1 plus full-image MS-SSIM complement.

    (1 - theta) * mean_{O=1} |filled - reference| + theta * (1 - MS-SSIM),
    with the MS-SSIM taken over the whole image, not only the masked part.
    An empty mask drops the L1 term.

    Flat-offset example: two constant 176x176 images at 0.5 and 0.6 under a
    full mask give L1 = 0.1 and MS-SSIM ~= 0.997799, so the default
    theta = 0.84 composite is ~0.0178485.
    """
    if params is None:
        params = LossParams()
    _check_pair(filled, reference)
    if occluded.data.shape != filled.data.shape:
        raise ValueError("mask must match image dimensions")
    l1 = masked_mae(filled, reference, occluded.data)
    return (1.0 - params.theta) * l1 + params.theta * (1.0 - ms_ssim(filled, reference, params))
