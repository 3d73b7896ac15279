"""Registration of multispectral camera-array views onto the center view.

Pipeline: cross-spectral disparity estimation and median fusion across
views, backward warping onto the center grid, layer-wise occlusion
detection, and guided reconstruction of occluded pixels through a
bilateral coefficient grid.
"""

from .core import (
    ArrayGeometry,
    DisparityMap,
    OcclusionMask,
    SpectralImage,
    ViewGeometry,
    bilinear_sample,
    derotate_disparity,
    rotate_image,
    standard_3x3_geometry,
)
from .disparity import MatcherParams, estimate_all, estimate_zncc, fuse_median
from .warp import WarpedView, warp_all, warp_view
from .occlusion import (
    OcclusionParams,
    detect_all,
    detect_occlusions,
    dilate_directional,
    extract_layer,
    oracle_occlusions,
    out_of_frame,
)
from .reconstruct import (
    CoefficientGrid,
    CoefficientImage,
    GridParams,
    apply_coefficients,
    blend,
    fit_grid,
    grid_dims,
    reconstruct_guided,
    slice_grid,
)
from .metrics import LossParams, masked_loss, masked_mae, ms_ssim, psnr, ssim
from .augment import AugmentParams, augment, sample_params
from .synth import HalfPlane, Layer, Rect, RenderedScene, SceneSpec, render

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "AugmentParams",
    "CoefficientGrid",
    "CoefficientImage",
    "DisparityMap",
    "GridParams",
    "HalfPlane",
    "Layer",
    "LossParams",
    "MatcherParams",
    "OcclusionMask",
    "OcclusionParams",
    "Rect",
    "RenderedScene",
    "SceneSpec",
    "SpectralImage",
    "ViewGeometry",
    "WarpedView",
    "apply_coefficients",
    "augment",
    "bilinear_sample",
    "blend",
    "derotate_disparity",
    "detect_all",
    "detect_occlusions",
    "dilate_directional",
    "estimate_all",
    "estimate_zncc",
    "extract_layer",
    "fit_grid",
    "fuse_median",
    "grid_dims",
    "masked_loss",
    "masked_mae",
    "ms_ssim",
    "oracle_occlusions",
    "out_of_frame",
    "psnr",
    "reconstruct_guided",
    "render",
    "rotate_image",
    "sample_params",
    "slice_grid",
    "ssim",
    "standard_3x3_geometry",
    "warp_all",
    "warp_view",
]
