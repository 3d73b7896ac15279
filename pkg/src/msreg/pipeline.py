"""Batch pipeline: stage drivers, scene-directory layout, reports.

A scene directory holds one 16-bit PNG per view named by grid position
(r0c0 .. r2c2, center r1c1).  ``run_register`` produces, in the output
directory: disparity.pfm (fused), warped_*.png, occlusion_*.png,
registered_*.png, config.json and timing.json.

Determinism: every stage result is canonicalized through its file
representation (disparity through float32, images through 16-bit codes)
before downstream stages consume it, so a run resumed from intermediates
is byte-identical to a single-shot run.  timing.json is the one output
exempt from byte-identity.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fileio
from .core import (
    ArrayGeometry,
    DisparityMap,
    OcclusionMask,
    SpectralImage,
    standard_3x3_geometry,
)
from .augment import augment, sample_params
from .disparity import MatcherParams, estimate_all
from .metrics import masked_mae, ms_ssim, psnr, ssim
from .occlusion import OcclusionParams, detect_all, out_of_frame
from .reconstruct import GridParams, reconstruct_guided
from .synth import HalfPlane, Layer, Rect, SceneSpec, render
from .warp import WarpedView, warp_all

__all__ = [
    "STAGES",
    "PipelineConfig",
    "view_name",
    "load_frames",
    "run_register",
    "run_disparity",
    "run_occlusion",
    "run_eval",
    "run_synth",
    "run_augment",
    "spec_from_dict",
    "jsonable",
]

STAGES = ("disparity", "warp", "occlusion", "reconstruct")


def view_name(view: int) -> str:
    row, col = divmod(view, 3)
    return f"r{row}c{col}"


@dataclass
class PipelineConfig:
    input_dir: Path
    output_dir: Path
    baseline: float = 1.0
    matcher: MatcherParams = field(default_factory=MatcherParams)
    occlusion: OcclusionParams = field(default_factory=OcclusionParams)
    grid: GridParams = field(default_factory=GridParams)
    disparity_dir: Path | None = None
    threads: int = 1
    stop_after: str | None = None
    resume: bool = False

    def __post_init__(self):
        if self.stop_after is not None and self.stop_after not in STAGES:
            raise ValueError(f"stop_after must be one of {STAGES}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def geometry(self) -> ArrayGeometry:
        return standard_3x3_geometry(self.baseline)


def _canonical_disparity(disp: DisparityMap) -> DisparityMap:
    """Round-trip through the float32 the PFM file stores."""
    return DisparityMap(data=disp.data.astype(np.float32).astype(np.float64))


def _canonical_image(img: SpectralImage) -> SpectralImage:
    """Round-trip through 16-bit PNG code values."""
    return SpectralImage(data=fileio.quantize16(img.data) / 65535.0, valid=img.valid)


def load_frames(input_dir: Path) -> list[SpectralImage]:
    """Read the nine grid views; errors name exactly what is missing."""
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise FileNotFoundError(f"input directory {input_dir} does not exist")
    present: dict[int, SpectralImage] = {}
    missing = []
    for view in range(9):
        path = input_dir / f"{view_name(view)}.png"
        if path.exists():
            present[view] = SpectralImage(data=fileio.read_gray16(path))
        else:
            missing.append(path.name)
    if missing:
        if set(present) == {4}:
            raise ValueError("nothing to register: only the center view is present")
        raise FileNotFoundError(
            f"missing view images in {input_dir}: {', '.join(missing)}"
        )
    shape = present[4].data.shape
    for view, img in present.items():
        if img.data.shape != shape:
            raise ValueError(
                f"view {view_name(view)} has shape {img.data.shape}, center has {shape}"
            )
    return [present[v] for v in range(9)]


def run_register(config: PipelineConfig) -> dict:
    """Full registration: disparity -> warp -> occlusion -> reconstruct.

    With ``resume`` set, stages whose outputs already exist in the output
    directory are loaded instead of recomputed.  ``stop_after`` ends the
    run after the named stage.
    """
    geom = config.geometry()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames = load_frames(Path(config.input_dir))
    timing: dict[str, float] = {}

    def finalize() -> dict:
        fileio.write_json(out / "config.json", _config_echo(config))
        fileio.write_json(out / "timing.json", timing)
        return {"timing": timing, "output_dir": str(out)}

    # stage: disparity
    t0 = time.perf_counter()
    disp_path = out / "disparity.pfm"
    if config.resume and disp_path.exists():
        disp = DisparityMap(data=fileio.read_pfm(disp_path))
    elif config.disparity_dir is not None:
        disp = DisparityMap(data=fileio.read_pfm(Path(config.disparity_dir) / "disparity.pfm"))
    else:
        disp = estimate_all(frames, geom, config.matcher, threads=config.threads)
    disp = _canonical_disparity(disp)
    timing["disparity"] = time.perf_counter() - t0
    fileio.write_pfm(disp_path, disp.data)
    if config.stop_after == "disparity":
        return finalize()

    # stage: warp
    t0 = time.perf_counter()
    warp_paths = {vg.view: out / f"warped_{view_name(vg.view)}.png" for vg in geom.views}
    if config.resume and all(p.exists() for p in warp_paths.values()):
        warped = [
            WarpedView(
                view=vg.view,
                image=SpectralImage(
                    data=fileio.read_gray16(warp_paths[vg.view]),
                    valid=~out_of_frame(disp, vg),
                ),
            )
            for vg in geom.views
        ]
    else:
        warped = [
            WarpedView(view=wv.view, image=_canonical_image(wv.image))
            for wv in warp_all(frames, geom, disp)
        ]
    timing["warp"] = time.perf_counter() - t0
    for wv in warped:
        fileio.write_gray16(warp_paths[wv.view], wv.data)
    if config.stop_after == "warp":
        return finalize()

    # stage: occlusion
    t0 = time.perf_counter()
    mask_paths = {vg.view: out / f"occlusion_{view_name(vg.view)}.png" for vg in geom.views}
    if config.resume and all(p.exists() for p in mask_paths.values()):
        masks = {v: OcclusionMask(data=fileio.read_mask(p)) for v, p in mask_paths.items()}
    else:
        masks = detect_all(disp, geom, config.occlusion, include_out_of_frame=True)
    timing["occlusion"] = time.perf_counter() - t0
    for view, path in mask_paths.items():
        fileio.write_mask(path, masks[view].data)
    if config.stop_after == "occlusion":
        return finalize()

    # stage: reconstruct
    t0 = time.perf_counter()
    center = frames[geom.center_index]
    registered = {}
    for wv in warped:
        recon = reconstruct_guided(center, wv, masks[wv.view], config.grid)
        registered[wv.view] = _canonical_image(recon)
    timing["reconstruct"] = time.perf_counter() - t0
    for view, img in registered.items():
        fileio.write_gray16(out / f"registered_{view_name(view)}.png", img.data)
    return finalize()


def _config_echo(config: PipelineConfig) -> dict:
    return {
        "input_dir": str(config.input_dir),
        "output_dir": str(config.output_dir),
        "geometry": {"type": "standard_3x3", "baseline": config.baseline},
        "matcher": asdict(config.matcher),
        "occlusion": asdict(config.occlusion),
        "grid": asdict(config.grid),
        "disparity_dir": None if config.disparity_dir is None else str(config.disparity_dir),
        "threads": config.threads,
    }


def run_disparity(config: PipelineConfig) -> dict:
    """Estimation stage only: fused disparity map plus timing."""
    geom = config.geometry()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames = load_frames(Path(config.input_dir))
    t0 = time.perf_counter()
    disp = _canonical_disparity(estimate_all(frames, geom, config.matcher, threads=config.threads))
    timing = {"disparity": time.perf_counter() - t0}
    fileio.write_pfm(out / "disparity.pfm", disp.data)
    fileio.write_json(out / "timing.json", timing)
    return {"timing": timing, "output_dir": str(out)}


def run_occlusion(
    disparity_path: Path,
    output_dir: Path,
    params: OcclusionParams,
    baseline: float = 1.0,
) -> dict:
    """Sweep + dilation per view from a disparity file.

    Out-of-frame union is deliberately not applied here (it belongs to the
    register pipeline where actual frames exist), so a constant map yields
    all-empty masks.
    """
    disp = DisparityMap(data=fileio.read_pfm(Path(disparity_path)))
    geom = standard_3x3_geometry(baseline)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    masks = detect_all(disp, geom, params, include_out_of_frame=False)
    paths = []
    for vg in geom.views:
        path = out / f"occlusion_{view_name(vg.view)}.png"
        fileio.write_mask(path, masks[vg.view].data)
        paths.append(str(path))
    return {"outputs": paths}


def _pair_files(pred_dir: Path, gt_dir: Path) -> list[tuple[str, Path, Path]]:
    gt_views = sorted(gt_dir.glob("view_*.png"))
    pairs = []
    if gt_views:
        for gt_path in gt_views:
            token = gt_path.stem.removeprefix("view_")
            pred_path = pred_dir / f"registered_{token}.png"
            if not pred_path.exists():
                raise FileNotFoundError(f"no prediction {pred_path} for {gt_path.name}")
            pairs.append((token, pred_path, gt_path))
    else:
        for gt_path in sorted(gt_dir.glob("*.png")):
            pred_path = pred_dir / gt_path.name
            if pred_path.exists():
                pairs.append((gt_path.stem, pred_path, gt_path))
    if not pairs:
        raise FileNotFoundError(f"no comparable images between {pred_dir} and {gt_dir}")
    return pairs


def run_eval(pred_dir: Path, gt_dir: Path) -> dict:
    """Per-view PSNR/SSIM/MS-SSIM report, masked variants where ground-truth
    occlusion masks are available.  MS-SSIM is null when images are too
    small for its 5-scale pyramid."""
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    views = {}
    for token, pred_path, gt_path in _pair_files(pred_dir, gt_dir):
        pred = SpectralImage(data=fileio.read_gray16(pred_path))
        gt = SpectralImage(data=fileio.read_gray16(gt_path))
        entry = {"psnr": psnr(pred, gt), "ssim": ssim(pred, gt)}
        try:
            entry["ms_ssim"] = ms_ssim(pred, gt)
        except ValueError:
            entry["ms_ssim"] = None
        occ_path = gt_dir / f"occlusion_{token}.png"
        if occ_path.exists():
            occ = fileio.read_mask(occ_path)
            entry["masked_psnr"] = psnr(pred, gt, mask=occ)
            entry["masked_mae"] = masked_mae(pred, gt, occ)
        views[token] = entry
    keys = sorted({k for entry in views.values() for k, v in entry.items() if v is not None})
    mean = {}
    for key in keys:
        values = [e[key] for e in views.values() if e.get(key) is not None]
        if values:
            mean[key] = sum(values) / len(values)
    return {"views": views, "mean": mean}


def _region_from_dict(d: dict):
    kind = d.get("type")
    if kind == "rect":
        return Rect(x0=float(d["x0"]), y0=float(d["y0"]), x1=float(d["x1"]), y1=float(d["y1"]))
    if kind == "half_plane":
        return HalfPlane(a=float(d["a"]), b=float(d["b"]), c=float(d["c"]))
    raise ValueError(f"unknown region type {kind!r} (expected 'rect' or 'half_plane')")


def spec_from_dict(d: dict) -> SceneSpec:
    """Build a scene from its JSON form; see README for the schema."""
    geo = d.get("geometry", {"type": "standard_3x3", "baseline": 1.0})
    if geo.get("type") != "standard_3x3":
        raise ValueError("only geometry type 'standard_3x3' is supported")
    try:
        layers = tuple(
            Layer(
                region=_region_from_dict(ld["region"]),
                disparity=float(ld["disparity"]),
                texture_seed=int(ld["texture_seed"]),
                spectral_gains=tuple((float(g), float(b)) for g, b in ld["spectral_gains"]),
            )
            for ld in d["layers"]
        )
        return SceneSpec(
            width=int(d["width"]),
            height=int(d["height"]),
            layers=layers,
            num_bands=int(d["num_bands"]),
            geometry=standard_3x3_geometry(float(geo.get("baseline", 1.0))),
            noise_scale=float(d.get("noise_scale", 8.0)),
        )
    except KeyError as exc:
        raise ValueError(f"scene spec is missing required key {exc}") from exc


def run_synth(spec_dict: dict, output_dir: Path) -> dict:
    """Render a scene to disk in the register input layout plus gt/."""
    spec = spec_from_dict(spec_dict)
    num_views = spec.geometry.num_views
    assignment = spec_dict.get("band_assignment")
    if assignment is None:
        assignment = [v % spec.num_bands for v in range(num_views)]
    assignment = [int(b) for b in assignment]
    if len(assignment) != num_views:
        raise ValueError(f"band_assignment needs {num_views} entries")
    if any(b < 0 or b >= spec.num_bands for b in assignment):
        raise ValueError("band_assignment indices out of range")

    scene = render(spec)
    out = Path(output_dir)
    (out / "gt").mkdir(parents=True, exist_ok=True)
    for view in range(num_views):
        img = scene.views[view][assignment[view]]
        if not img.valid_mask().all():
            raise ValueError(
                f"view {view_name(view)} is not fully covered; give the scene a "
                "full-frame background layer with disparity 0"
            )
        fileio.write_gray16(out / f"{view_name(view)}.png", img.data)
        if view == spec.geometry.center_index:
            continue
        # registration target: the same band seen from the center position
        center_band = scene.views[spec.geometry.center_index][assignment[view]]
        fileio.write_gray16(out / "gt" / f"view_{view_name(view)}.png", center_band.data)
    fileio.write_pfm(out / "gt" / "disparity.pfm", scene.gt_disparity.data)
    for vg in spec.geometry.views:
        fileio.write_mask(
            out / "gt" / f"occlusion_{view_name(vg.view)}.png",
            scene.gt_occlusion[vg.view].data,
        )
    echo = dict(spec_dict)
    echo["band_assignment"] = assignment
    fileio.write_json(out / "spec.json", echo)
    return {"output_dir": str(out)}


def run_augment(input_dir: Path, output_dir: Path, seed: int) -> dict:
    """Pseudo-spectral grayscale for every image in a directory.

    Per-file parameters derive deterministically from the seed and the
    sorted file order; they are recorded in params.json next to the
    outputs."""
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise FileNotFoundError(f"input directory {input_dir} does not exist")
    exts = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}
    files = sorted(p for p in input_dir.iterdir() if p.suffix.lower() in exts)
    if not files:
        raise FileNotFoundError(f"no images found in {input_dir}")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    children = np.random.SeedSequence(seed).spawn(len(files))
    records = {}
    for path, child in zip(files, children):
        params = sample_params(child)
        gray = augment(fileio.read_rgb(path), params)
        out_name = path.stem + ".png"
        fileio.write_gray16(out / out_name, gray.data)
        records[out_name] = {
            "hue_angle": params.hue_angle,
            "brightness": params.brightness,
            "saturation": params.saturation,
            "contrast": params.contrast,
            "order": list(params.order),
            "channel": params.channel,
        }
    fileio.write_json(out / "params.json", records)
    return {"outputs": len(records), "output_dir": str(out)}


def jsonable(obj):
    """Recursively replace non-finite floats with string sentinels."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        if math.isnan(obj):
            return "nan"
        return "inf" if obj > 0 else "-inf"
    return obj
