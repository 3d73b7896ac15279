"""Command-line driver.

Subcommands: register, disparity, occlusion, synth, augment, eval.
Exit codes: 0 success, 1 validation error, 2 IO error, 3 internal error.
Parameters can come from a JSON config file (--config); explicit flags
override it.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from . import fileio, pipeline
from .disparity import MatcherParams
from .occlusion import OcclusionParams
from .reconstruct import GridParams

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for IO here
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_VALIDATION)


def _get(cfg: dict, section: str, key: str, default):
    sec = cfg.get(section)
    if isinstance(sec, dict) and key in sec:
        return sec[key]
    return default


def _pick(flag_value, cfg: dict, section: str, key: str, default):
    if flag_value is not None:
        return flag_value
    return _get(cfg, section, key, default)


def _matcher_params(args, cfg: dict) -> MatcherParams:
    d = MatcherParams()
    return MatcherParams(
        window_radius=int(_pick(args.window_radius, cfg, "matcher", "window_radius", d.window_radius)),
        d_min=int(_pick(args.d_min, cfg, "matcher", "d_min", d.d_min)),
        d_max=int(_pick(args.d_max, cfg, "matcher", "d_max", d.d_max)),
        subpixel=bool(_pick(args.subpixel, cfg, "matcher", "subpixel", d.subpixel)),
        abs_correlation=bool(
            _pick(args.abs_correlation, cfg, "matcher", "abs_correlation", d.abs_correlation)
        ),
    )


def _occlusion_params(args, cfg: dict) -> OcclusionParams:
    d = OcclusionParams()
    return OcclusionParams(
        tau=float(_pick(args.tau, cfg, "occlusion", "tau", d.tau)),
        phi=float(_pick(args.phi, cfg, "occlusion", "phi", d.phi)),
        kappa=int(_pick(args.kappa, cfg, "occlusion", "kappa", d.kappa)),
    )


def _grid_params(args, cfg: dict) -> GridParams:
    d = GridParams()
    return GridParams(
        spatial_bin=int(_pick(args.spatial_bin, cfg, "grid", "spatial_bin", d.spatial_bin)),
        luma_bins=int(_pick(args.luma_bins, cfg, "grid", "luma_bins", d.luma_bins)),
        lambda_reg=float(_pick(args.lambda_reg, cfg, "grid", "lambda_reg", d.lambda_reg)),
        min_weight=float(_pick(args.min_weight, cfg, "grid", "min_weight", d.min_weight)),
    )


def _load_cfg(args) -> dict:
    if getattr(args, "config", None) is None:
        return {}
    cfg = fileio.read_json(args.config)
    if not isinstance(cfg, dict):
        raise ValueError(f"config file {args.config} must hold a JSON object")
    return cfg


def _require_dir(flag_value, cfg: dict, key: str, flag: str) -> Path:
    value = flag_value if flag_value is not None else cfg.get(key)
    if value is None:
        raise ValueError(f"{flag} is required (flag or config key '{key}')")
    return Path(value)


def _pipeline_config(args, need_register_stages: bool) -> pipeline.PipelineConfig:
    cfg = _load_cfg(args)
    disparity_dir = None
    stop_after = None
    resume = False
    if need_register_stages:
        dd = args.disparity_dir if args.disparity_dir is not None else cfg.get("disparity_dir")
        disparity_dir = None if dd is None else Path(dd)
        stop_after = args.stop_after
        resume = args.resume
    return pipeline.PipelineConfig(
        input_dir=_require_dir(args.input, cfg, "input_dir", "--input"),
        output_dir=_require_dir(args.output, cfg, "output_dir", "--output"),
        baseline=float(_pick(args.baseline, cfg, "geometry", "baseline", 1.0)),
        matcher=_matcher_params(args, cfg),
        occlusion=_occlusion_params(args, cfg) if need_register_stages else OcclusionParams(),
        grid=_grid_params(args, cfg) if need_register_stages else GridParams(),
        disparity_dir=disparity_dir,
        threads=int(_pick(args.threads, cfg, "run", "threads", 1)),
        stop_after=stop_after,
        resume=resume,
    )


def _add_matcher_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window-radius", type=int, help="matching window radius in pixels")
    p.add_argument("--d-min", type=int, help="minimum disparity searched")
    p.add_argument("--d-max", type=int, help="maximum disparity searched")
    p.add_argument(
        "--subpixel", action=argparse.BooleanOptionalAction, help="parabolic refinement"
    )
    p.add_argument(
        "--abs-correlation",
        action=argparse.BooleanOptionalAction,
        help="score |ZNCC| (cross-spectral) instead of signed ZNCC",
    )


def _add_occlusion_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, help="disparity layer half-width")
    p.add_argument("--phi", type=float, help="occlusion depth threshold")
    p.add_argument("--kappa", type=int, help="directional dilation radius")


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spatial-bin", type=int, help="grid cell size in pixels")
    p.add_argument("--luma-bins", type=int, help="number of luma bins")
    p.add_argument("--lambda-reg", type=float, help="Tikhonov pull strength")
    p.add_argument("--min-weight", type=float, help="cell weight below which the global fit is used")


def _add_common_io(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="scene directory with r{row}c{col}.png views")
    p.add_argument("--output", help="output directory")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--baseline", type=float, help="axis-aligned baseline (metadata)")
    p.add_argument("--threads", type=int, help="worker threads for per-view stages")


def _cmd_register(args) -> dict:
    config = _pipeline_config(args, need_register_stages=True)
    return pipeline.run_register(config)


def _cmd_disparity(args) -> dict:
    config = _pipeline_config(args, need_register_stages=False)
    return pipeline.run_disparity(config)


def _cmd_occlusion(args) -> dict:
    params = _occlusion_params(args, {})
    return pipeline.run_occlusion(
        Path(args.disparity), Path(args.output), params, baseline=args.baseline
    )


def _cmd_synth(args) -> dict:
    spec = fileio.read_json(args.spec)
    if not isinstance(spec, dict):
        raise ValueError("scene spec must be a JSON object")
    return pipeline.run_synth(spec, Path(args.output))


def _cmd_augment(args) -> dict:
    return pipeline.run_augment(Path(args.input), Path(args.output), args.seed)


def _cmd_eval(args) -> dict:
    report = pipeline.run_eval(Path(args.pred), Path(args.gt))
    if args.out:
        fileio.write_json(args.out, pipeline.jsonable(report))
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="msreg", description="Multispectral camera-array registration")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("register", help="full pipeline: disparity, warp, occlusion, reconstruct")
    _add_common_io(p)
    _add_matcher_flags(p)
    _add_occlusion_flags(p)
    _add_grid_flags(p)
    p.add_argument("--disparity-dir", help="use externally computed disparity.pfm from this directory")
    p.add_argument("--stop-after", choices=pipeline.STAGES, help="end the run after this stage")
    p.add_argument(
        "--resume", action="store_true", help="reuse stage outputs already in the output directory"
    )
    p.set_defaults(func=_cmd_register)

    p = sub.add_parser("disparity", help="estimation stage only: fused disparity map")
    _add_common_io(p)
    _add_matcher_flags(p)
    p.set_defaults(func=_cmd_disparity)

    p = sub.add_parser("occlusion", help="per-view occlusion masks from a disparity PFM")
    p.add_argument("--disparity", required=True, help="input disparity.pfm")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--baseline", type=float, default=1.0)
    _add_occlusion_flags(p)
    p.set_defaults(func=_cmd_occlusion)

    p = sub.add_parser("synth", help="render a synthetic scene with ground truth")
    p.add_argument("--spec", required=True, help="scene spec JSON")
    p.add_argument("--output", required=True, help="scene directory to create")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("augment", help="pseudo-spectral grayscale from RGB images")
    p.add_argument("--input", required=True, help="directory of RGB images")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("eval", help="PSNR/SSIM/MS-SSIM report against ground truth")
    p.add_argument("--pred", required=True, help="directory with registered_*.png")
    p.add_argument("--gt", required=True, help="directory with view_*.png ground truth")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report = args.func(args)
        if report is not None:
            print(json.dumps(pipeline.jsonable(report), indent=2, sort_keys=True))
        return EXIT_OK
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
