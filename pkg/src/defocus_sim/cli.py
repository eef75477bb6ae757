"""Command-line interface.

Four subcommands: `synth` writes a planted-truth dataset, `render`
produces one focused frame from a dataset's scene, `estimate` runs the
(A, e) grid search on a dataset, and `loss` compares two image files.
Machine-readable results go to stdout as `key=value` lines; diagnostics
go to stderr. Exit codes: 0 success, 1 runtime or I/O failure, 2 usage.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .dataset import (
    MaskSpec,
    make_planted_dataset,
    parse_depth_spec,
    read_image,
    read_scene,
    write_image,
)
from .errors import ConfigError, DatasetError, DomainError, InfeasibleGridError
from .estimator import SearchGrid, export_surface, grid_search
from .metrics import (
    DEFAULT_HISTOGRAM,
    DEFAULT_WEIGHTS,
    HistogramConfig,
    LossWeights,
    total_loss,
)
from .optics import CameraParams, focus_depth
from .renderer import render_focused_fast, render_focused_oracle


def _parse_floats(text, count, what):
    parts = text.split(",")
    if count is not None and len(parts) != count:
        raise ValueError(f"{what} needs {count} comma-separated values")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"{what}: {text!r} is not a comma-separated "
                         f"list of numbers") from None


def _parse_range(text, what):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"{what} must look like min:max:step, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), float(parts[2])
    except ValueError:
        raise ValueError(f"{what}: {text!r} has a non-numeric part") from None


def _weights(args):
    if args.weights is None:
        return DEFAULT_WEIGHTS
    return LossWeights(*_parse_floats(args.weights, 4, "--weights"))


def _histogram(args):
    if args.bins is None:
        return DEFAULT_HISTOGRAM
    return HistogramConfig(bin_count=args.bins)


def _emit(key, value):
    print(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")


def cmd_synth(args) -> int:
    mask = MaskSpec(width=args.width, height=args.height,
                    patch_size=args.patch, seed=args.seed)
    depth = parse_depth_spec(args.depth)
    params = CameraParams(A=args.A, e_mm=args.e,
                          focal_length_mm=args.focal_length)
    d_list = _parse_floats(args.d_list, None, "--d-list")
    manifest = make_planted_dataset(args.out, mask, depth, params, d_list,
                                    noise_sigma=args.noise)
    _emit("manifest", manifest)
    return 0


def cmd_render(args) -> int:
    stack, manifest = read_scene(args.scene)
    params = CameraParams(A=args.A, e_mm=args.e,
                          focal_length_mm=manifest.focal_length_mm)
    df = focus_depth(args.d, args.e, manifest.focal_length_mm)
    fast = render_focused_fast(stack.scene, params, df)
    if args.oracle:
        img = render_focused_oracle(stack.scene, params, df)
        _emit("max_abs_diff_vs_fast", float(np.max(np.abs(img - fast))))
    else:
        img = fast
    write_image(args.out, img)
    _emit("out", args.out)
    return 0


def cmd_estimate(args) -> int:
    stack, _ = read_scene(args.dataset)
    a_lo, a_hi, a_step = _parse_range(args.A_range, "--A-range")
    e_lo, e_hi, e_step = _parse_range(args.e_range, "--e-range")
    grid = SearchGrid(A_min=a_lo, A_max=a_hi, A_step=a_step,
                      e_min=e_lo, e_max=e_hi, e_step=e_step)
    result = grid_search(stack, grid, _weights(args), _histogram(args),
                         workers=args.threads)
    best = next(cell for cell in result.surface
                if cell.A == result.A_opt and cell.e == result.e_opt)
    _emit("A_opt", float(result.A_opt))
    _emit("e_opt", float(result.e_opt))
    _emit("loss1", float(best.loss.loss1))
    _emit("loss2", float(best.loss.loss2))
    _emit("loss3", float(best.loss.loss3))
    _emit("loss4", float(best.loss.loss4))
    _emit("total", float(best.loss.total))
    if args.surface:
        export_surface(result, args.surface)
        _emit("surface", args.surface)
    return 0


def cmd_loss(args) -> int:
    ref = read_image(args.ref)
    test = read_image(args.test)
    lb = total_loss(ref, test, _weights(args), _histogram(args))
    _emit("loss1", float(lb.loss1))
    _emit("loss2", float(lb.loss2))
    _emit("loss3", float(lb.loss3))
    _emit("loss4", float(lb.loss4))
    _emit("total", float(lb.total))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="defocus-sim",
        description="Thin-lens defocus simulation and camera parameter "
                    "estimation from focal stacks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic planted dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--patch", type=int, required=True,
                   help="side of the color patches in pixels")
    p.add_argument("--depth", required=True,
                   help="plane:D | slant:NEAR,FAR | steps:C0-C1:D,...")
    p.add_argument("--A", type=float, required=True,
                   help="planted composite optical parameter (pixels)")
    p.add_argument("--e", type=float, required=True,
                   help="planted mechanical offset (mm)")
    p.add_argument("--focal-length", type=float, required=True,
                   help="lens focal length (mm)")
    p.add_argument("--d-list", required=True,
                   help="comma-separated measured distances d (mm)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0,
                   help="Gaussian pixel noise sigma on stack frames")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("render", help="render one focused frame")
    p.add_argument("--scene", required=True, help="dataset directory")
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--e", type=float, required=True)
    p.add_argument("--d", type=float, required=True,
                   help="measured distance d (mm)")
    p.add_argument("--out", required=True, help="output .png or .pfm file")
    p.add_argument("--oracle", action="store_true",
                   help="render with the reference path and report its "
                        "deviation from the fast path")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("estimate", help="grid-search (A, e) on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--A-range", required=True, metavar="MIN:MAX:STEP")
    p.add_argument("--e-range", required=True, metavar="MIN:MAX:STEP")
    p.add_argument("--weights", default=None,
                   help="four comma-separated loss weights")
    p.add_argument("--bins", type=int, default=None,
                   help="sharpness histogram bin count")
    p.add_argument("--surface", default=None,
                   help="write the full loss surface CSV here")
    p.add_argument("--threads", type=int, default=None,
                   help="cap on parallel cell evaluation")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("loss", help="compare two image files")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--weights", default=None)
    p.add_argument("--bins", type=int, default=None)
    p.set_defaults(func=cmd_loss)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (DatasetError, InfeasibleGridError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
