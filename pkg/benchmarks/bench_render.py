"""Benchmark the fast render routes against the reference oracle.

Runs the oracle, the compiled scatter extension (when importable), and
the pure numpy/scipy routes on the same scenes and prints a timing
table plus max deviation from the oracle. Scenes cover the two regimes
that matter: few distinct depths (favors per-group separable
convolution) and per-pixel random depths (favors scatter / offset
sweep).

Usage: python benchmarks/bench_render.py [--size N] [--repeat K]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from defocus_sim import CameraParams, Scene, native_available
from defocus_sim.renderer import (
    _group_stats,
    _plan,
    _run_native,
    _run_separable,
    _run_sweep,
    _finish,
    render_focused_fast,
    render_focused_oracle,
)

FOCAL = 50.0
FOCUS_DEPTH = 1000.0
E_MM = 23.6


def _mean_r_scale(depths, target_mean_r):
    """Pick A so the depth map's mean blur radius hits the target."""
    geom = np.mean(np.abs(depths - FOCUS_DEPTH) / depths
                   * FOCAL / (FOCUS_DEPTH - FOCAL))
    return target_mean_r / geom


def two_plane_scene(size, rng, target_mean_r=4.0):
    img = rng.random((size, size, 3))
    depths = np.full((size, size), 800.0)
    depths[:, size // 2:] = 1250.0
    a = _mean_r_scale(depths, target_mean_r)
    return Scene(img, depths), CameraParams(a, E_MM, FOCAL)


def random_depth_scene(size, rng, target_mean_r=4.0):
    img = rng.random((size, size, 3))
    depths = rng.uniform(800.0, 1600.0, (size, size))
    a = _mean_r_scale(depths, target_mean_r)
    return Scene(img, depths), CameraParams(a, E_MM, FOCAL)


def time_call(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def bench_scene(name, scene, params, repeat, with_oracle=True):
    print(f"\n== {name}: {scene.width}x{scene.height}, "
          f"{len(np.unique(scene.depth_mm))} distinct depths ==")
    plan = _plan(scene, params, FOCUS_DEPTH, 4.0, 129, None)
    stats = _group_stats(plan)

    rows = []
    reference = None
    if with_oracle:
        reference, t_oracle = time_call(
            lambda: render_focused_oracle(scene, params, FOCUS_DEPTH), repeat)
        rows.append(("oracle (reference)", t_oracle, 0.0))

    def run(route_fn, *args):
        return _finish(plan, *route_fn(plan, *args))

    candidates = [("numpy separable", lambda: run(_run_separable, stats)),
                  ("numpy sweep", lambda: run(_run_sweep))]
    if native_available():
        candidates.append(("native scatter", lambda: run(_run_native)))
    candidates.append(
        ("fast auto", lambda: render_focused_fast(scene, params, FOCUS_DEPTH)))

    for label, fn in candidates:
        out, t = time_call(fn, repeat)
        if reference is None:
            reference = out
        dev = float(np.max(np.abs(out - reference)))
        rows.append((label, t, dev))

    base = rows[0][1]
    print(f"{'route':<22} {'seconds':>10} {'speedup':>9} {'max|diff|':>12}")
    for label, t, dev in rows:
        print(f"{label:<22} {t:>10.4f} {base / t:>8.1f}x {dev:>12.3e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=512,
                    help="scene side length (default 512)")
    ap.add_argument("--repeat", type=int, default=1,
                    help="repetitions per measurement, best-of (default 1)")
    ap.add_argument("--skip-oracle", action="store_true",
                    help="skip the oracle timing (deviations vs fast auto)")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"native extension available: {native_available()}")

    scene, params = two_plane_scene(args.size, rng)
    bench_scene("two-plane scene (mean r = 4)", scene, params, args.repeat,
                with_oracle=not args.skip_oracle)

    scene, params = random_depth_scene(min(args.size, 128), rng)
    bench_scene("random per-pixel depths (mean r = 4)", scene, params,
                args.repeat, with_oracle=not args.skip_oracle)


if __name__ == "__main__":
    main()
