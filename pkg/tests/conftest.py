"""Shared builders and session fixtures.

The planted 128x128 two-plane stack and its full grid search are
expensive (the search scans 336 cells), so they are computed once per
session and shared by every test that needs them.
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np
import pytest

import defocus_sim as ds
from defocus_sim.optics import image_distance

FOCAL = 50.0
PLANTED_A = 800.0
PLANTED_E = 23.6
NEAR_PLANE = 1000.0
FAR_PLANE = 1400.0

# Focus depths the stack sweeps through; they straddle both planes.
FOCUS_DEPTHS = (950.0, 1000.0, 1060.0, 1120.0, 1180.0,
                1250.0, 1320.0, 1400.0, 1450.0, 1500.0)

ARTIFACT_DIR = Path(__file__).resolve().parent.parent / "test_artifacts"


def planted_d_list(e_mm=PLANTED_E, focus_depths=FOCUS_DEPTHS):
    """Measured distances whose focus depths hit the given values."""
    return [image_distance(df, FOCAL) - e_mm for df in focus_depths]


def two_plane_scene(size=128, patch=8, seed=7,
                    near=NEAR_PLANE, far=FAR_PLANE) -> ds.Scene:
    mask = ds.MaskSpec(width=size, height=size, patch_size=patch, seed=seed)
    half = size // 2
    depth = ds.StepsDepth(((0, half - 1, near), (half, size - 1, far)))
    return ds.Scene(ds.synth_mask(mask), ds.synth_depth(depth, size, size))


def random_scene(rng, size=64, depth_range=(800.0, 1600.0)) -> ds.Scene:
    img = rng.random((size, size, 3))
    depths = rng.uniform(*depth_range, (size, size))
    return ds.Scene(img, depths)


@pytest.fixture(scope="session")
def planted_params() -> ds.CameraParams:
    return ds.CameraParams(A=PLANTED_A, e_mm=PLANTED_E, focal_length_mm=FOCAL)


@pytest.fixture(scope="session")
def planted_stack(planted_params) -> ds.FocalStack:
    return ds.render_stack(two_plane_scene(), planted_params,
                           planted_d_list())


@pytest.fixture(scope="session")
def planted_grid() -> ds.SearchGrid:
    return ds.SearchGrid(A_min=600.0, A_max=1000.0, A_step=20.0,
                         e_min=22.0, e_max=25.0, e_step=0.2)


@pytest.fixture(scope="session")
def planted_search(planted_stack, planted_grid):
    """(SearchResult, elapsed seconds) for the full planted grid search."""
    t0 = time.perf_counter()
    result = ds.grid_search(planted_stack, planted_grid)
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def artifact_dir() -> Path:
    ARTIFACT_DIR.mkdir(exist_ok=True)
    return ARTIFACT_DIR
