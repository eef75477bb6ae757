"""Two-dimensional exhaustive search for the camera parameters (A, e).

The objective for a candidate (A, e) is the component-wise mean of the
weighted loss between each observed stack frame and a re-render of the
scene at that frame's focus depth. The search scans a rectangular
lattice, keeps every cell for export, and breaks ties toward the
smallest A, then the smallest e. Cells where any frame violates
d + e > F get infinite loss instead of aborting the scan.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InfeasibleGridError
from .metrics import (
    DEFAULT_HISTOGRAM,
    DEFAULT_WEIGHTS,
    HistogramConfig,
    LossBreakdown,
    LossWeights,
    total_loss,
)
from .optics import CameraParams, focus_depth
from .renderer import FocalStack, render_focused_fast

SURFACE_HEADER = "A,e,loss1,loss2,loss3,loss4,total"


@dataclass(frozen=True)
class SearchGrid:
    """Inclusive lattice bounds and steps for A (pixels) and e (mm).

    Defaults bracket plausible bench-camera values with wide margin.
    """

    A_min: float = 100.0
    A_max: float = 2000.0
    A_step: float = 20.0
    e_min: float = 20.0
    e_max: float = 28.0
    e_step: float = 0.2

    def __post_init__(self):
        if self.A_min <= 0:
            raise ValueError("A_min must be positive")
        if self.A_max < self.A_min:
            raise ValueError("A_max must be >= A_min")
        if self.A_step <= 0:
            raise ValueError("A_step must be positive")
        if self.e_max < self.e_min:
            raise ValueError("e_max must be >= e_min")
        if self.e_step <= 0:
            raise ValueError("e_step must be positive")

    def A_values(self) -> np.ndarray:
        return _lattice(self.A_min, self.A_max, self.A_step)

    def e_values(self) -> np.ndarray:
        return _lattice(self.e_min, self.e_max, self.e_step)


def _lattice(lo: float, hi: float, step: float) -> np.ndarray:
    """lo, lo+step, ... up to hi, inclusive within 1e-9 of a full step."""
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + np.arange(count) * step


@dataclass(frozen=True)
class SurfaceCell:
    A: float
    e: float
    loss: LossBreakdown


@dataclass(frozen=True)
class SearchResult:
    A_opt: float
    e_opt: float
    min_loss: float
    surface: tuple


def objective(stack: FocalStack, A: float, e: float,
              weights: LossWeights = DEFAULT_WEIGHTS,
              cfg: HistogramConfig = DEFAULT_HISTOGRAM, *,
              backend="auto", fixed_kernel_size=None) -> LossBreakdown:
    """Stack-averaged loss of re-rendering the scene at (A, e).

    Returns an infeasible (infinite) breakdown when any entry's measured
    distance violates d + e > F for this candidate e.
    """
    if len(stack) < 1:
        raise ValueError("stack must contain at least one entry")
    fl = stack.focal_length_mm
    for entry in stack.entries:
        if entry.d_mm + e <= fl:
            return LossBreakdown.infeasible()
    params = CameraParams(A=A, e_mm=e, focal_length_mm=fl)
    parts = np.zeros(4)
    for entry in stack.entries:
        df = focus_depth(entry.d_mm, e, fl)
        rendered = render_focused_fast(
            stack.scene, params, df, backend=backend,
            fixed_kernel_size=fixed_kernel_size,
        )
        lb = total_loss(entry.image, rendered, weights, cfg)
        parts += (lb.loss1, lb.loss2, lb.loss3, lb.loss4)
    parts /= len(stack)
    total = (weights.lambda1 * parts[0] + weights.lambda2 * parts[1]
             + weights.lambda3 * parts[2] + weights.lambda4 * parts[3])
    return LossBreakdown(*(float(p) for p in parts), float(total))


def grid_search(stack: FocalStack, grid: SearchGrid = SearchGrid(),
                weights: LossWeights = DEFAULT_WEIGHTS,
                cfg: HistogramConfig = DEFAULT_HISTOGRAM, *,
                workers=None, backend="auto") -> SearchResult:
    """Evaluate the objective on every lattice cell and take the argmin.

    Cells are independent; `workers` caps the thread pool used to
    evaluate them (default: machine parallelism). Results are assembled
    in lattice order, so the outcome does not depend on thread count.
    """
    if len(stack) < 1:
        raise ValueError("stack must contain at least one entry")
    cells = [(float(a), float(e))
             for a in grid.A_values() for e in grid.e_values()]

    def evaluate(cell):
        a, e = cell
        return objective(stack, a, e, weights, cfg, backend=backend)

    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            losses = list(pool.map(evaluate, cells))
    else:
        losses = [evaluate(cell) for cell in cells]

    surface = tuple(SurfaceCell(a, e, lb)
                    for (a, e), lb in zip(cells, losses))
    best = None
    for cell in surface:
        if math.isinf(cell.loss.total):
            continue
        if best is None or cell.loss.total < best.loss.total:
            best = cell
    if best is None:
        raise InfeasibleGridError("no feasible cell in the search grid")
    return SearchResult(A_opt=best.A, e_opt=best.e,
                        min_loss=best.loss.total, surface=surface)


def export_surface(result: SearchResult, destination) -> None:
    """Write the loss surface as CSV, one row per cell in (A, e) order."""
    lines = [SURFACE_HEADER]
    for cell in result.surface:
        lb = cell.loss
        lines.append(",".join(repr(float(v)) for v in (
            cell.A, cell.e, lb.loss1, lb.loss2, lb.loss3, lb.loss4, lb.total,
        )))
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text, encoding="utf-8")
