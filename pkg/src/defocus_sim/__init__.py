"""Thin-lens defocus simulation and focal-stack camera calibration.

Renders focused images from an all-in-focus image plus a depth map via
spatially varying Gaussian blur, and recovers the composite optical
parameter A and the mechanical offset e from a focal stack by
exhaustive grid search over a four-term image loss.
"""

from .dataset import (
    DEFAULT_COLORS,
    MASK_PALETTES,
    Manifest,
    MaskSpec,
    PlaneDepth,
    PlantedParams,
    SlantDepth,
    StepsDepth,
    make_planted_dataset,
    parse_depth_spec,
    read_image,
    read_pfm,
    read_png,
    read_scene,
    synth_depth,
    synth_mask,
    write_image,
    write_pfm,
    write_png,
    write_scene,
)
from .errors import ConfigError, DatasetError, DomainError, InfeasibleGridError
from .estimator import (
    SearchGrid,
    SearchResult,
    SurfaceCell,
    export_surface,
    grid_search,
    objective,
)
from .metrics import (
    DEFAULT_HISTOGRAM,
    DEFAULT_WEIGHTS,
    HistogramConfig,
    LossBreakdown,
    LossWeights,
    laplacian_map,
    loss1_luminance,
    loss2_defocus,
    loss3_histogram,
    loss4_ssim,
    sharpness_histogram,
    to_grayscale,
    total_loss,
)
from .optics import (
    CameraParams,
    LensSpec,
    blur_sigma_pixels,
    coc_diameter_mm,
    coc_diameter_pixels,
    composite_parameter,
    focus_depth,
    image_distance,
)
from .psf import (
    DEFAULT_DYNAMIC_FACTOR,
    DEFAULT_MAX_KERNEL_SIZE,
    R_EPSILON,
    KernelClampWarning,
    build_kernel,
    kernel_size,
)
from .renderer import (
    FocalStack,
    Scene,
    StackEntry,
    native_available,
    render_focused_fast,
    render_focused_oracle,
    render_stack,
)

__version__ = "0.1.0"

__all__ = [
    "CameraParams",
    "ConfigError",
    "DatasetError",
    "DEFAULT_COLORS",
    "DEFAULT_DYNAMIC_FACTOR",
    "DEFAULT_HISTOGRAM",
    "DEFAULT_MAX_KERNEL_SIZE",
    "DEFAULT_WEIGHTS",
    "DomainError",
    "FocalStack",
    "HistogramConfig",
    "InfeasibleGridError",
    "KernelClampWarning",
    "LensSpec",
    "LossBreakdown",
    "LossWeights",
    "Manifest",
    "MASK_PALETTES",
    "MaskSpec",
    "PlaneDepth",
    "PlantedParams",
    "R_EPSILON",
    "Scene",
    "SearchGrid",
    "SearchResult",
    "SlantDepth",
    "StackEntry",
    "StepsDepth",
    "SurfaceCell",
    "blur_sigma_pixels",
    "build_kernel",
    "coc_diameter_mm",
    "coc_diameter_pixels",
    "composite_parameter",
    "export_surface",
    "focus_depth",
    "grid_search",
    "image_distance",
    "kernel_size",
    "laplacian_map",
    "loss1_luminance",
    "loss2_defocus",
    "loss3_histogram",
    "loss4_ssim",
    "make_planted_dataset",
    "native_available",
    "objective",
    "parse_depth_spec",
    "read_image",
    "read_pfm",
    "read_png",
    "read_scene",
    "render_focused_fast",
    "render_focused_oracle",
    "render_stack",
    "sharpness_histogram",
    "synth_depth",
    "synth_mask",
    "to_grayscale",
    "total_loss",
    "write_image",
    "write_pfm",
    "write_png",
    "write_scene",
    "__version__",
]
