"""Thin-lens geometry and circle-of-confusion math.

All distances are in millimeters, all blur radii in pixels. The only
mm -> pixel conversion happens where the pixel pitch and output scale
enter (``coc_diameter_pixels`` / ``composite_parameter``); everything
else stays in its native unit so the composite blur parameter keeps the
dimension mm / (mm/px) = px.

Every function here is pure and accepts either scalars or numpy arrays
for the depth arguments (broadcasting applies).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class LensSpec:
    """Physical lens description.

    Only the focal length is mandatory; the rest is needed solely when
    deriving blur from data-sheet values rather than fitting it.
    """

    focal_length_mm: float
    f_number: float | None = None
    pixel_size_mm: float | None = None
    output_scale: float | None = None
    coc_scale: float | None = None

    def __post_init__(self):
        if self.focal_length_mm <= 0:
            raise ValueError("focal_length_mm must be > 0")
        for name in ("f_number", "pixel_size_mm", "output_scale", "coc_scale"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be > 0 when given")

    def _require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigError(f"LensSpec is missing {', '.join(missing)}")


@dataclass(frozen=True)
class CameraParams:
    """The two fitted blur parameters plus the known focal length.

    ``A`` is the composite optical parameter in pixels (aperture, CoC
    scale, pixel pitch and output scale folded into one searchable
    scalar). ``e_mm`` is the constant offset between the rig's measured
    distance and the true lens-to-sensor distance; it may be negative.
    """

    A: float
    e_mm: float
    focal_length_mm: float

    def __post_init__(self):
        if self.A <= 0:
            raise ValueError("A must be > 0")
        if self.focal_length_mm <= 0:
            raise ValueError("focal_length_mm must be > 0")


def image_distance(focus_depth_mm, focal_length_mm):
    """Lens-to-sensor distance v conjugate to a focus depth.

    1/D_f + 1/v = 1/F  =>  v = F*D_f / (D_f - F)
    """
    if focal_length_mm <= 0:
        raise DomainError("focal length must be > 0")
    if np.any(np.asarray(focus_depth_mm) <= focal_length_mm):
        raise DomainError(
            f"focus depth {focus_depth_mm} mm must exceed the focal length "
            f"{focal_length_mm} mm (no real conjugate otherwise)"
        )
    return focal_length_mm * focus_depth_mm / (focus_depth_mm - focal_length_mm)


def focus_depth(d_mm, e_mm, focal_length_mm):
    """Focus depth implied by a measured distance d and offset e.

    The true lens-to-sensor distance is v = d + e, so
    D_f = F*(d + e) / (d + e - F). Inverse of ``image_distance``.
    """
    v = np.asarray(d_mm, dtype=float) + e_mm
    if focal_length_mm <= 0:
        raise DomainError("focal length must be > 0")
    if np.any(v <= focal_length_mm):
        raise DomainError(
            f"d + e = {d_mm} + {e_mm} mm does not exceed the focal length "
            f"{focal_length_mm} mm"
        )
    out = focal_length_mm * v / (v - focal_length_mm)
    return float(out) if np.isscalar(d_mm) else out


def coc_diameter_mm(spec: LensSpec, depth_mm, focus_depth_mm):
    """Circle-of-confusion diameter on the sensor, in mm.

    (F/N) * |D - D_f|/D * F/(D_f - F)
    """
    spec._require("f_number")
    F = spec.focal_length_mm
    _check_depths(depth_mm, focus_depth_mm, F)
    a = F / spec.f_number
    return a * np.abs(depth_mm - focus_depth_mm) / depth_mm * F / (focus_depth_mm - F)


def coc_diameter_pixels(spec: LensSpec, depth_mm, focus_depth_mm):
    """CoC diameter converted to output pixels: C_mm / (pixel pitch * scale)."""
    spec._require("f_number", "pixel_size_mm", "output_scale")
    return coc_diameter_mm(spec, depth_mm, focus_depth_mm) / (
        spec.pixel_size_mm * spec.output_scale
    )


def composite_parameter(spec: LensSpec) -> float:
    """Fold aperture, CoC scale, pixel pitch and output scale into one scalar.

    A = (F/N) * omega / (rho * s), in pixels; the single knob the
    estimator searches instead of the four data-sheet values.
    """
    spec._require("f_number", "pixel_size_mm", "output_scale", "coc_scale")
    a = spec.focal_length_mm / spec.f_number
    return a * spec.coc_scale / (spec.pixel_size_mm * spec.output_scale)


def blur_sigma_pixels(params: CameraParams, depth_mm, focus_depth_mm):
    """Gaussian blur radius r in pixels for scene depth(s) at one focus depth.

    r = A * |D - D_f|/D * F/(D_f - F); zero exactly at D == D_f.
    """
    F = params.focal_length_mm
    _check_depths(depth_mm, focus_depth_mm, F)
    r = params.A * np.abs(depth_mm - focus_depth_mm) / depth_mm * F / (focus_depth_mm - F)
    return float(r) if np.isscalar(depth_mm) else r


def _check_depths(depth_mm, focus_depth_mm, focal_length_mm) -> None:
    if np.any(np.asarray(depth_mm) <= 0):
        raise DomainError("scene depth must be > 0")
    if np.any(np.asarray(focus_depth_mm) <= focal_length_mm):
        raise DomainError(
            f"focus depth {focus_depth_mm} mm must exceed the focal length "
            f"{focal_length_mm} mm"
        )
