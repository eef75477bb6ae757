"""Image comparison losses for focus-parameter fitting.

Four components, combined as a weighted sum: mean squared intensity
difference, mean squared difference of signed Laplacian sharpness maps,
mean squared difference of normalized sharpness histograms, and a
structural-similarity term mapped to [0, 1]. The histogram term is the
one that reacts to the distribution of sharpness rather than its mean,
which is what makes the blur-parameter search land.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage.metrics import structural_similarity

SSIM_WIN_SIZE = 11

_LAPLACE_STENCIL = np.array([
    [0.0, 1.0, 0.0],
    [1.0, -4.0, 1.0],
    [0.0, 1.0, 0.0],
])


@dataclass(frozen=True)
class LossWeights:
    """Non-negative weights for the four loss components."""

    lambda1: float = 50000.0
    lambda2: float = 10000.0
    lambda3: float = 40000.0
    lambda4: float = 5000.0

    def __post_init__(self):
        vals = (self.lambda1, self.lambda2, self.lambda3, self.lambda4)
        if any(v < 0 for v in vals):
            raise ValueError("loss weights must be non-negative")
        if all(v == 0 for v in vals):
            raise ValueError("at least one loss weight must be positive")


@dataclass(frozen=True)
class HistogramConfig:
    """Uniform binning of |Laplacian| values over [0, range_max].

    range_max defaults to 4, the largest magnitude the 4-neighbor
    stencil can produce on intensities in [0, 1]; anything at or above
    it lands in the last bin.
    """

    bin_count: int = 64
    range_max: float = 4.0

    def __post_init__(self):
        if self.bin_count < 2:
            raise ValueError("bin_count must be >= 2")
        if self.range_max <= 0:
            raise ValueError("range_max must be positive")


@dataclass(frozen=True)
class LossBreakdown:
    """The four components plus their weighted total."""

    loss1: float
    loss2: float
    loss3: float
    loss4: float
    total: float

    @classmethod
    def infeasible(cls) -> "LossBreakdown":
        inf = math.inf
        return cls(inf, inf, inf, inf, inf)

    @property
    def is_infeasible(self) -> bool:
        return math.isinf(self.total)


DEFAULT_WEIGHTS = LossWeights()
DEFAULT_HISTOGRAM = HistogramConfig()


def _check_pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def to_grayscale(img) -> np.ndarray:
    """Scalar intensity field: channel mean for RGB, identity otherwise."""
    img = np.asarray(img, dtype=float)
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 1:
        return img[:, :, 0]
    if img.ndim == 3 and img.shape[2] == 3:
        return img.mean(axis=2)
    raise ValueError("image must be HxW, HxWx1, or HxWx3")


def laplacian_map(img) -> np.ndarray:
    """Signed 4-neighbor Laplacian under replicate-edge padding."""
    gray = to_grayscale(img)
    return ndimage.convolve(gray, _LAPLACE_STENCIL, mode="nearest")


def loss1_luminance(ref, test) -> float:
    """Mean squared intensity difference over pixels and channels."""
    a, b = _check_pair(ref, test)
    return float(np.mean((a - b) ** 2))


def loss2_defocus(ref, test) -> float:
    """Mean squared difference of the signed Laplacian maps."""
    a, b = _check_pair(ref, test)
    return float(np.mean((laplacian_map(a) - laplacian_map(b)) ** 2))


def _bin_frequencies(mag, cfg):
    idx = (mag * (cfg.bin_count / cfg.range_max)).astype(np.int64)
    np.minimum(idx, cfg.bin_count - 1, out=idx)
    counts = np.bincount(idx.ravel(), minlength=cfg.bin_count)
    return counts / mag.size


def sharpness_histogram(img, cfg: HistogramConfig = DEFAULT_HISTOGRAM) -> np.ndarray:
    """Pixel-count-normalized histogram of |Laplacian| sharpness."""
    return _bin_frequencies(np.abs(laplacian_map(img)), cfg)


def loss3_histogram(ref, test, cfg: HistogramConfig = DEFAULT_HISTOGRAM) -> float:
    """Mean squared difference of the two sharpness histograms."""
    a, b = _check_pair(ref, test)
    ha = sharpness_histogram(a, cfg)
    hb = sharpness_histogram(b, cfg)
    return float(np.mean((ha - hb) ** 2))


def _laplacian_losses(a, b, cfg):
    """loss2 and loss3 from shared Laplacian maps (one stencil pass each)."""
    la = laplacian_map(a)
    lb = laplacian_map(b)
    l2 = float(np.mean((la - lb) ** 2))
    ha = _bin_frequencies(np.abs(la), cfg)
    hb = _bin_frequencies(np.abs(lb), cfg)
    l3 = float(np.mean((ha - hb) ** 2))
    return l2, l3


def loss4_ssim(ref, test) -> float:
    """(1 - mean SSIM) / 2 with the standard 11x11 Gaussian window."""
    a, b = _check_pair(ref, test)
    if min(a.shape[0], a.shape[1]) < SSIM_WIN_SIZE:
        raise ValueError(
            f"images must be at least {SSIM_WIN_SIZE}x{SSIM_WIN_SIZE} "
            f"for the SSIM window, got {a.shape[:2]}"
        )
    if a.ndim == 3 and a.shape[2] == 1:
        a = a[:, :, 0]
        b = b[:, :, 0]
    kwargs = dict(
        win_size=SSIM_WIN_SIZE,
        gaussian_weights=True,
        sigma=1.5,
        use_sample_covariance=False,
        K1=0.01,
        K2=0.03,
        data_range=1.0,
    )
    if a.ndim == 3:
        kwargs["channel_axis"] = -1
    score = structural_similarity(a, b, **kwargs)
    return float((1.0 - score) / 2.0)


def total_loss(ref, test, weights: LossWeights = DEFAULT_WEIGHTS,
               cfg: HistogramConfig = DEFAULT_HISTOGRAM) -> LossBreakdown:
    """All four components and their weighted sum."""
    a, b = _check_pair(ref, test)
    l1 = float(np.mean((a - b) ** 2))
    l2, l3 = _laplacian_losses(a, b, cfg)
    l4 = loss4_ssim(a, b)
    total = (weights.lambda1 * l1 + weights.lambda2 * l2
             + weights.lambda3 * l3 + weights.lambda4 * l4)
    return LossBreakdown(l1, l2, l3, l4, total)
