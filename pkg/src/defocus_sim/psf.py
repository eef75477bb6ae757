"""Discrete Gaussian point-spread kernels with dynamic sizing.

The kernel side length scales with the blur radius (dynamic factor,
default 4) so large blurs are not truncated and sharp pixels do not pay
for dead taps. Kernels are normalized over their sampled window; the
continuous 1/(2*pi*r^2) prefactor cancels under that normalization and
is never computed.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

DEFAULT_DYNAMIC_FACTOR = 4.0
DEFAULT_MAX_KERNEL_SIZE = 129

# Below this radius the sampled Gaussian is indistinguishable from a
# delta tap; returning the exact delta keeps the in-focus case bit-exact.
R_EPSILON = 1e-3


class KernelClampWarning(UserWarning):
    """A dynamic kernel hit the configured maximum side length."""


def kernel_size(
    r: float,
    dynamic_factor: float = DEFAULT_DYNAMIC_FACTOR,
    max_size: int | None = DEFAULT_MAX_KERNEL_SIZE,
) -> int:
    """Smallest odd side length >= max(1, ceil(dynamic_factor * r)).

    ``max_size`` bounds memory for extreme defocus; hitting it emits a
    ``KernelClampWarning`` rather than failing.
    """
    if r < 0:
        raise ValueError("blur radius must be >= 0")
    if dynamic_factor <= 0:
        raise ValueError("dynamic_factor must be > 0")
    k = max(1, math.ceil(dynamic_factor * r))
    if k % 2 == 0:
        k += 1
    if max_size is not None and k > max_size:
        warnings.warn(
            f"dynamic kernel size clamped to the {max_size} px maximum",
            KernelClampWarning,
            stacklevel=2,
        )
        k = max_size if max_size % 2 == 1 else max_size - 1
    return k


def build_kernel(r: float, size: int) -> np.ndarray:
    """Normalized Gaussian kernel of odd side ``size`` for blur radius ``r``.

    Samples exp(-(x^2+y^2)/(2 r^2)) at integer offsets from the center
    and divides by the sample sum, so the weights sum to 1 exactly up to
    rounding. For r < R_EPSILON returns the delta kernel.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 1, got {size}")
    if r < 0:
        raise ValueError("blur radius must be >= 0")
    if r < R_EPSILON:
        k = np.zeros((size, size))
        k[size // 2, size // 2] = 1.0
        return k
    half = size // 2
    ax = np.arange(-half, half + 1, dtype=float)
    g = np.exp(-(ax**2) / (2.0 * r * r))
    k = np.outer(g, g)
    return k / k.sum()


def gaussian_profile_1d(r: float, size: int) -> tuple[np.ndarray, float]:
    """Unnormalized 1-D profile of ``build_kernel`` plus the 2-D sample sum.

    The 2-D kernel is the outer product of the profile with itself
    divided by the returned sum; separable convolution paths use this to
    avoid materializing k x k weights.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 1, got {size}")
    if r < R_EPSILON:
        g = np.zeros(size)
        g[size // 2] = 1.0
        return g, 1.0
    half = size // 2
    ax = np.arange(-half, half + 1, dtype=float)
    g = np.exp(-(ax**2) / (2.0 * r * r))
    return g, float(np.outer(g, g).sum())
