# cython: language_level=3
"""Native scatter accumulation for spatially varying convolution.

Each source pixel of the replicate-extended image deposits its value,
weighted by its own blur kernel, onto the in-frame targets it covers.
Kernels are passed as one flat table indexed per source so the inner
loop is pure C. Sources are visited in row-major order, matching the
reference renderer's accumulation order.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def scatter_accumulate(
    double[:, :, ::1] img_ext,
    cnp.int64_t[:, ::1] kernel_id,
    double[::1] ktable,
    cnp.int64_t[::1] kstart,
    cnp.int64_t[::1] khalf,
    Py_ssize_t pad,
    double[:, :, ::1] num,
    double[:, ::1] den,
):
    """Accumulate weighted source values into num/den (modified in place).

    img_ext is (H+2*pad, W+2*pad, C); kernel_id maps each extended pixel
    to a row of (kstart, khalf); ktable holds the flattened kernels.
    num is (H, W, C) and den is (H, W); both must start zeroed.
    """
    cdef Py_ssize_t He = img_ext.shape[0]
    cdef Py_ssize_t We = img_ext.shape[1]
    cdef Py_ssize_t C = img_ext.shape[2]
    cdef Py_ssize_t H = num.shape[0]
    cdef Py_ssize_t W = num.shape[1]
    cdef Py_ssize_t si, sj, c, h, side, base, dy, dx, ti, tj
    cdef cnp.int64_t g
    cdef double w

    if kernel_id.shape[0] != He or kernel_id.shape[1] != We:
        raise ValueError("kernel_id shape does not match extended image")
    if den.shape[0] != H or den.shape[1] != W:
        raise ValueError("num/den shapes disagree")
    if He != H + 2 * pad or We != W + 2 * pad:
        raise ValueError("extended image inconsistent with pad")

    with nogil:
        for si in range(He):
            for sj in range(We):
                g = kernel_id[si, sj]
                h = khalf[g]
                base = kstart[g]
                side = 2 * h + 1
                for dy in range(-h, h + 1):
                    ti = si - pad + dy
                    if ti < 0 or ti >= H:
                        continue
                    for dx in range(-h, h + 1):
                        tj = sj - pad + dx
                        if tj < 0 or tj >= W:
                            continue
                        w = ktable[base + (dy + h) * side + (dx + h)]
                        den[ti, tj] += w
                        for c in range(C):
                            num[ti, tj, c] += w * img_ext[si, sj, c]
