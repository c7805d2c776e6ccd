"""Hot inner loops with numba-accelerated and pure-numpy variants.

The numba path is used when numba imports successfully and the environment
variable ``DISLOCADE_NO_NUMBA`` is unset (or set to 0/false).  Both variants
implement the same sums; they may differ in the last bits through summation
order, which the tests bound at 1e-12.

The core object is the weighted second-difference sum

    out[i] = sum_{k=m}^{M} w[k-m] * (F[i+k] + F[i-k] - 2 F[i])

evaluated either at a single index or at a contiguous block of indices of an
extended sample array F (exterior values filled in by the caller from the tail
model).
"""

import os

import numpy as np

_flag = os.environ.get("DISLOCADE_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag not in ("", "0", "false")

HAS_NUMBA = False
if not NUMBA_DISABLED:
    try:
        import numba

        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False


def backend():
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if HAS_NUMBA else "numpy"


def second_diff_point_numpy(F, i, w, m):
    """Weighted second-difference sum at a single extended index i."""
    M = m + w.size - 1
    fwd = F[i + m : i + M + 1]
    bwd = F[i - M : i - m + 1][::-1]
    return float(w @ (fwd + bwd - 2.0 * F[i]))


def second_diff_block_numpy(F, i0, n, w, m):
    """Weighted second-difference sums at extended indices i0 .. i0+n-1.

    Uses a direct convolution; the FFT route for large problems lives in
    ``fracop`` on top of these kernels.
    """
    kern = np.zeros(2 * (m + w.size - 1) + 1)
    M = m + w.size - 1
    kern[M + m : 2 * M + 1] = w
    kern[: M - m + 1] = w[::-1]
    lo = i0 - M
    hi = i0 + n + M
    conv = np.convolve(F[lo:hi], kern, mode="valid")
    return conv - 2.0 * w.sum() * F[i0 : i0 + n]


if HAS_NUMBA:

    @numba.njit(cache=True)
    def second_diff_point(F, i, w, m):  # noqa: F811 - numba twin of the numpy def
        acc = 0.0
        f0 = 2.0 * F[i]
        for j in range(w.size):
            k = m + j
            acc += w[j] * (F[i + k] + F[i - k] - f0)
        return acc

    @numba.njit(cache=True)
    def second_diff_block(F, i0, n, w, m):  # noqa: F811
        out = np.empty(n)
        for r in range(n):
            i = i0 + r
            acc = 0.0
            f0 = 2.0 * F[i]
            for j in range(w.size):
                k = m + j
                acc += w[j] * (F[i + k] + F[i - k] - f0)
            out[r] = acc
        return out

else:
    second_diff_point = second_diff_point_numpy
    second_diff_block = second_diff_block_numpy
