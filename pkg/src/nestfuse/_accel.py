"""Hot numeric kernels.

* ``count_inversions(a)``: number of pairs ``i < j`` with ``a[i] > a[j]``.
  The numba path is a bottom-up merge sort, O(m log m); the numpy path
  runs the same merge levels with block-offset keys and ``searchsorted``,
  O(m log^2 m). numba is used when it imports cleanly and the environment
  variable ``NESTFUSE_DISABLE_NUMBA`` is unset (or ``0``). Both paths stay
  importable so tests and ``benchmarks/`` can compare them.
* ``power_kernel(u, v, theta_g, theta_p)``:
  ``(u**-theta_p + v**-theta_p - 1) ** (-1/theta_g)``.
* ``explog_kernel(u, v, theta_g, theta_p)``:
  ``exp(-((-log u)**theta_p + (-log v)**theta_p) ** (1/theta_g))``.

The two fusion kernels are plain numpy on both paths: numpy's vectorized
log/exp beat a jitted scalar loop over libm by 2-3x (see the benchmark).
They are evaluated in log space so that very small fused scores from
earlier cycles cannot overflow ``u**-theta``.
"""

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

ENV_FLAG = "NESTFUSE_DISABLE_NUMBA"

# above this the log1p/expm1 route loses nothing but risks overflow
_LOG_SWITCH = 30.0


def _numba_disabled():
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = HAS_NUMBA and not _numba_disabled()


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def _count_inversions_numpy(a):
    a = np.asarray(a)
    n = a.size
    if n < 2:
        return 0
    # dense integer codes keep block keys exact
    _, cur = np.unique(a, return_inverse=True)
    cur = cur.astype(np.int64).ravel()
    span = np.int64(cur.max() + 1)
    idx = np.arange(n, dtype=np.int64)
    total = 0
    width = 1
    while width < n:
        pair = idx // (2 * width)
        right = ((idx // width) % 2).astype(bool)
        key = pair * span + cur
        left_keys = key[~right]
        right_pair = pair[right]
        # left elements of the same pair that are <= each right element
        at_most = np.searchsorted(left_keys, key[right], side="right")
        pair_end = np.searchsorted(left_keys, (right_pair + 1) * span, side="left")
        total += int(np.sum(pair_end - at_most))
        cur = np.sort(key) - pair * span
        width *= 2
    return total


def power_kernel(u, v, theta_g, theta_p):
    u, v, theta_g, theta_p = np.broadcast_arrays(
        np.asarray(u, dtype=np.float64),
        np.asarray(v, dtype=np.float64),
        np.asarray(theta_g, dtype=np.float64),
        np.asarray(theta_p, dtype=np.float64),
    )
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        a = -theta_p * np.log(u)
        b = -theta_p * np.log(v)
        top = np.maximum(a, b)
        ln_s = np.empty(a.shape, dtype=np.float64)
        small = top <= _LOG_SWITCH
        ln_s[small] = np.log1p(np.expm1(a[small]) + np.expm1(b[small]))
        big = ~small
        tb = top[big]
        ln_s[big] = tb + np.log(np.exp(a[big] - tb) + np.exp(b[big] - tb) - np.exp(-tb))
        return np.exp(-ln_s / theta_g)


def explog_kernel(u, v, theta_g, theta_p):
    u, v, theta_g, theta_p = np.broadcast_arrays(
        np.asarray(u, dtype=np.float64),
        np.asarray(v, dtype=np.float64),
        np.asarray(theta_g, dtype=np.float64),
        np.asarray(theta_p, dtype=np.float64),
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        la = theta_p * np.log(-np.log(u))
        lb = theta_p * np.log(-np.log(v))
        ln_s = np.logaddexp(la, lb)
        return np.exp(-np.exp(ln_s / theta_g))


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @numba.njit(cache=True)
    def _merge_count(a):
        n = a.shape[0]
        src = a.copy()
        dst = np.empty_like(src)
        total = 0
        width = 1
        while width < n:
            lo = 0
            while lo < n:
                mid = min(lo + width, n)
                hi = min(lo + 2 * width, n)
                i = lo
                j = mid
                k = lo
                while i < mid and j < hi:
                    if src[j] < src[i]:
                        dst[k] = src[j]
                        total += mid - i
                        j += 1
                    else:
                        dst[k] = src[i]
                        i += 1
                    k += 1
                while i < mid:
                    dst[k] = src[i]
                    i += 1
                    k += 1
                while j < hi:
                    dst[k] = src[j]
                    j += 1
                    k += 1
                lo += 2 * width
            src, dst = dst, src
            width *= 2
        return total


def _count_inversions_numba(a):
    a = np.asarray(a)
    if a.size < 2:
        return 0
    _, codes = np.unique(a, return_inverse=True)
    return int(_merge_count(np.ascontiguousarray(codes.ravel(), dtype=np.int64)))


count_inversions = _count_inversions_numba if USE_NUMBA else _count_inversions_numpy


def backend():
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"
