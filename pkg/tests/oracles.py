"""Independent reference implementations used to derive expected values.

Everything here is deliberately written on a different code path from
the package: literal DFT sums, recursive DTW, exhaustive matching,
scipy where convenient. Slow is fine; these only run in tests.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import permutations

import numpy as np
import scipy.fftpack


def direct_dft_magnitude(frame: np.ndarray, nfft: int) -> np.ndarray:
    """Literal O(n^2) DFT magnitude for bins 0..nfft//2."""
    n = len(frame)
    k = np.arange(nfft // 2 + 1)
    angles = -2j * np.pi * np.outer(k, np.arange(n)) / nfft
    return np.abs(np.exp(angles) @ frame)


def reference_mfcc_frame(frame: np.ndarray, prev_sample: float = 0.0,
                         sr: int = 16000, nfft: int = 512,
                         n_mels: int = 26, n_out: int = 13,
                         preemph: float = 0.97) -> np.ndarray:
    """MFCC of one already-extracted frame via the direct DFT and scipy's
    DCT; mel filters built from first principles. `prev_sample` is the
    signal sample just before the frame (pre-emphasis context)."""
    shifted = np.concatenate([[prev_sample], frame[:-1]])
    emphasized = frame - preemph * shifted
    windowed = emphasized * np.hanning(len(frame))
    mag = direct_dft_magnitude(windowed, nfft)

    def mel(hz):
        return 2595.0 * np.log10(1.0 + hz / 700.0)

    def inv_mel(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    edges = inv_mel(np.linspace(mel(0.0), mel(8000.0), n_mels + 2))
    bins = np.arange(nfft // 2 + 1) * sr / nfft
    energies = np.zeros(n_mels)
    for i in range(n_mels):
        lo, cen, hi = edges[i], edges[i + 1], edges[i + 2]
        for b, f in enumerate(bins):
            if lo <= f <= cen and cen > lo:
                w = (f - lo) / (cen - lo)
            elif cen < f <= hi and hi > cen:
                w = (hi - f) / (hi - cen)
            else:
                continue
            energies[i] += w * mag[b] ** 2
    logs = np.log(np.maximum(energies, 1e-10))
    return scipy.fftpack.dct(logs, type=2, norm="ortho")[:n_out]


def brute_force_dtw(a: np.ndarray, b: np.ndarray) -> tuple[float, int]:
    """Recursive DTW cost + path length, straight from the recurrence."""
    m, n = len(a), len(b)
    dist = [[float(np.linalg.norm(a[i] - b[j])) for j in range(n)]
            for i in range(m)]

    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> tuple[float, int]:
        if i == 0 and j == 0:
            return dist[0][0], 1
        best = (float("inf"), 0)
        if i > 0 and j > 0:
            best = min(best, rec(i - 1, j - 1))
        if i > 0:
            best = min(best, rec(i - 1, j))
        if j > 0:
            best = min(best, rec(i, j - 1))
        return dist[i][j] + best[0], best[1] + 1

    cost, steps = rec(m - 1, n - 1)
    rec.cache_clear()
    return cost, steps


def iou(a: tuple[float, float], b: tuple[float, float]) -> float:
    inter = max(0.0, min(a[1], b[1]) - max(a[0], b[0]))
    union = max(a[1], b[1]) - min(a[0], b[0])
    return inter / union if union > 0 else 0.0


def optimal_match_count(hyp: list[tuple[float, float]],
                        ref: list[tuple[float, float]],
                        iou_min: float) -> int:
    """Maximum one-to-one matching size by exhaustive search over all
    injective assignments of the smaller side into the larger (fine for
    <= 6 events)."""
    if not hyp or not ref:
        return 0
    small, large, flipped = (hyp, ref, False) if len(hyp) <= len(ref) \
        else (ref, hyp, True)
    best = 0
    for perm in permutations(range(len(large)), len(small)):
        count = 0
        for si, li in enumerate(perm):
            a, b = (small[si], large[li])
            if iou(a, b) >= iou_min:
                count += 1
        best = max(best, count)
    return best


def dft_peak_hz(x: np.ndarray, sr: int, pad_factor: int = 8) -> float:
    """Dominant frequency via zero-padded FFT and quadratic interpolation."""
    n = len(x)
    nfft = 1 << int(np.ceil(np.log2(n * pad_factor)))
    mag = np.abs(np.fft.rfft(x * np.hanning(n), nfft))
    k = int(np.argmax(mag[1:])) + 1
    if 1 <= k < len(mag) - 1:
        y0, y1, y2 = mag[k - 1], mag[k], mag[k + 1]
        denom = y0 - 2 * y1 + y2
        if abs(denom) > 1e-12:
            k = k + 0.5 * (y0 - y2) / denom
    return k * sr / nfft


def naive_autocorr_peak(x: np.ndarray, lag_lo: int, lag_hi: int) -> tuple[float, int]:
    """Max normalized autocorrelation over the lag range, direct sums,
    restricted to local maxima."""
    x = x - x.mean()
    var = np.dot(x, x) / len(x)
    if var < 1e-12:
        return 0.0, lag_lo
    vals = {}
    for lag in range(max(1, lag_lo - 1), min(lag_hi + 2, len(x) - 1)):
        overlap = len(x) - lag
        vals[lag] = float(np.dot(x[:-lag], x[lag:])) / overlap / var
    best, best_lag = 0.0, lag_lo
    for lag in range(lag_lo, lag_hi + 1):
        if lag - 1 in vals and lag + 1 in vals and lag in vals:
            if vals[lag] > vals[lag - 1] and vals[lag] >= vals[lag + 1]:
                if vals[lag] > best:
                    best, best_lag = vals[lag], lag
    return best, best_lag
