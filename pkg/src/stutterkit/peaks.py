"""Minimal peak picking (local maxima, prominence, min distance).

numpy-only stand-in for the usual scipy helper; the runtime package
avoids scipy to stay inside the memory budget.
"""
from __future__ import annotations

import numpy as np


def local_maxima(x: np.ndarray) -> np.ndarray:
    """Indices of strict local maxima; first sample of a plateau wins."""
    n = len(x)
    if n < 3:
        return np.zeros(0, dtype=int)
    out = []
    i = 1
    while i < n - 1:
        if x[i] > x[i - 1]:
            j = i
            while j + 1 < n and x[j + 1] == x[j]:
                j += 1
            if j + 1 < n and x[j + 1] < x[j]:
                out.append(i)
                i = j + 1
                continue
        i += 1
    return np.asarray(out, dtype=int)


def prominences(x: np.ndarray, peaks: np.ndarray) -> np.ndarray:
    """Topographic prominence of each peak.

    Base on each side is the minimum between the peak and the nearest
    higher sample (or the array end); prominence is peak height above the
    higher of the two bases.
    """
    out = np.empty(len(peaks))
    for k, p in enumerate(peaks):
        h = x[p]
        left = p
        lmin = h
        while left > 0 and x[left - 1] <= h:
            left -= 1
            lmin = min(lmin, x[left])
        right = p
        rmin = h
        while right < len(x) - 1 and x[right + 1] <= h:
            right += 1
            rmin = min(rmin, x[right])
        out[k] = h - max(lmin, rmin)
    return out


def find_peaks(
    x: np.ndarray,
    prominence: float = 0.0,
    distance: int = 1,
    height: float | None = None,
) -> np.ndarray:
    """Peak indices with the requested prominence/height, then greedy
    suppression of peaks closer than `distance` (tallest first)."""
    cand = local_maxima(x)
    if len(cand) == 0:
        return cand
    if height is not None:
        cand = cand[x[cand] >= height]
        if len(cand) == 0:
            return cand
    if prominence > 0:
        cand = cand[prominences(x, cand) >= prominence]
        if len(cand) == 0:
            return cand
    if distance > 1 and len(cand) > 1:
        order = np.argsort(x[cand])[::-1]
        keep = np.ones(len(cand), dtype=bool)
        for oi in order:
            if not keep[oi]:
                continue
            close = np.abs(cand - cand[oi]) < distance
            close[oi] = False
            keep &= ~close
        cand = cand[keep]
        cand.sort()
    return cand
