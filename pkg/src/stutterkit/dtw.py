"""Dynamic time warping over feature-vector sequences.

Local cost is Euclidean; step set is the standard (diagonal, down,
right) recurrence. `dtw_cost` returns the accumulated optimal cost and
the warping-path length so callers can normalize consistently.
"""
from __future__ import annotations

import numpy as np


def dtw_cost(a: np.ndarray, b: np.ndarray,
             local: np.ndarray | None = None) -> tuple[float, int]:
    """Optimal alignment cost and path length between sequences a, b.

    a: (m, d), b: (n, d); `local` may supply a precomputed (m, n) local
    cost matrix (used by the silent-frame convention).
    """
    if local is None:
        diff = a[:, None, :] - b[None, :, :]
        local = np.sqrt(np.einsum("mnd,mnd->mn", diff, diff))
    m, n = local.shape
    if m == 0 or n == 0:
        raise ValueError("cannot align an empty sequence")

    acc = np.full((m + 1, n + 1), np.inf)
    steps = np.zeros((m + 1, n + 1), dtype=np.int32)
    acc[0, 0] = 0.0
    for i in range(1, m + 1):
        row = local[i - 1]
        for j in range(1, n + 1):
            best = acc[i - 1, j - 1]
            step = steps[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best, step = acc[i - 1, j], steps[i - 1, j]
            if acc[i, j - 1] < best:
                best, step = acc[i, j - 1], steps[i, j - 1]
            acc[i, j] = row[j - 1] + best
            steps[i, j] = step + 1
    return float(acc[m, n]), int(steps[m, n])


def dtw_cost_banded(local: np.ndarray) -> tuple[float, int]:
    """Row-vectorized variant of dtw_cost for hot loops (identical result)."""
    m, n = local.shape
    prev = np.full(n + 1, np.inf)
    prev_steps = np.zeros(n + 1, dtype=np.int64)
    prev[0] = 0.0
    cur = np.empty(n + 1)
    cur_steps = np.empty(n + 1, dtype=np.int64)
    for i in range(1, m + 1):
        cur[0] = np.inf
        cur_steps[0] = 0
        row = local[i - 1]
        for j in range(1, n + 1):
            best = prev[j - 1]
            step = prev_steps[j - 1]
            if prev[j] < best:
                best, step = prev[j], prev_steps[j]
            if cur[j - 1] < best:
                best, step = cur[j - 1], cur_steps[j - 1]
            cur[j] = row[j - 1] + best
            cur_steps[j] = step + 1
        prev, cur = cur, prev
        prev_steps, cur_steps = cur_steps, prev_steps
    return float(prev[n]), int(prev_steps[n])


def normalized_dtw_cost(a: np.ndarray, b: np.ndarray,
                        silent_a: np.ndarray | None = None,
                        silent_b: np.ndarray | None = None) -> float:
    """Scale-free DTW cost: path-length-normalized and divided by the
    mean frame norm of the non-silent frames.

    Silent frames (per the caller's energy mask) cost 1.0 against any
    frame after normalization, which keeps silence from ever looking
    self-similar.
    """
    if silent_a is None:
        silent_a = np.zeros(len(a), dtype=bool)
    if silent_b is None:
        silent_b = np.zeros(len(b), dtype=bool)

    live = np.concatenate([a[~silent_a], b[~silent_b]])
    if len(live) == 0:
        return 1.0
    # cepstral-mean-centered scale: the silence log-floor shifts every
    # frame by a large common offset, which would otherwise inflate the
    # norm and crush all normalized distances
    centered = live - live.mean(axis=0)
    mean_norm = float(np.sqrt(np.mean(np.einsum("ij,ij->i", centered, centered))))
    if mean_norm < 1e-12:
        return 1.0

    diff = a[:, None, :] - b[None, :, :]
    local = np.sqrt(np.einsum("mnd,mnd->mn", diff, diff)) / mean_norm
    pair_silent = silent_a[:, None] | silent_b[None, :]
    local = np.where(pair_silent, 1.0, local)
    total, path_len = dtw_cost_banded(local)
    return total / path_len
