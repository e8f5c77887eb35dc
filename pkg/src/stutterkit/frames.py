"""Canonical framing contract shared by every per-frame computation.

25 ms window, 10 ms hop, final partial frame dropped (no zero padding on
the right). Every track derived from the same buffer therefore has the
same frame count, which the rule cascade relies on.
"""
from __future__ import annotations

import numpy as np

SAMPLE_RATE = 16000
WINDOW_S = 0.025
HOP_S = 0.010
WINDOW = int(round(WINDOW_S * SAMPLE_RATE))  # 400 samples
HOP = int(round(HOP_S * SAMPLE_RATE))        # 160 samples


def num_frames(n_samples: int) -> int:
    """Frame count for an n-sample buffer: floor((N - 400)/160) + 1."""
    if n_samples < WINDOW:
        return 0
    return (n_samples - WINDOW) // HOP + 1


def frame_view(x: np.ndarray, start: int = 0, count: int | None = None) -> np.ndarray:
    """Strided (count, WINDOW) view of frames [start, start+count).

    Read-only view, no copy; callers multiply by a window themselves.
    """
    total = num_frames(len(x))
    if count is None:
        count = total - start
    if start < 0 or start + count > total:
        raise ValueError(f"frame range [{start}, {start + count}) outside 0..{total}")
    stride = x.strides[0]
    return np.lib.stride_tricks.as_strided(
        x[start * HOP:],
        shape=(count, WINDOW),
        strides=(stride * HOP, stride),
        writeable=False,
    )


def frame_energy_db(x: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    """Per-frame energy in dB: 10*log10(mean(frame^2) + floor).

    Digital silence lands at -120 dB with the default floor.
    """
    n = num_frames(len(x))
    out = np.empty(n)
    chunk = 2048
    for s in range(0, n, chunk):
        fr = frame_view(x, s, min(chunk, n - s))
        out[s:s + fr.shape[0]] = 10.0 * np.log10(np.mean(fr * fr, axis=1) + floor)
    return out
