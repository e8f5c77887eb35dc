from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stutterkit.audio import AudioBuffer, CANONICAL_RATE


def sine(freq: float, duration_s: float = 1.0, amp: float = 0.5,
         sr: int = CANONICAL_RATE, phase: float = 0.0) -> AudioBuffer:
    t = np.arange(int(duration_s * sr)) / sr
    return AudioBuffer(samples=amp * np.sin(2 * np.pi * freq * t + phase),
                       sample_rate=sr)


def harmonic_tone(f0: float, duration_s: float = 1.0, amp: float = 0.3,
                  n_harm: int = 8, sr: int = CANONICAL_RATE) -> AudioBuffer:
    t = np.arange(int(duration_s * sr)) / sr
    x = sum((1.0 / h) * np.sin(2 * np.pi * f0 * h * t)
            for h in range(1, n_harm + 1) if f0 * h < 7600)
    x = np.asarray(x)
    x *= amp / np.max(np.abs(x))
    return AudioBuffer(samples=x, sample_rate=sr)


def silence(duration_s: float = 1.0, sr: int = CANONICAL_RATE) -> AudioBuffer:
    return AudioBuffer(samples=np.zeros(int(duration_s * sr)), sample_rate=sr)


@pytest.fixture(scope="session")
def corpus_run():
    """standard-200 generated and detected once, shared by the acceptance
    tests (round-trip F1, evidence replay, determinism)."""
    import time

    from stutterkit.config import RuleConfig
    from stutterkit.pipeline import detect_events
    from stutterkit.synthgen import generate, standard_200

    runs = []
    detect_s = 0.0
    for rec_id, spec in standard_200():
        res = generate(spec, recording_id=rec_id)
        t0 = time.perf_counter()
        report = detect_events(res.audio, RuleConfig(),
                               alignment=res.alignment, recording_id=rec_id)
        detect_s += time.perf_counter() - t0
        runs.append((res, report))
    return {"runs": runs, "detect_s": detect_s}
