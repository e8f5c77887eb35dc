"""The four rule detectors. Each emits candidate events carrying the
exact measurements its rule compared against thresholds, so every
decision can be replayed from the evidence record alone.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import peaks
from .align import WordAlignment, normalize_token
from .annotations import EventKind
from .audio import MAX_INTERNAL_PAUSE_S, VadMask
from .config import RuleConfig
from .dtw import normalized_dtw_cost
from .features import FeatureSet, energy_silence_threshold_db
from .frames import HOP_S

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DysfluencyEvent:
    kind: EventKind
    start_s: float
    end_s: float
    confidence: float
    evidence: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise ValueError(f"event interval invalid: [{self.start_s}, {self.end_s}]")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence outside [0, 1]: {self.confidence}")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "start_s": round(self.start_s, 4),
            "end_s": round(self.end_s, 4),
            "confidence": round(self.confidence, 4),
            "evidence": self.evidence,
        }


def _clamp01(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def t_min_s(cfg: RuleConfig, speaking_rate: float) -> float:
    """Minimum prolongation duration: alpha/rate, or the fixed fallback."""
    if cfg.rate_normalization_enabled:
        return cfg.alpha / speaking_rate
    return cfg.fixed_t_min_s


# ---------------------------------------------------------------------------
# prolongations
# ---------------------------------------------------------------------------

def _pairwise_static_corr(static: np.ndarray) -> np.ndarray:
    """Pearson correlation of consecutive static-MFCC frames.

    Frames with (near-)zero variance across coefficients correlate 0 by
    convention, so silence never extends a segment.
    """
    centered = static - static.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    num = np.einsum("ij,ij->i", centered[:-1], centered[1:])
    den = norms[:-1] * norms[1:]
    corr = np.zeros(len(static) - 1)
    ok = den > 1e-12
    corr[ok] = num[ok] / den[ok]
    return corr


def detect_prolongations(fs: FeatureSet, cfg: RuleConfig) -> list[DysfluencyEvent]:
    """Spectrally stationary voiced stretches longer than T_min.

    A frame pair extends the running segment iff its static-MFCC
    correlation exceeds theta_sim, the F0 jump stays below theta_f0
    (gate skipped when either frame is unvoiced), and the frame's HNR
    exceeds theta_hnr.
    """
    static = fs.static_mfcc()
    n = len(static)
    if n < 2:
        return []
    corr = _pairwise_static_corr(static)
    f0 = fs.f0.values
    hnr = fs.hnr.values

    voiced_pair = (f0[:-1] > 0) & (f0[1:] > 0)
    f0_ok = np.ones(n - 1, dtype=bool)
    if math.isfinite(cfg.theta_f0):
        jump = np.abs(f0[1:] - f0[:-1])
        f0_ok = np.where(voiced_pair, jump < cfg.theta_f0, True)
    hnr_ok = hnr[:-1] > cfg.theta_hnr
    extend = (corr > cfg.theta_sim) & f0_ok & hnr_ok

    tmin = t_min_s(cfg, fs.speaking_rate)
    events: list[DysfluencyEvent] = []

    def close(first_pair: int, last_pair: int) -> None:
        # pairs [first..last] similar -> frames [first .. last+1]
        n_frames_seg = last_pair - first_pair + 2
        duration = n_frames_seg * HOP_S
        start = first_pair * HOP_S
        end = start + duration
        if duration <= tmin:
            return
        mean_sim = float(corr[first_pair:last_pair + 1].mean())
        norm_dur = duration * fs.speaking_rate
        confidence = _clamp01(
            0.5 * (mean_sim - cfg.theta_sim) / (1.0 - cfg.theta_sim)
            + 0.5 * min(1.0, (norm_dur - cfg.alpha) / cfg.alpha))
        events.append(DysfluencyEvent(
            kind=EventKind.PROLONGATION,
            start_s=start,
            end_s=end,
            confidence=confidence,
            evidence={
                "mean_sim": round(mean_sim, 6),
                "duration_s": round(duration, 4),
                "speaking_rate": round(fs.speaking_rate, 4),
                "normalized_duration": round(norm_dur, 4),
                "t_min_s": round(tmin, 4),
            },
        ))

    run_start = None
    for i, ok in enumerate(extend):
        if ok and run_start is None:
            run_start = i
        elif not ok and run_start is not None:
            close(run_start, i - 1)
            run_start = None
    if run_start is not None:
        close(run_start, len(extend) - 1)
    return events


# ---------------------------------------------------------------------------
# repetition score (quasi-periodicity)
# ---------------------------------------------------------------------------

_R_WINDOW_S = 0.5

# Modulation floors below which a track counts as unmodulated for the
# repetition score (the zero-variance convention, made numerically
# meaningful): measured repetition bursts swing >= ~10 dB / 0.35 / 200 Hz
# while stationary tones and steady noise stay under ~0.6 dB / 0.06 /
# 80 Hz, so these sit between with wide margins either side.
MIN_TRACK_STD = {"energy": 3.0, "flux": 0.1, "centroid": 120.0}


def _acf_curve(track: np.ndarray, lag_hi: int,
               min_std: float = 0.0) -> np.ndarray | None:
    """Unbiased mean-removed autocorrelation for lags 0..lag_hi, clipped
    to [-1, 1]. None for unmodulated tracks (convention: contribute 0)."""
    x = track - track.mean()
    n = len(x)
    var = float(np.dot(x, x)) / n
    if var < max(min_std * min_std, 1e-12):
        return None
    lag_hi = min(lag_hi, n - 2)
    full = np.correlate(x, x, mode="full")[n - 1:n + lag_hi]
    overlap = n - np.arange(lag_hi + 1)
    return np.clip(full / overlap / var, -1.0, 1.0)


def _acf_peak(track: np.ndarray, lag_lo: int, lag_hi: int,
              min_std: float = 0.0) -> tuple[float, float]:
    """Best genuine periodicity peak of the track's autocorrelation.

    Only local maxima of the ACF inside the lag range count: any smooth
    track correlates with itself at short lags, so the raw maximum would
    measure smoothness rather than repetition. Peaks are parabolically
    interpolated so fractional-frame periods score fairly against their
    integer multiples; the shortest near-max peak wins (fundamental, not
    a multiple). No local maximum means no periodicity (0).
    """
    acf = _acf_curve(track, lag_hi + 1, min_std)
    if acf is None:
        return 0.0, float(lag_lo)
    cand = peaks.local_maxima(acf)
    cand = cand[(cand >= lag_lo) & (cand <= lag_hi)]
    if len(cand) == 0:
        return 0.0, float(lag_lo)
    vals = np.empty(len(cand))
    lags = np.empty(len(cand))
    for idx, k in enumerate(cand):
        y0, y1, y2 = acf[k - 1], acf[k], acf[k + 1]
        den = y0 - 2.0 * y1 + y2
        delta = 0.5 * (y0 - y2) / den if abs(den) > 1e-12 else 0.0
        delta = float(np.clip(delta, -0.5, 0.5))
        vals[idx] = min(y1 - 0.25 * (y0 - y2) * delta, 1.0)
        lags[idx] = k + delta
    top = float(vals.max())
    if top > 0:
        pick = int(np.where(vals >= 0.95 * top)[0].min())
    else:
        pick = int(np.argmax(vals))
    return float(vals[pick]), float(lags[pick])


def repetition_score(fs: FeatureSet, t: float,
                     cfg: RuleConfig) -> tuple[float, float]:
    """Weighted ACF-peak repetition score R(t) on a 500 ms window
    centered at t, plus the arg-max lag in seconds."""
    n = fs.n_frames()
    if not 0.0 <= t <= n * HOP_S:
        raise ValueError(f"repetition-score window at t={t:.3f}s falls outside "
                         "the recording")
    half = int(round(_R_WINDOW_S / HOP_S / 2))
    center = fs.energy.frame_at(t)
    lo = max(0, center - half)
    hi = min(n, center + half)
    lag_lo = max(1, int(round(cfg.acf_lag_range_s[0] / HOP_S)))
    lag_hi = int(round(cfg.acf_lag_range_s[1] / HOP_S))

    tracks = {
        "energy": fs.energy.values[lo:hi],
        "flux": fs.flux.values[lo:hi],
        "centroid": fs.centroid.values[lo:hi],
    }
    score = 0.0
    best_lag_s = cfg.acf_lag_range_s[0]
    best_contrib = -1.0
    for name, track in tracks.items():
        w = cfg.acf_weights.get(name, 0.0)
        if w <= 0:
            continue
        r, lag = _acf_peak(track, lag_lo, lag_hi, MIN_TRACK_STD.get(name, 0.0))
        r = max(r, 0.0)
        score += w * r
        if w * r > best_contrib:
            best_contrib = w * r
            best_lag_s = lag * HOP_S
    return float(score), float(best_lag_s)


# ---------------------------------------------------------------------------
# sound repetitions
# ---------------------------------------------------------------------------

def count_cycles(energy_window: np.ndarray) -> int:
    """Autocorrelation peaks of the window's energy track above 0.5
    normalized height."""
    acf = _acf_curve(energy_window, len(energy_window) - 2,
                     MIN_TRACK_STD["energy"])
    if acf is None:
        return 0
    idx = peaks.local_maxima(acf)
    return int(np.count_nonzero(acf[idx] >= 0.5))


def _batched_window_costs(static: np.ndarray, silent: np.ndarray,
                          W: int, theta: float) -> np.ndarray:
    """Normalized half-vs-half DTW cost for every window start at once.

    Equivalent to normalized_dtw_cost on each window's halves, but the
    DP recurrence is vectorized across windows. Windows that cannot beat
    `theta` (too many unit-cost silent frames) come back as inf.
    """
    n = len(static)
    half = W // 2
    n_win = n - W + 1
    costs = np.full(n_win, np.inf)
    if n_win <= 0:
        return costs

    sil_counts = np.convolve(silent.astype(np.int64), np.ones(W, dtype=np.int64),
                             mode="valid")
    live = ~silent
    live_counts = np.convolve(live.astype(np.int64), np.ones(W, dtype=np.int64),
                              mode="valid")

    # prunable: every silent frame forces a unit-cost path step, and the
    # path length never exceeds W
    candidates = np.where((sil_counts / float(W) < theta)
                          & (live_counts > 0))[0]
    if len(candidates) == 0:
        return costs

    # cepstral-mean-centered RMS frame norm per window (live frames only),
    # via sliding sums: sqrt(E[|f|^2] - |E[f]|^2)
    masked = np.where(live[:, None], static, 0.0)
    cs_vec = np.concatenate([np.zeros((1, static.shape[1])),
                             np.cumsum(masked, axis=0)])
    cs_sq = np.concatenate([[0.0],
                            np.cumsum(np.einsum("ij,ij->i", masked, masked))])
    counts = np.maximum(live_counts[candidates], 1)
    vec_sum = cs_vec[candidates + W] - cs_vec[candidates]
    sq_sum = cs_sq[candidates + W] - cs_sq[candidates]
    mu = vec_sum / counts[:, None]
    var = sq_sum / counts - np.einsum("ij,ij->i", mu, mu)
    mean_norm = np.sqrt(np.maximum(var, 0.0))
    ok = mean_norm > 1e-12
    candidates = candidates[ok]
    mean_norm = mean_norm[ok]
    if len(candidates) == 0:
        return costs

    # chunked so the (k, half, half, d) difference tensor stays small
    chunk = 256
    offs_a = np.arange(half)
    for c0 in range(0, len(candidates), chunk):
        starts = candidates[c0:c0 + chunk]
        norms = mean_norm[c0:c0 + chunk]
        k = len(starts)
        idx_a = starts[:, None] + offs_a[None, :]
        idx_b = idx_a + half
        A = static[idx_a]                 # (k, half, d)
        B = static[idx_b]
        diff = A[:, :, None, :] - B[:, None, :, :]
        local = np.sqrt(np.einsum("kijd,kijd->kij", diff, diff))
        del A, B, diff
        local /= norms[:, None, None]
        pair_silent = silent[idx_a][:, :, None] | silent[idx_b][:, None, :]
        local = np.where(pair_silent, 1.0, local)

        acc = np.full((k, half + 1, half + 1), np.inf)
        steps = np.zeros((k, half + 1, half + 1), dtype=np.int32)
        acc[:, 0, 0] = 0.0
        for i in range(1, half + 1):
            for j in range(1, half + 1):
                best = acc[:, i - 1, j - 1]
                st = steps[:, i - 1, j - 1]
                alt = acc[:, i - 1, j]
                take = alt < best
                best = np.where(take, alt, best)
                st = np.where(take, steps[:, i - 1, j], st)
                alt = acc[:, i, j - 1]
                take = alt < best
                best = np.where(take, alt, best)
                st = np.where(take, steps[:, i, j - 1], st)
                acc[:, i, j] = local[:, i - 1, j - 1] + best
                steps[:, i, j] = st + 1
        costs[starts] = acc[:, half, half] / steps[:, half, half]
    return costs


def detect_sound_repetitions(fs: FeatureSet, cfg: RuleConfig) -> list[DysfluencyEvent]:
    """DTW self-similarity of sliding-window halves, gated by the
    quasi-periodicity score R(t) > theta_R.

    After a hit the scan advances by a full window (non-overlap rule).
    """
    static = fs.static_mfcc()
    n = len(static)
    W = cfg.dtw_window_frames
    if n < W:
        return []
    half = W // 2
    silence_thr = energy_silence_threshold_db(fs.energy.values)
    silent = fs.energy.values < silence_thr
    energy = fs.energy.values
    window_costs = _batched_window_costs(static, silent, W, cfg.theta_dtw)

    events: list[DysfluencyEvent] = []
    i = 0
    while i + W <= n:
        cost = float(window_costs[i])
        if cost < cfg.theta_dtw:
            center_t = (i + half) * HOP_S
            score, lag_s = repetition_score(fs, center_t, cfg)
            if score > cfg.theta_R:
                cycles = count_cycles(energy[i:i + W])
                events.append(DysfluencyEvent(
                    kind=EventKind.SOUND_REP,
                    start_s=i * HOP_S,
                    end_s=(i + W) * HOP_S,
                    confidence=_clamp01(score / cfg.theta_R - 0.5),
                    evidence={
                        "dtw_cost": round(cost, 6),
                        "cycle_count": cycles,
                        "rep_score": round(score, 6),
                        "acf_lag_s": round(lag_s, 4),
                    },
                ))
                i += W
                continue
        i += 1
    return events


# ---------------------------------------------------------------------------
# word repetitions
# ---------------------------------------------------------------------------

def _word_frames(fs: FeatureSet, start_s: float, end_s: float) -> slice:
    times = fs.mfcc.times()
    lo = int(np.searchsorted(times, start_s, side="left"))
    hi = int(np.searchsorted(times, end_s, side="right"))
    return slice(lo, max(hi, lo + 1))


def detect_word_repetitions(fs: FeatureSet, align: WordAlignment | None,
                            cfg: RuleConfig) -> list[DysfluencyEvent]:
    """Consecutive identical tokens within the temporal window, confirmed
    by DTW acoustic similarity of the two word intervals.

    With no alignment available the detector is skipped (soft behavior).
    """
    if align is None or len(align) == 0:
        log.info("word-repetition detector skipped: no alignment provided")
        return []
    align.validate()
    if len(align) < 2:
        return []

    static = fs.static_mfcc()
    silence_thr = energy_silence_threshold_db(fs.energy.values)
    silent = fs.energy.values < silence_thr

    events: list[DysfluencyEvent] = []
    words = align.words
    for a, b in zip(words[:-1], words[1:]):
        token = normalize_token(a.word)
        if not token or token != normalize_token(b.word):
            continue
        gap = b.start_s - a.start_s
        if gap > cfg.word_window_s:
            continue
        sa = _word_frames(fs, a.start_s, a.end_s)
        sb = _word_frames(fs, b.start_s, b.end_s)
        if sa.stop > len(static) or sb.stop > len(static):
            continue
        cost = normalized_dtw_cost(static[sa], static[sb],
                                   silent[sa], silent[sb])
        if cost < cfg.theta_word_dtw:
            events.append(DysfluencyEvent(
                kind=EventKind.WORD_REP,
                start_s=a.start_s,
                end_s=b.end_s,
                confidence=_clamp01(1.0 - cost / cfg.theta_word_dtw),
                evidence={
                    "matched_word": token,
                    "dtw_cost": round(cost, 6),
                    "onset_gap_s": round(gap, 4),
                },
            ))
    return events


# ---------------------------------------------------------------------------
# blocks
# ---------------------------------------------------------------------------

def detect_blocks(fs: FeatureSet, vad: VadMask, cfg: RuleConfig) -> list[DysfluencyEvent]:
    """Silent blocks: internal non-speech runs > block_silence_s preceded
    (within block_preflux_s) by a spectral-flux spike above the track's
    90th percentile and followed by speech. Audible blocks: sustained
    low-amplitude high-centroid speech frames.
    """
    if len(vad) != fs.n_frames():
        raise ValueError("FeatureSet and VadMask framing differ")
    events: list[DysfluencyEvent] = []
    mask = vad.mask
    flux = fs.flux.values
    flux_thr = float(np.percentile(flux, cfg.block_flux_percentile))
    pre = max(1, int(round(cfg.block_preflux_s / HOP_S)))

    bounds = VadMask(mask=mask).speech_bounds()
    if bounds is not None:
        first_speech, last_speech = bounds
        for start, end in VadMask(mask=mask).runs(False):
            if start <= first_speech or end >= last_speech:
                continue  # leading/trailing silence is never a block
            silence_s = (end - start) * HOP_S
            if silence_s <= cfg.block_silence_s or silence_s > MAX_INTERNAL_PAUSE_S:
                continue
            window = flux[max(0, start - pre):start]
            if len(window) == 0:
                continue
            spike = float(window.max())
            if spike > flux_thr:
                events.append(DysfluencyEvent(
                    kind=EventKind.BLOCK,
                    start_s=start * HOP_S,
                    end_s=end * HOP_S,
                    confidence=_clamp01(silence_s / cfg.block_silence_s - 1.0),
                    evidence={
                        "variant": "silent",
                        "silence_s": round(silence_s, 4),
                        "preceding_flux": round(spike, 6),
                        "flux_threshold": round(flux_thr, 6),
                    },
                ))

    # audible variant
    energy = fs.energy.values
    speech_energy = energy[mask] if mask.any() else energy
    median_db = float(np.median(speech_energy))
    rel = energy - median_db
    gate = mask & (rel <= cfg.audible_block_rms_db) \
        & (fs.centroid.values >= cfg.audible_block_centroid_hz)
    for start, end in VadMask(mask=gate).runs(True):
        duration = (end - start) * HOP_S
        if duration < cfg.audible_block_min_s:
            continue
        events.append(DysfluencyEvent(
            kind=EventKind.BLOCK,
            start_s=start * HOP_S,
            end_s=end * HOP_S,
            confidence=_clamp01(duration / cfg.audible_block_min_s - 1.0),
            evidence={
                "variant": "audible",
                "duration_s": round(duration, 4),
                "rms_rel_db": round(float(rel[start:end].mean()), 4),
                "centroid_hz": round(float(fs.centroid.values[start:end].mean()), 2),
            },
        ))
    events.sort(key=lambda e: e.start_s)
    return events


# ---------------------------------------------------------------------------
# evidence replay: the interpretability contract
# ---------------------------------------------------------------------------

def replay_event(event: DysfluencyEvent, cfg: RuleConfig) -> bool:
    """Re-derive the firing decision from the evidence record alone.

    Returns True iff the recorded measurements still satisfy the rule
    under `cfg`. Merged events carry the evidence of their most
    confident constituent, which must itself replay.
    """
    ev = event.evidence
    try:
        if event.kind == EventKind.PROLONGATION:
            tmin = (cfg.alpha / ev["speaking_rate"]
                    if cfg.rate_normalization_enabled else cfg.fixed_t_min_s)
            return ev["mean_sim"] > cfg.theta_sim and ev["duration_s"] > tmin
        if event.kind == EventKind.SOUND_REP:
            return ev["dtw_cost"] < cfg.theta_dtw and ev["rep_score"] > cfg.theta_R
        if event.kind == EventKind.WORD_REP:
            return (ev["dtw_cost"] < cfg.theta_word_dtw
                    and ev["onset_gap_s"] <= cfg.word_window_s)
        if event.kind == EventKind.BLOCK:
            if ev.get("variant") == "silent":
                return (ev["silence_s"] > cfg.block_silence_s
                        and ev["preceding_flux"] > ev["flux_threshold"])
            return (ev["duration_s"] >= cfg.audible_block_min_s
                    and ev["rms_rel_db"] <= cfg.audible_block_rms_db
                    and ev["centroid_hz"] >= cfg.audible_block_centroid_hz)
    except KeyError:
        return False
    return False
