"""Acoustic feature pyramid on the canonical 25 ms / 10 ms framing.

All per-frame tracks from one buffer have identical frame counts; the
amplitude envelope is the only sample-rate output. Frames are processed
in chunks throughout to keep peak memory small.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import peaks
from .audio import (AudioBuffer, CANONICAL_RATE, PREEMPHASIS_COEFF, VadMask,
                    VAD_ABS_FLOOR_DB, VAD_MARGIN_DB, VAD_PEAK_DROP_DB)
from .config import RuleConfig
from .errors import InsufficientSpeechError
from .frames import HOP, HOP_S, WINDOW, WINDOW_S, frame_energy_db, frame_view, num_frames

N_MFCC = 13
N_MELS = 26
MFCC_NFFT = 512
SPECTRAL_NFFT = 2048
LOG_FLOOR = 1e-10

F0_MIN_HZ = 50.0
F0_MAX_HZ = 400.0
VOICING_THRESHOLD = 0.3

HNR_MIN_DB = -10.0
HNR_MAX_DB = 40.0

ENVELOPE_LOWPASS_HZ = 30.0

RATE_MIN = 0.5
RATE_MAX = 8.0
MIN_SPEECH_S = 0.5

_CHUNK = 256


@dataclass(frozen=True)
class FrameSeries:
    """Per-frame scalar or vector track with framing metadata."""

    values: np.ndarray
    hop_s: float = HOP_S
    window_s: float = WINDOW_S
    start_s: float = WINDOW_S / 2.0  # center time of frame 0

    def __len__(self) -> int:
        return len(self.values)

    def times(self) -> np.ndarray:
        return self.start_s + self.hop_s * np.arange(len(self.values))

    def frame_at(self, t_s: float) -> int:
        """Index of the frame whose center is nearest t_s, clipped."""
        i = int(round((t_s - self.start_s) / self.hop_s))
        return min(max(i, 0), len(self.values) - 1)


@dataclass(frozen=True)
class FeatureSet:
    """Complete pyramid for one recording."""

    mfcc: FrameSeries       # (n, 39): 13 static + delta + delta-delta
    f0: FrameSeries         # Hz, 0 = unvoiced
    hnr: FrameSeries        # dB
    centroid: FrameSeries   # Hz
    spread: FrameSeries     # Hz
    flux: FrameSeries       # dimensionless
    energy: FrameSeries     # dB RMS per frame
    envelope: np.ndarray    # sample-rate amplitude envelope
    speaking_rate: float    # syllables/second

    def n_frames(self) -> int:
        return len(self.mfcc)

    def static_mfcc(self) -> np.ndarray:
        return self.mfcc.values[:, :N_MFCC]

    def validate(self) -> None:
        tracks = [self.mfcc, self.f0, self.hnr, self.centroid,
                  self.spread, self.flux, self.energy]
        lengths = {len(t) for t in tracks}
        if len(lengths) != 1:
            raise ValueError(f"track lengths differ: {sorted(lengths)}")
        for t in tracks:
            if not np.all(np.isfinite(t.values)):
                raise ValueError("non-finite feature value")
        f0 = self.f0.values
        voiced = f0 > 0
        if np.any((f0[voiced] < F0_MIN_HZ) | (f0[voiced] > F0_MAX_HZ)):
            raise ValueError("voiced F0 outside [50, 400] Hz")
        if not self.speaking_rate > 0:
            raise ValueError("speaking_rate must be positive")


# ---------------------------------------------------------------------------
# mel/DCT machinery
# ---------------------------------------------------------------------------

def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = N_MELS, nfft: int = MFCC_NFFT,
                   sr: int = CANONICAL_RATE, f_lo: float = 0.0,
                   f_hi: float = 8000.0) -> np.ndarray:
    """(n_mels, nfft//2+1) triangular filters, unit peak."""
    edges = _mel_to_hz(np.linspace(_hz_to_mel(f_lo), _hz_to_mel(f_hi), n_mels + 2))
    bins = np.fft.rfftfreq(nfft, 1.0 / sr)
    fb = np.zeros((n_mels, len(bins)))
    for i in range(n_mels):
        lo, cen, hi = edges[i], edges[i + 1], edges[i + 2]
        up = (bins - lo) / (cen - lo)
        down = (hi - bins) / (hi - cen)
        fb[i] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def dct_ii_matrix(n_out: int = N_MFCC, n_in: int = N_MELS) -> np.ndarray:
    """Orthonormal DCT-II basis, rows = output coefficients."""
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    d = np.cos(np.pi * k * (2 * n + 1) / (2 * n_in)) * np.sqrt(2.0 / n_in)
    d[0] *= np.sqrt(0.5)
    return d


def _deltas(c: np.ndarray) -> np.ndarray:
    """±2-frame regression deltas with edge replication."""
    pad = np.concatenate([c[:1], c[:1], c, c[-1:], c[-1:]], axis=0)
    return ((pad[3:-1] - pad[1:-3]) + 2.0 * (pad[4:] - pad[:-4])) / 10.0


def _require_canonical(buf: AudioBuffer) -> np.ndarray:
    if buf.sample_rate != CANONICAL_RATE:
        raise ValueError(f"features expect the canonical {CANONICAL_RATE} Hz buffer")
    if num_frames(len(buf.samples)) == 0:
        raise ValueError("buffer shorter than one 25 ms analysis window")
    return buf.samples


def _preemphasized(x: np.ndarray) -> np.ndarray:
    """Spectral front-ends emphasize internally; amplitude-domain tracks
    (energy, envelope, F0/HNR, VAD) measure the natural signal."""
    y = np.empty_like(x)
    y[0] = x[0]
    y[1:] = x[1:] - PREEMPHASIS_COEFF * x[:-1]
    return y


# ---------------------------------------------------------------------------
# feature operations
# ---------------------------------------------------------------------------

def compute_mfcc(buf: AudioBuffer) -> FrameSeries:
    """13 static MFCCs + deltas + delta-deltas per frame.

    Hann window, 512-pt DFT magnitude, 26 triangular mel filters over
    0-8000 Hz on the power spectrum, log with a 1e-10 floor, orthonormal
    DCT-II keeping c0..c12.
    """
    x = _preemphasized(_require_canonical(buf))
    n = num_frames(len(x))
    hann = np.hanning(WINDOW)
    fb = mel_filterbank()
    dct = dct_ii_matrix()
    static = np.empty((n, N_MFCC))
    for s in range(0, n, _CHUNK):
        fr = frame_view(x, s, min(_CHUNK, n - s)) * hann
        mag = np.abs(np.fft.rfft(fr, MFCC_NFFT, axis=1))
        mel = np.log(np.maximum(mag ** 2 @ fb.T, LOG_FLOOR))
        static[s:s + fr.shape[0]] = mel @ dct.T
    d1 = _deltas(static)
    d2 = _deltas(d1)
    return FrameSeries(values=np.concatenate([static, d1, d2], axis=1))


def _nccf_tracks(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame (best normalized cross-correlation, interpolated lag).

    Lag range covers 50-400 Hz. Lookahead past the final frames is
    zero-padded; their correlations simply come out low.
    """
    n = num_frames(len(x))
    lag_min = int(CANONICAL_RATE / F0_MAX_HZ)       # 40
    lag_max = int(round(CANONICAL_RATE / F0_MIN_HZ))  # 320
    seg_len = WINDOW + lag_max
    nfft = 1 << int(np.ceil(np.log2(seg_len + WINDOW)))
    xp = np.concatenate([x, np.zeros(seg_len)])
    off = np.arange(seg_len)
    best_r = np.zeros(n)
    best_lag = np.zeros(n)
    lag_grid = np.arange(lag_min, lag_max + 1, dtype=float)
    for s in range(0, n, _CHUNK):
        e = min(s + _CHUNK, n)
        starts = (HOP * np.arange(s, e))[:, None] + off[None, :]
        segs = xp[starts]
        del starts
        base = segs[:, :WINDOW]
        F = np.fft.rfft(segs, nfft, axis=1)
        B = np.fft.rfft(base, nfft, axis=1)
        np.conj(B, out=B)
        B *= F
        del F
        cc = np.fft.irfft(B, nfft, axis=1)[:, :lag_max + 1]
        del B
        c2 = np.cumsum(segs * segs, axis=1)
        del segs
        e0 = c2[:, WINDOW - 1]
        # energy of the shifted window x[lag : lag+WINDOW] per lag
        hi = c2[:, lag_min + WINDOW - 1:lag_max + WINDOW]
        lo = c2[:, lag_min - 1:lag_max]
        shifted = hi - lo
        denom = np.sqrt(np.maximum(e0[:, None] * shifted, 0.0)) + 1e-12
        nccf = cc[:, lag_min:lag_max + 1] / denom
        del cc, c2, denom

        interior = nccf[:, 1:-1]
        is_peak = (interior > nccf[:, :-2]) & (interior >= nccf[:, 2:])
        for row in range(nccf.shape[0]):
            pk = np.where(is_peak[row])[0] + 1
            if len(pk) == 0:
                continue
            vals = nccf[row, pk]
            top = vals.max()
            k = int(pk[vals >= 0.95 * top].min())  # shortest near-max lag
            y0, y1, y2 = nccf[row, k - 1], nccf[row, k], nccf[row, k + 1]
            den = y0 - 2.0 * y1 + y2
            delta = 0.5 * (y0 - y2) / den if abs(den) > 1e-12 else 0.0
            delta = float(np.clip(delta, -0.5, 0.5))
            best_r[s + row] = y1
            best_lag[s + row] = lag_grid[k] + delta
    return best_r, best_lag


def compute_f0(buf: AudioBuffer) -> FrameSeries:
    """Normalized cross-correlation pitch: voiced when the best peak is
    >= 0.3, F0 from the parabolic-interpolated lag, 3-frame median
    smoothing, 0 for unvoiced frames."""
    x = _require_canonical(buf)
    r, lag = _nccf_tracks(x)
    f0 = np.where(r >= VOICING_THRESHOLD, CANONICAL_RATE / np.maximum(lag, 1.0), 0.0)
    f0 = np.clip(f0, 0.0, F0_MAX_HZ)
    f0[(f0 > 0) & (f0 < F0_MIN_HZ)] = F0_MIN_HZ
    if len(f0) >= 3:
        stacked = np.stack([f0[:-2], f0[1:-1], f0[2:]])
        f0[1:-1] = np.median(stacked, axis=0)
    return FrameSeries(values=f0)


def compute_hnr(buf: AudioBuffer) -> FrameSeries:
    """Autocorrelation HNR: 10*log10(r/(1-r)) for the best pitch-range
    correlation r, clamped to [-10, 40] dB; unvoiced frames get -10."""
    x = _require_canonical(buf)
    r, _ = _nccf_tracks(x)
    r = np.clip(r, 0.0, 1.0 - 1e-12)
    hnr = np.full(len(r), HNR_MIN_DB)
    voiced = r >= VOICING_THRESHOLD
    hnr[voiced] = 10.0 * np.log10(r[voiced] / (1.0 - r[voiced]))
    return FrameSeries(values=np.clip(hnr, HNR_MIN_DB, HNR_MAX_DB))


def compute_spectral(buf: AudioBuffer) -> tuple[FrameSeries, FrameSeries, FrameSeries]:
    """(centroid, spread, flux) from 2048-pt spectra of canonical frames.

    Frames are the canonical 25 ms windows zero-padded to the 2048-pt
    FFT so every track keeps the shared frame count. Flux is the L2 norm
    of the rectified magnitude increase from the previous frame,
    normalized by the current frame's magnitude norm; silent frames
    (below the absolute VAD floor) produce 0.
    """
    raw = _require_canonical(buf)
    x = _preemphasized(raw)
    n = num_frames(len(x))
    hann = np.hanning(WINDOW)
    freqs = np.fft.rfftfreq(SPECTRAL_NFFT, 1.0 / CANONICAL_RATE)
    e_db = frame_energy_db(raw)
    silent = e_db <= VAD_ABS_FLOOR_DB

    centroid = np.zeros(n)
    spread = np.zeros(n)
    flux = np.zeros(n)
    prev_mag: np.ndarray | None = None
    for s in range(0, n, _CHUNK):
        fr = frame_view(x, s, min(_CHUNK, n - s)) * hann
        mag = np.abs(np.fft.rfft(fr, SPECTRAL_NFFT, axis=1))
        tot = mag.sum(axis=1)
        ok = tot > 0
        w = mag[ok] / tot[ok, None]
        c = w @ freqs
        centroid[s:s + fr.shape[0]][ok] = c
        spread[s:s + fr.shape[0]][ok] = np.sqrt(
            np.einsum("ij,ij->i", w, (freqs[None, :] - c[:, None]) ** 2))

        if prev_mag is None:
            block_prev, block_cur, out_start = mag[:-1], mag[1:], s + 1
        else:
            block_prev = np.concatenate([prev_mag[None, :], mag[:-1]])
            block_cur, out_start = mag, s
        if len(block_cur):
            diff = np.clip(block_cur - block_prev, 0.0, None)
            norms = np.linalg.norm(block_cur, axis=1)
            fx = np.zeros(len(block_cur))
            nz = norms > 0
            fx[nz] = np.linalg.norm(diff[nz], axis=1) / norms[nz]
            flux[out_start:s + fr.shape[0]] = fx
        prev_mag = mag[-1].copy()
    flux[silent] = 0.0
    flux[0] = 0.0
    centroid[silent] = 0.0
    spread[silent] = 0.0
    return (FrameSeries(values=centroid), FrameSeries(values=spread),
            FrameSeries(values=flux))


def compute_energy(buf: AudioBuffer) -> FrameSeries:
    """Per-frame RMS energy in dB."""
    x = _require_canonical(buf)
    return FrameSeries(values=frame_energy_db(x))


def _fast_len(n: int) -> int:
    """Smallest 5-smooth number >= n (pocketfft is slow on awkward sizes)."""
    best = 1 << (n - 1).bit_length()
    f5 = 1
    while f5 < best:
        f3 = f5
        while f3 < best:
            f2 = f3
            while f2 < n:
                f2 *= 2
            best = min(best, f2)
            f3 *= 3
        f5 *= 5
    return best


def _fir_lowpass(cutoff_hz: float, sr: int, taps: int = 2049) -> np.ndarray:
    n = np.arange(taps) - (taps - 1) / 2.0
    fc = cutoff_hz / sr
    h = 2.0 * fc * np.sinc(2.0 * fc * n) * np.kaiser(taps, 8.0)
    return h / h.sum()


def _fft_convolve_same(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """'same' convolution with reflect padding to suppress edge droop."""
    half = len(h) // 2
    left = x[1:half + 1][::-1] if len(x) > half else np.full(half, x[0] if len(x) else 0.0)
    right = x[-half - 1:-1][::-1] if len(x) > half else np.full(half, x[-1] if len(x) else 0.0)
    if len(left) < half:
        left = np.concatenate([np.full(half - len(left), x[0]), left])
    if len(right) < half:
        right = np.concatenate([right, np.full(half - len(right), x[-1])])
    xp = np.concatenate([left, x, right])
    nfft = _fast_len(len(xp) + len(h) - 1)
    y = np.fft.irfft(np.fft.rfft(xp, nfft) * np.fft.rfft(h, nfft), nfft)
    start = half + len(h) // 2
    return y[start:start + len(x)]


def compute_envelope(buf: AudioBuffer) -> np.ndarray:
    """Amplitude envelope: magnitude of the analytic signal (negative
    frequencies zeroed, positive doubled) smoothed by a 30 Hz low-pass."""
    x = _require_canonical(buf)
    n = len(x)
    m = _fast_len(n)
    # |analytic signal| as sqrt(x^2 + H(x)^2); the rfft route halves the
    # transient memory of the equivalent full-spectrum construction
    spec = np.fft.rfft(x, m)
    spec *= -1j
    spec[0] = 0.0
    if m % 2 == 0:
        spec[-1] = 0.0
    hilb = np.fft.irfft(spec, m)[:n]
    del spec
    env = np.hypot(x, hilb)
    del hilb
    return _fft_convolve_same(env, _fir_lowpass(ENVELOPE_LOWPASS_HZ, CANONICAL_RATE))


def band_energy_db(buf: AudioBuffer, lo_hz: float, hi_hz: float) -> np.ndarray:
    """Per-frame energy (dB) restricted to [lo_hz, hi_hz]."""
    x = _require_canonical(buf)
    n = num_frames(len(x))
    hann = np.hanning(WINDOW)
    freqs = np.fft.rfftfreq(MFCC_NFFT, 1.0 / CANONICAL_RATE)
    band = (freqs >= lo_hz) & (freqs <= hi_hz)
    out = np.empty(n)
    for s in range(0, n, _CHUNK):
        fr = frame_view(x, s, min(_CHUNK, n - s)) * hann
        mag2 = np.abs(np.fft.rfft(fr, MFCC_NFFT, axis=1)) ** 2
        out[s:s + fr.shape[0]] = 10.0 * np.log10(mag2[:, band].sum(axis=1) + 1e-12)
    return out


def estimate_speaking_rate(buf: AudioBuffer, vad: VadMask,
                           cfg: RuleConfig | None = None) -> float:
    """Syllables/second from intensity peaks of the 300-2500 Hz band.

    Peaks need >= 3 dB prominence and >= 120 ms separation and must land
    on speech frames. Result clamped to [0.5, 8.0].
    """
    cfg = cfg or RuleConfig()
    speech_s = vad.speech_duration_s()
    if speech_s < MIN_SPEECH_S:
        raise InsufficientSpeechError(
            f"only {speech_s:.2f} s of speech detected; need at least "
            f"{MIN_SPEECH_S} s — record a longer calibration sample")
    e = band_energy_db(buf, cfg.rate_band_low_hz, cfg.rate_band_high_hz)
    win = max(1, int(round(cfg.rate_smooth_s / HOP_S)))
    kernel = np.ones(win) / win
    smooth = np.convolve(e, kernel, mode="same")
    dist = max(1, int(round(cfg.rate_peak_separation_s / HOP_S)))
    idx = peaks.find_peaks(smooth, prominence=cfg.rate_peak_prominence_db,
                           distance=dist)
    if len(idx):
        idx = idx[vad.mask[idx]]
    rate = len(idx) / speech_s
    return float(np.clip(rate, RATE_MIN, RATE_MAX))


def energy_silence_threshold_db(energy_db: np.ndarray) -> float:
    """Silence threshold used by the DTW silent-frame convention; same
    formula as the VAD threshold so the two stay consistent."""
    floor = float(np.percentile(energy_db, 5))
    peak = float(energy_db.max())
    return max(min(floor + VAD_MARGIN_DB, peak - VAD_PEAK_DROP_DB), VAD_ABS_FLOOR_DB)


def extract_features(buf: AudioBuffer, vad: VadMask,
                     cfg: RuleConfig | None = None) -> FeatureSet:
    """Compute the full pyramid (single NCCF pass shared by F0 and HNR)."""
    x = _require_canonical(buf)
    r, lag = _nccf_tracks(x)
    f0 = np.where(r >= VOICING_THRESHOLD, CANONICAL_RATE / np.maximum(lag, 1.0), 0.0)
    f0 = np.clip(f0, 0.0, F0_MAX_HZ)
    f0[(f0 > 0) & (f0 < F0_MIN_HZ)] = F0_MIN_HZ
    if len(f0) >= 3:
        stacked = np.stack([f0[:-2], f0[1:-1], f0[2:]])
        f0[1:-1] = np.median(stacked, axis=0)
    rc = np.clip(r, 0.0, 1.0 - 1e-12)
    hnr = np.full(len(rc), HNR_MIN_DB)
    voiced = rc >= VOICING_THRESHOLD
    hnr[voiced] = 10.0 * np.log10(rc[voiced] / (1.0 - rc[voiced]))
    hnr = np.clip(hnr, HNR_MIN_DB, HNR_MAX_DB)

    centroid, spread, flux = compute_spectral(buf)
    fs = FeatureSet(
        mfcc=compute_mfcc(buf),
        f0=FrameSeries(values=f0),
        hnr=FrameSeries(values=hnr),
        centroid=centroid,
        spread=spread,
        flux=flux,
        energy=compute_energy(buf),
        envelope=compute_envelope(buf),
        speaking_rate=estimate_speaking_rate(buf, vad, cfg),
    )
    fs.validate()
    return fs


def dump_feature_csv(fs: FeatureSet, directory) -> list[str]:
    """One CSV per track (time_s,value...) for debugging and UI plots."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    scalar = {"f0": fs.f0, "hnr": fs.hnr, "centroid": fs.centroid,
              "spread": fs.spread, "flux": fs.flux, "energy": fs.energy}
    for name, track in scalar.items():
        p = directory / f"{name}.csv"
        times = track.times()
        with p.open("w") as fh:
            fh.write("time_s,value\n")
            for t, v in zip(times, track.values):
                fh.write(f"{t:.3f},{v:.6g}\n")
        written.append(str(p))
    p = directory / "mfcc.csv"
    with p.open("w") as fh:
        fh.write("time_s," + ",".join(f"c{i}" for i in range(N_MFCC)) + "\n")
        for t, row in zip(fs.mfcc.times(), fs.static_mfcc()):
            fh.write(f"{t:.3f}," + ",".join(f"{v:.6g}" for v in row) + "\n")
    written.append(str(p))
    return written
