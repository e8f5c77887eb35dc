"""Audio ingestion and preprocessing.

Pipeline order is fixed: resample to 16 kHz, RMS-normalize to -20 dBFS,
pre-emphasize with coefficient 0.97. Loudness is measured on the
un-emphasized signal. Everything downstream assumes the canonical
16 kHz buffer and the 25 ms / 10 ms framing contract from `frames`.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from math import gcd
from pathlib import Path

import numpy as np

from . import frames
from .errors import AudioFormatError

CANONICAL_RATE = 16000
TARGET_RMS_DB = -20.0
PREEMPHASIS_COEFF = 0.97

# VAD constants (spec'd in prose, not part of RuleConfig)
VAD_MARGIN_DB = 6.0
VAD_HANGOVER_S = 0.2
VAD_ABS_FLOOR_DB = -80.0
VAD_PEAK_DROP_DB = 30.0
MAX_INTERNAL_PAUSE_S = 2.0  # longer internal silences are outside rule scope


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio with samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int
    loudness_warning: bool = False

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class VadMask:
    """Frame-aligned speech mask on the canonical framing."""

    mask: np.ndarray  # bool, one entry per canonical frame
    hop_s: float = frames.HOP_S

    def __len__(self) -> int:
        return len(self.mask)

    def speech_duration_s(self) -> float:
        return float(np.count_nonzero(self.mask)) * self.hop_s

    def runs(self, value: bool) -> list[tuple[int, int]]:
        """Maximal [start, end) frame runs where mask == value."""
        m = self.mask == value
        if not m.any():
            return []
        d = np.diff(m.astype(np.int8))
        starts = list(np.where(d == 1)[0] + 1)
        ends = list(np.where(d == -1)[0] + 1)
        if m[0]:
            starts.insert(0, 0)
        if m[-1]:
            ends.append(len(m))
        return list(zip(starts, ends))

    def speech_bounds(self) -> tuple[int, int] | None:
        """(first, last+1) speech frame indices, or None if no speech."""
        idx = np.where(self.mask)[0]
        if len(idx) == 0:
            return None
        return int(idx[0]), int(idx[-1]) + 1


# ---------------------------------------------------------------------------
# WAV I/O (hand-rolled RIFF: the stdlib wave module rejects float32 files)
# ---------------------------------------------------------------------------

_PCM = 1
_FLOAT = 3
_EXTENSIBLE = 0xFFFE


def load_audio(path: str | Path) -> AudioBuffer:
    """Read a RIFF/WAVE file (PCM 16/24/32-bit or float32), mix to mono.

    Multichannel input is averaged across channels; integer samples are
    scaled to [-1, 1].
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) == 0:
        raise AudioFormatError(f"{path}: empty file")
    if len(data) < 44 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioFormatError(f"{path}: corrupt header (not a RIFF/WAVE file)")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise AudioFormatError(f"{path}: corrupt header (truncated fmt chunk)")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
            if fmt[0] == _EXTENSIBLE and len(body) >= 26:
                (sub,) = struct.unpack_from("<H", body, 24)
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            payload = body
        pos += 8 + size + (size & 1)

    if fmt is None or payload is None:
        raise AudioFormatError(f"{path}: corrupt header (missing fmt or data chunk)")
    codec, channels, rate, _, _, bits = fmt
    if channels < 1 or rate <= 0:
        raise AudioFormatError(f"{path}: corrupt header (channels={channels}, rate={rate})")

    if codec == _PCM and bits == 16:
        x = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    elif codec == _PCM and bits == 24:
        raw = np.frombuffer(payload, dtype=np.uint8)
        raw = raw[: (len(raw) // 3) * 3].reshape(-1, 3)
        ints = (
            raw[:, 0].astype(np.int32)
            | (raw[:, 1].astype(np.int32) << 8)
            | (raw[:, 2].astype(np.int32) << 16)
        )
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
        x = ints.astype(np.float64) / float(1 << 23)
    elif codec == _PCM and bits == 32:
        x = np.frombuffer(payload, dtype="<i4").astype(np.float64) / float(1 << 31)
    elif codec == _FLOAT and bits == 32:
        x = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise AudioFormatError(
            f"{path}: unsupported codec (format tag {codec}, {bits}-bit); "
            "only PCM 16/24/32-bit and float32 WAV are accepted"
        )

    if len(x) == 0:
        raise AudioFormatError(f"{path}: empty data chunk")
    if channels > 1:
        x = x[: (len(x) // channels) * channels].reshape(-1, channels).mean(axis=1)
    np.clip(x, -1.0, 1.0, out=x)
    return AudioBuffer(samples=x, sample_rate=int(rate))


def save_audio(buf: AudioBuffer, path: str | Path) -> None:
    """Write 16-bit PCM WAV. Quantization is deterministic."""
    x = np.clip(buf.samples, -1.0, 1.0)
    pcm = np.round(x * 32767.0).astype("<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(pcm), b"WAVE", b"fmt ", 16,
        _PCM, 1, buf.sample_rate, buf.sample_rate * 2, 2, 16,
        b"data", len(pcm),
    )
    Path(path).write_bytes(header + pcm)


# ---------------------------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------------------------

_RESAMPLE_TAPS = 64
_KAISER_BETA = 8.0


def resample(buf: AudioBuffer, target_hz: int) -> AudioBuffer:
    """Polyphase windowed-sinc (Kaiser beta=8, 64 taps/phase) resampling."""
    if target_hz <= 0:
        raise ValueError(f"target_hz must be positive, got {target_hz}")
    if buf.sample_rate == target_hz:
        return buf
    g = gcd(buf.sample_rate, int(target_hz))
    up = int(target_hz) // g
    down = buf.sample_rate // g

    taps = _RESAMPLE_TAPS * up
    cutoff = 0.5 / max(up, down) * 0.945  # cycles/sample at the upsampled rate
    n = np.arange(taps) - (taps - 1) / 2.0
    proto = 2.0 * cutoff * np.sinc(2.0 * cutoff * n) * np.kaiser(taps, _KAISER_BETA)
    proto /= np.sum(proto)  # unity DC gain
    poly = np.zeros((up, _RESAMPLE_TAPS))
    for phase in range(up):
        branch = proto[phase::up]
        poly[phase, : len(branch)] = branch
    poly *= up  # compensate zero-stuffing

    x = buf.samples
    n_in = len(x)
    n_out = (n_in * up + down - 1) // down
    delay = (taps - 1) // 2
    pad = _RESAMPLE_TAPS + 2
    xp = np.concatenate([np.zeros(pad), x, np.zeros(pad + _RESAMPLE_TAPS)])

    out = np.empty(n_out)
    t_idx = np.arange(_RESAMPLE_TAPS)
    chunk = 65536
    for s in range(0, n_out, chunk):
        e = min(s + chunk, n_out)
        j = np.arange(s, e)
        p = j * down + delay
        anchor = p // up
        phase = p - anchor * up
        gather = xp[(anchor[:, None] + pad) - t_idx[None, :]]
        out[s:e] = np.einsum("ij,ij->i", gather, poly[phase])
    np.clip(out, -1.0, 1.0, out=out)
    return AudioBuffer(samples=out, sample_rate=int(target_hz),
                       loudness_warning=buf.loudness_warning)


def normalize_loudness(buf: AudioBuffer, target_db: float = TARGET_RMS_DB) -> AudioBuffer:
    """Scale so wideband RMS hits target_db dBFS.

    All-silence input is returned unchanged with the warning flag set.
    """
    if len(buf) == 0:
        raise ValueError("cannot normalize an empty buffer")
    rms = float(np.sqrt(np.mean(buf.samples ** 2)))
    if rms < 1e-8:
        return replace(buf, loudness_warning=True)
    gain = 10.0 ** ((target_db - 20.0 * np.log10(rms)) / 20.0)
    out = np.clip(buf.samples * gain, -1.0, 1.0)
    return AudioBuffer(samples=out, sample_rate=buf.sample_rate,
                       loudness_warning=buf.loudness_warning)


def preemphasize(buf: AudioBuffer, coeff: float = PREEMPHASIS_COEFF) -> AudioBuffer:
    """y[0] = x[0]; y[n] = x[n] - coeff*x[n-1]."""
    if not 0.0 <= coeff < 1.0:
        raise ValueError(f"pre-emphasis coefficient must be in [0, 1), got {coeff}")
    x = buf.samples
    y = np.empty_like(x)
    y[0] = x[0]
    y[1:] = x[1:] - coeff * x[:-1]
    return AudioBuffer(samples=y, sample_rate=buf.sample_rate,
                       loudness_warning=buf.loudness_warning)


def deemphasize(buf: AudioBuffer, coeff: float = PREEMPHASIS_COEFF) -> AudioBuffer:
    """Inverse of preemphasize; recovers the input to ~1e-9."""
    x = buf.samples
    y = np.empty_like(x)
    acc = 0.0
    # IIR y[n] = x[n] + coeff*y[n-1]; cheap scalar loop is fine for tests
    for i, v in enumerate(x):
        acc = v + coeff * acc
        y[i] = acc
    return AudioBuffer(samples=y, sample_rate=buf.sample_rate)


def compute_vad(buf: AudioBuffer, cfg=None) -> VadMask:
    """Energy VAD on the canonical framing.

    Threshold: noise floor (5th percentile of frame energy) + 6 dB, capped
    at peak - 30 dB, never below -80 dBFS. A 200 ms hangover bridges short
    internal gaps so micro-pauses inside words stay inside speech regions;
    longer gaps (silent-block evidence) are preserved.
    """
    if buf.sample_rate != CANONICAL_RATE:
        raise ValueError(f"VAD expects the canonical {CANONICAL_RATE} Hz buffer")
    e = frames.frame_energy_db(buf.samples)
    if len(e) == 0:
        return VadMask(mask=np.zeros(0, dtype=bool))
    floor = float(np.percentile(e, 5))
    peak = float(e.max())
    thr = max(min(floor + VAD_MARGIN_DB, peak - VAD_PEAK_DROP_DB), VAD_ABS_FLOOR_DB)
    mask = e > thr

    # bridge internal non-speech gaps <= hangover
    hang = int(round(VAD_HANGOVER_S / frames.HOP_S))
    raw = VadMask(mask=mask)
    bounds = raw.speech_bounds()
    if bounds is not None:
        first, last = bounds
        for start, end in raw.runs(False):
            if start > first and end < last and (end - start) <= hang:
                mask[start:end] = True
    return VadMask(mask=mask)
