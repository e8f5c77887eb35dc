"""Deterministic synthetic utterances with planted, annotated
dysfluencies: the test oracle standing in for licensed corpora.

Synthetic "speech" is harmonic-tone based. The rules only consume the
acoustic properties the generator controls (stationarity, periodicity,
silence, centroid), so realism is unnecessary for oracle validity:

* syllables are glided harmonic bursts (spectrally non-stationary, so
  they never look like prolongations or self-similar DTW windows);
* prolongations are stationary tones flanked contiguously by syllables
  whose F0 sits >= 30 Hz away, which pins the segment boundary;
* repetition bursts alternate a bright burst with a quiet dark murmur,
  giving a strongly periodic energy/centroid track;
* silent blocks are a sharp broadband onset fragment then silence;
* audible blocks are faint high-band noise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .align import AlignedWord, WordAlignment
from .annotations import Annotation, AnnotationSet, EventKind
from .audio import AudioBuffer, CANONICAL_RATE

SR = CANONICAL_RATE

SYLLABLE_AMP = 0.3
MURMUR_DB = -25.0        # repetition inter-burst level vs burst
AUDIBLE_NOISE_RMS_DB = -56.0
FRAGMENT_S = 0.035
PULSE_SHARPNESS = 3       # silent-block articulatory onset fragment


@dataclass(frozen=True)
class Syllable:
    dur: float


@dataclass(frozen=True)
class Prolongation:
    dur: float


@dataclass(frozen=True)
class RepBurst:
    cycles: int
    period_s: float


@dataclass(frozen=True)
class SilentBlock:
    dur: float  # duration of the silence itself


@dataclass(frozen=True)
class AudibleBlock:
    dur: float


@dataclass(frozen=True)
class Pause:
    dur: float


@dataclass(frozen=True)
class RepeatedWord:
    dur: float    # one word's duration; rendered twice, identically
    gap_s: float  # silence between the two tokens


Segment = Union[Syllable, Prolongation, RepBurst, SilentBlock,
                AudibleBlock, Pause, RepeatedWord]


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    base_rate: float = 3.2       # syllables/second the plan was built for
    time_scale: float = 1.0
    plan: tuple[Segment, ...] = field(default_factory=tuple)

    def validate(self) -> None:
        if self.time_scale <= 0:
            raise ValueError(f"time_scale must be positive, got {self.time_scale}")
        if self.base_rate <= 0:
            raise ValueError(f"base_rate must be positive, got {self.base_rate}")
        for seg in self.plan:
            if isinstance(seg, RepBurst):
                if seg.cycles < 2 or seg.period_s <= 0:
                    raise ValueError(f"invalid RepBurst: {seg}")
            elif isinstance(seg, RepeatedWord):
                if seg.dur <= 0 or seg.gap_s <= 0:
                    raise ValueError(f"invalid RepeatedWord: {seg}")
            elif seg.dur <= 0:
                raise ValueError(f"non-positive duration in {seg}")

    def scaled(self, factor: float) -> "SynthSpec":
        return SynthSpec(seed=self.seed, base_rate=self.base_rate,
                         time_scale=self.time_scale * factor, plan=self.plan)


@dataclass(frozen=True)
class SynthResult:
    audio: AudioBuffer
    annotations: AnnotationSet
    alignment: WordAlignment


# ---------------------------------------------------------------------------
# waveform primitives
# ---------------------------------------------------------------------------

def _ramp(n: int, ramp_n: int) -> np.ndarray:
    env = np.ones(n)
    r = min(ramp_n, n // 2)
    if r > 0:
        edge = 0.5 - 0.5 * np.cos(np.pi * np.arange(r) / r)
        env[:r] = edge
        env[-r:] = edge[::-1]
    return env


def _harmonic(f0: float, n: int, *, n_harm: int = 10, tilt: float = 1.0,
              glide_hz: float = 0.0, amp: float = SYLLABLE_AMP,
              ramp_s: float = 0.015) -> np.ndarray:
    """Phase-coherent harmonic complex with an optional linear F0 glide."""
    t = np.arange(n) / SR
    dur = n / SR
    inst = f0 + glide_hz * t / max(dur, 1e-9)
    phase = 2.0 * np.pi * np.cumsum(inst) / SR
    x = np.zeros(n)
    for h in range(1, n_harm + 1):
        if f0 * h >= 7600.0:
            break
        x += (h ** -tilt) * np.sin(h * phase)
    peak = np.max(np.abs(x))
    if peak > 0:
        x *= amp / peak
    return x * _ramp(n, int(ramp_s * SR))


def _bandpass_noise(rng: np.random.Generator, n: int, lo: float, hi: float,
                    rms: float) -> np.ndarray:
    """FFT-masked white noise restricted to [lo, hi] Hz at the given RMS."""
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, 1.0 / SR)
    spec[(freqs < lo) | (freqs > hi)] = 0.0
    x = np.fft.irfft(spec, n)
    cur = np.sqrt(np.mean(x * x))
    if cur > 0:
        x *= rms / cur
    return x


def _draw_f0(rng: np.random.Generator, away_from: float | None = None,
             lo: float = 120.0, hi: float = 220.0,
             min_dist: float = 30.0) -> float:
    f0 = float(rng.uniform(lo, hi))
    if away_from is not None:
        while abs(f0 - away_from) < min_dist:
            f0 = float(rng.uniform(lo, hi))
    return f0


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

def generate(spec: SynthSpec, recording_id: str = "synth") -> SynthResult:
    """Render the plan. Deterministic per seed; annotations carry the
    exact planted intervals, scaled with time_scale like the audio."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    ts = spec.time_scale

    def nsamp(dur: float) -> int:
        return max(1, int(round(dur * ts * SR)))

    parts: list[np.ndarray] = []
    anns: list[Annotation] = []
    words: list[AlignedWord] = []
    cursor = 0  # samples
    prev_f0: float | None = None
    prev_was_prolongation = False
    word_idx = 0

    def t_of(samples: int) -> float:
        return samples / SR

    for seg in spec.plan:
        if isinstance(seg, Syllable):
            f0 = _draw_f0(rng, prev_f0, min_dist=25.0)
            glide = float(rng.uniform(0.12, 0.2)) * f0 * (1 if rng.random() < 0.5 else -1)
            tilt = float(rng.uniform(0.7, 1.3))
            n = nsamp(seg.dur)
            parts.append(_harmonic(f0, n, tilt=tilt, glide_hz=glide,
                                   amp=SYLLABLE_AMP * float(rng.uniform(0.85, 1.15))))
            words.append(AlignedWord(word=f"w{word_idx:03d}",
                                     start_s=t_of(cursor),
                                     end_s=t_of(cursor + n)))
            word_idx += 1
            prev_f0 = f0 + glide / 2
            prev_was_prolongation = False
            cursor += n

        elif isinstance(seg, Prolongation):
            f0 = _draw_f0(rng, prev_f0, min_dist=35.0)
            n = nsamp(seg.dur)
            parts.append(_harmonic(f0, n, tilt=1.0, glide_hz=0.0,
                                   amp=SYLLABLE_AMP, ramp_s=0.008))
            anns.append(Annotation(kind=EventKind.PROLONGATION,
                                   start_s=t_of(cursor), end_s=t_of(cursor + n)))
            prev_f0 = f0
            prev_was_prolongation = True
            cursor += n

        elif isinstance(seg, RepBurst):
            # crossfade between a bright and a dark harmonic layer,
            # pulsed at the repetition period. The bright carrier is
            # phase-locked to the pulse cycle (seamless: the pulse is
            # exactly 0 at cycle boundaries), so every cycle is
            # sample-identical and frame analysis sees true repetition
            # regardless of sub-hop phase.
            f0 = _draw_f0(rng)
            period_n = nsamp(seg.period_s)
            n = period_n * seg.cycles
            t = np.arange(n)
            cyc_t = (t % period_n) / SR
            bright = np.zeros(n)
            for h in range(1, 11):
                if f0 * h >= 7600.0:
                    break
                bright += (h ** -0.6) * np.sin(2.0 * np.pi * f0 * h * cyc_t)
            bright *= SYLLABLE_AMP / max(np.max(np.abs(bright)), 1e-9)
            dark = _harmonic(f0, n, n_harm=1, tilt=1.0,
                             amp=SYLLABLE_AMP * 10.0 ** (MURMUR_DB / 20.0),
                             ramp_s=0.0)
            pulse = (0.5 - 0.5 * np.cos(2.0 * np.pi * t / period_n)) ** PULSE_SHARPNESS
            x = bright * pulse + dark * (1.0 - pulse)
            parts.append(x * _ramp(n, int(0.008 * SR)))
            anns.append(Annotation(kind=EventKind.SOUND_REP,
                                   start_s=t_of(cursor), end_s=t_of(cursor + n)))
            cursor += n
            prev_f0 = f0
            prev_was_prolongation = False

        elif isinstance(seg, SilentBlock):
            gap_n = nsamp(0.010)
            frag_n = nsamp(FRAGMENT_S)
            sil_n = nsamp(seg.dur)
            parts.append(np.zeros(gap_n))
            frag = rng.standard_normal(frag_n)
            frag *= SYLLABLE_AMP / max(np.max(np.abs(frag)), 1e-9)
            frag *= _ramp(frag_n, int(0.002 * SR))
            parts.append(frag)
            parts.append(np.zeros(sil_n))
            sil_start = cursor + gap_n + frag_n
            anns.append(Annotation(kind=EventKind.BLOCK,
                                   start_s=t_of(sil_start),
                                   end_s=t_of(sil_start + sil_n)))
            cursor += gap_n + frag_n + sil_n
            prev_was_prolongation = False

        elif isinstance(seg, AudibleBlock):
            n = nsamp(seg.dur)
            rms = 10.0 ** (AUDIBLE_NOISE_RMS_DB / 20.0)
            x = _bandpass_noise(rng, n, 2500.0, 6000.0, rms)
            x *= _ramp(n, int(0.01 * SR))
            parts.append(x)
            anns.append(Annotation(kind=EventKind.BLOCK,
                                   start_s=t_of(cursor), end_s=t_of(cursor + n)))
            cursor += n
            prev_was_prolongation = False

        elif isinstance(seg, Pause):
            n = nsamp(seg.dur)
            parts.append(np.zeros(n))
            cursor += n
            prev_was_prolongation = False

        elif isinstance(seg, RepeatedWord):
            f0 = _draw_f0(rng, prev_f0, min_dist=25.0)
            glide = float(rng.uniform(0.12, 0.18)) * f0
            tilt = float(rng.uniform(0.8, 1.2))
            n = nsamp(seg.dur)
            gap_n = nsamp(seg.gap_s)
            # hop-align the second token at common time scales so both
            # renditions sample identical window phases (640 = 4 hops)
            gap_n += (-(n + gap_n)) % 640
            token = f"w{word_idx:03d}"
            word = _harmonic(f0, n, tilt=tilt, glide_hz=glide, amp=SYLLABLE_AMP)
            parts.append(word)
            parts.append(np.zeros(gap_n))
            parts.append(word.copy())
            words.append(AlignedWord(word=token, start_s=t_of(cursor),
                                     end_s=t_of(cursor + n)))
            words.append(AlignedWord(word=token,
                                     start_s=t_of(cursor + n + gap_n),
                                     end_s=t_of(cursor + 2 * n + gap_n)))
            anns.append(Annotation(kind=EventKind.WORD_REP,
                                   start_s=t_of(cursor),
                                   end_s=t_of(cursor + 2 * n + gap_n)))
            word_idx += 1
            prev_f0 = f0
            prev_was_prolongation = False
            cursor += 2 * n + gap_n

        else:  # pragma: no cover - plan is typed
            raise ValueError(f"unknown segment {seg!r}")

    if not parts:
        raise ValueError("plan too short for canonical framing")
    samples = np.concatenate(parts)
    if len(samples) < int(0.6 * SR):
        raise ValueError("plan too short for canonical framing")
    np.clip(samples, -1.0, 1.0, out=samples)
    return SynthResult(
        audio=AudioBuffer(samples=samples, sample_rate=SR),
        annotations=AnnotationSet(recording_id=recording_id, events=tuple(anns)),
        alignment=WordAlignment(words=tuple(words)),
    )


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _syllable_run(rng: np.random.Generator, rate: float, count: int,
                  syl_frac: float = 0.65, gap_frac: float = 0.28,
                  jitter: tuple[float, float] = (0.9, 1.1)) -> list[Segment]:
    syl = syl_frac / rate
    gap = gap_frac / rate
    out: list[Segment] = []
    for _ in range(count):
        out.append(Syllable(dur=syl * float(rng.uniform(*jitter))))
        out.append(Pause(dur=gap * float(rng.uniform(*jitter))))
    return out


def utterance_plan(rng: np.random.Generator, rate: float, *,
                   silent_block: bool = True,
                   extra_prolongation: bool = False,
                   with_repetition: bool = True,
                   prolongation_span: tuple[float, float] = (1.5, 2.2),
                   word_gap: tuple[float, float] = (0.22, 0.3),
                   syl_frac: float = 0.65, gap_frac: float = 0.28,
                   jitter: tuple[float, float] = (0.9, 1.1)) -> list[Segment]:
    """One utterance: syllables interleaved with one planted event of
    each kind (two prolongations when extra_prolongation).

    Repetition periods come from {0.05, 0.075} s, the periods whose
    cycles fit the half-split DTW window evenly at unit time scale.
    """
    syl = syl_frac / rate

    def run(count):
        return _syllable_run(rng, rate, count, syl_frac=syl_frac,
                             gap_frac=gap_frac, jitter=jitter)

    plan: list[Segment] = [Pause(dur=0.25)]
    plan += run(int(rng.integers(3, 5)))

    prol = float(rng.uniform(*prolongation_span)) * 1.2 / rate
    plan += [Syllable(dur=syl), Pause(dur=0.09),
             Prolongation(dur=prol),
             Pause(dur=0.09), Syllable(dur=syl), Pause(dur=gap_frac / rate)]
    plan += run(int(rng.integers(2, 4)))

    if with_repetition:
        if rng.random() < 0.5:
            plan.append(RepBurst(cycles=int(rng.integers(20, 27)), period_s=0.05))
        else:
            plan.append(RepBurst(cycles=int(rng.integers(14, 18)), period_s=0.075))
        plan.append(Pause(dur=0.25))
        plan += run(int(rng.integers(2, 4)))

    if silent_block:
        # previous run ends with a Pause; blocks need adjacent speech
        plan.append(Syllable(dur=syl))
        plan.append(SilentBlock(dur=float(rng.uniform(0.78, 0.95))))
    else:
        plan.append(Syllable(dur=syl))
        plan.append(Pause(dur=0.02))
        plan.append(AudibleBlock(dur=float(rng.uniform(0.5, 0.7))))
        plan.append(Pause(dur=0.02))
    plan += run(int(rng.integers(2, 4)))

    if extra_prolongation:
        prol2 = float(rng.uniform(*prolongation_span)) * 1.2 / rate
        plan += [Syllable(dur=syl), Pause(dur=0.09),
                 Prolongation(dur=prol2),
                 Pause(dur=0.09), Syllable(dur=syl), Pause(dur=gap_frac / rate)]
        plan += run(2)

    plan.append(RepeatedWord(dur=0.6 / rate * float(rng.uniform(0.9, 1.1)),
                             gap_s=float(rng.uniform(*word_gap))))
    plan.append(Pause(dur=0.02))
    plan += run(int(rng.integers(1, 3)))
    plan.append(Pause(dur=0.3))
    return plan


def standard_200(seed: int = 7) -> list[tuple[str, SynthSpec]]:
    """The 200-utterance acceptance corpus (>=400 events, all kinds)."""
    out = []
    for i in range(200):
        rng = np.random.default_rng(seed * 100003 + i)
        rate = float(rng.uniform(2.8, 3.4))
        plan = utterance_plan(rng, rate, silent_block=(i % 2 == 0),
                              extra_prolongation=(i % 3 == 0))
        out.append((f"std{i:03d}", SynthSpec(seed=seed * 100003 + i,
                                             base_rate=rate,
                                             plan=tuple(plan))))
    return out


def sweep_corpus(seed: int = 11, n: int = 12) -> list[tuple[str, SynthSpec]]:
    """Corpus for the speaking-rate robustness sweep.

    Prolongations, blocks, and word repetitions only: their detectors
    carry no window-commensurability artifact, so F1 differences across
    time scales isolate the duration-threshold normalization under test.
    """
    out = []
    for i in range(n):
        rng = np.random.default_rng(seed * 90001 + i)
        rate = float(rng.uniform(3.25, 3.35))
        # prolongations sized so halving them crosses under the fixed
        # 0.25 s threshold while rate normalization still catches them;
        # wider-than-standard gaps keep nuclei resolvable at half scale
        plan = utterance_plan(rng, rate, silent_block=(i % 2 == 0),
                              extra_prolongation=(i % 2 == 1),
                              with_repetition=False,
                              prolongation_span=(1.24, 1.28),
                              word_gap=(0.12, 0.13),
                              syl_frac=0.60, gap_frac=0.33,
                              jitter=(0.95, 1.05))
        out.append((f"sweep{i:02d}", SynthSpec(seed=seed * 90001 + i,
                                               base_rate=rate,
                                               plan=tuple(plan))))
    return out


def trace_spec(seed: int = 7, prolongation_s: float = 0.42,
               rate: float = 3.2) -> SynthSpec:
    """The evidence-trace utterance: one prolongation of the given
    duration inside regular syllables at the given nuclei rate.

    The prolongation sits between short pauses, which pins the detected
    segment at exactly the planted duration; the inter-syllable gap is
    calibrated so that detected nuclei per second of speech comes out at
    `rate` (the prolongation contributes one nucleus of its own).
    """
    syl = round(0.65 / rate, 2)  # 10 ms grid keeps framing alignment fixed
    pad = 0.08
    n_gapped = 20
    nuclei = n_gapped + 3  # 22 syllables + the prolongation's own nucleus
    middle = 2 * syl + 2 * pad + prolongation_s
    gap = round((nuclei / rate - n_gapped * syl - middle) / n_gapped, 2)
    plan: list[Segment] = [Pause(dur=0.3)]
    for _ in range(12):
        plan += [Syllable(dur=syl), Pause(dur=gap)]
    plan += [Syllable(dur=syl), Pause(dur=pad),
             Prolongation(dur=prolongation_s),
             Pause(dur=pad), Syllable(dur=syl), Pause(dur=gap)]
    for _ in range(8):
        plan += [Syllable(dur=syl), Pause(dur=gap)]
    plan.append(Pause(dur=0.3))
    return SynthSpec(seed=seed, base_rate=rate, plan=tuple(plan))


PRESETS = {
    "standard-200": standard_200,
    "sweep-12": sweep_corpus,
}
