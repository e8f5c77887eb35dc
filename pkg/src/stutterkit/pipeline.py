"""End-to-end detection: preprocess, extract features, run the four
detectors, resolve conflicts."""
from __future__ import annotations

from pathlib import Path

from .align import WordAlignment, load_alignment
from .audio import (AudioBuffer, CANONICAL_RATE, TARGET_RMS_DB, VadMask,
                    compute_vad, load_audio, normalize_loudness, resample)
from .cascade import EventReport, resolve
from .config import RuleConfig
from .detectors import (detect_blocks, detect_prolongations,
                        detect_sound_repetitions, detect_word_repetitions)
from .errors import InsufficientSpeechError
from .features import FeatureSet, extract_features


def preprocess(buf: AudioBuffer) -> AudioBuffer:
    """resample -> loudness-normalize; spectral front-ends apply the
    0.97 pre-emphasis internally so amplitude-domain rules measure the
    natural signal."""
    buf = resample(buf, CANONICAL_RATE)
    return normalize_loudness(buf, TARGET_RMS_DB)


def detect_events(buf: AudioBuffer, cfg: RuleConfig | None = None, *,
                  alignment: WordAlignment | None = None,
                  recording_id: str = "recording") -> EventReport:
    """Full pipeline over an in-memory buffer."""
    cfg = cfg or RuleConfig()
    cfg.validate()
    prepped = preprocess(buf)
    vad = compute_vad(prepped, cfg)
    try:
        fs = extract_features(prepped, vad, cfg)
    except InsufficientSpeechError:
        # speech-free recording: nothing to detect, not an error
        return resolve([], cfg, recording_id=recording_id, speaking_rate=0.0)
    candidates = (
        detect_prolongations(fs, cfg)
        + detect_sound_repetitions(fs, cfg)
        + detect_word_repetitions(fs, alignment, cfg)
        + detect_blocks(fs, vad, cfg)
    )
    return resolve(candidates, cfg, recording_id=recording_id,
                   speaking_rate=fs.speaking_rate)


def detect_file(audio_path: str | Path, cfg: RuleConfig | None = None,
                alignment_path: str | Path | None = None) -> EventReport:
    """Full pipeline over files; recording_id is the audio file stem."""
    audio_path = Path(audio_path)
    buf = load_audio(audio_path)
    alignment = load_alignment(alignment_path) if alignment_path else None
    return detect_events(buf, cfg, alignment=alignment,
                         recording_id=audio_path.stem)


def analysis_state(buf: AudioBuffer, cfg: RuleConfig | None = None
                   ) -> tuple[AudioBuffer, VadMask, FeatureSet]:
    """Preprocessed buffer + VAD + features, for callers that need the
    intermediate products (calibration, debugging dumps)."""
    cfg = cfg or RuleConfig()
    prepped = preprocess(buf)
    vad = compute_vad(prepped, cfg)
    fs = extract_features(prepped, vad, cfg)
    return prepped, vad, fs
