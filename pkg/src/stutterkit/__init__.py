"""Interpretable rule-based speech dysfluency detection."""

from .annotations import Annotation, AnnotationSet, EventKind
from .audio import AudioBuffer, VadMask, load_audio, save_audio
from .cascade import EventReport, resolve
from .config import RuleConfig
from .detectors import DysfluencyEvent, replay_event
from .evaluate import EvalReport, rate_sweep, score
from .features import FeatureSet, FrameSeries, extract_features
from .pipeline import detect_events, detect_file
from .synthgen import SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "Annotation", "AnnotationSet", "AudioBuffer", "DysfluencyEvent",
    "EvalReport", "EventKind", "EventReport", "FeatureSet", "FrameSeries",
    "RuleConfig", "SynthSpec", "VadMask", "detect_events", "detect_file",
    "extract_features", "generate", "load_audio", "rate_sweep",
    "replay_event", "resolve", "save_audio", "score",
]
