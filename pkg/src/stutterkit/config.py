"""Every tunable of the rule cascade, serializable as flat JSON.

Clinicians patch these per patient; the service audits each change.
Field names are the wire schema shared by the CLI, service, and UI.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .errors import ConfigError

ACF_FEATURES = ("energy", "flux", "centroid")


@dataclass(frozen=True)
class RuleConfig:
    # prolongation rule
    alpha: float = 1.2                      # syllable periods for T_min
    theta_sim: float = 0.92                 # frame-pair MFCC correlation
    theta_f0: float = 15.0                  # Hz; inf disables the F0 gate
    theta_hnr: float = 10.0                 # dB; -inf disables the HNR gate
    rate_normalization_enabled: bool = True
    fixed_t_min_s: float = 0.25             # used only when normalization is off

    # sound repetition rule
    dtw_window_frames: int = 30
    theta_dtw: float = 0.3                  # normalized DTW cost
    theta_R: float = 0.5                    # repetition score gate
    acf_weights: dict[str, float] = field(
        default_factory=lambda: {k: 1.0 / 3.0 for k in ACF_FEATURES})
    acf_lag_range_s: tuple[float, float] = (0.05, 0.4)

    # word repetition rule
    theta_word_dtw: float = 0.5
    word_window_s: float = 1.5

    # block rules
    block_silence_s: float = 0.35
    block_preflux_s: float = 0.10
    block_flux_percentile: float = 90.0
    audible_block_rms_db: float = -30.0     # relative to speech median RMS
    audible_block_centroid_hz: float = 2000.0
    audible_block_min_s: float = 0.20

    # cascade
    min_separation_s: float = 0.10
    overlap_fraction_gate: float = 0.30

    # speaking-rate estimation (syllable nuclei)
    rate_band_low_hz: float = 300.0
    rate_band_high_hz: float = 2500.0
    rate_smooth_s: float = 0.05
    rate_peak_prominence_db: float = 3.0
    rate_peak_separation_s: float = 0.12

    def validate(self) -> None:
        """Raise ConfigError on any invariant violation."""
        if not 0.0 < self.theta_sim < 1.0:
            raise ConfigError(f"theta_sim must be in (0, 1), got {self.theta_sim}")
        positive = (
            "alpha", "theta_f0", "fixed_t_min_s", "theta_dtw", "theta_R",
            "theta_word_dtw", "word_window_s", "block_silence_s",
            "block_preflux_s", "audible_block_min_s", "min_separation_s",
            "rate_band_low_hz", "rate_band_high_hz", "rate_smooth_s",
            "rate_peak_prominence_db", "rate_peak_separation_s",
        )
        for name in positive:
            v = getattr(self, name)
            if not v > 0:
                raise ConfigError(f"{name} must be strictly positive, got {v}")
        if math.isfinite(self.theta_hnr) and not self.theta_hnr > 0:
            raise ConfigError(f"theta_hnr must be positive (or -inf to disable), "
                              f"got {self.theta_hnr}")
        if self.dtw_window_frames < 2 or self.dtw_window_frames % 2 != 0:
            raise ConfigError(f"dtw_window_frames must be a positive even count, "
                              f"got {self.dtw_window_frames}")
        if set(self.acf_weights) != set(ACF_FEATURES):
            raise ConfigError(f"acf_weights must have keys {ACF_FEATURES}")
        w = list(self.acf_weights.values())
        if min(w) < 0 or abs(sum(w) - 1.0) > 1e-9:
            raise ConfigError("acf_weights must be non-negative and sum to 1")
        lo, hi = self.acf_lag_range_s
        if not 0 < lo < hi:
            raise ConfigError(f"acf_lag_range_s must be increasing and positive, "
                              f"got {self.acf_lag_range_s}")
        if not 0.0 < self.overlap_fraction_gate <= 1.0:
            raise ConfigError(f"overlap_fraction_gate must be in (0, 1], "
                              f"got {self.overlap_fraction_gate}")
        if not 0.0 < self.block_flux_percentile < 100.0:
            raise ConfigError(f"block_flux_percentile must be in (0, 100), "
                              f"got {self.block_flux_percentile}")
        if not self.rate_band_low_hz < self.rate_band_high_hz:
            raise ConfigError("rate_band_low_hz must be below rate_band_high_hz")

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RuleConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(data)
        if "acf_lag_range_s" in kwargs:
            kwargs["acf_lag_range_s"] = tuple(kwargs["acf_lag_range_s"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RuleConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object of field: value")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "RuleConfig":
        return cls.from_json(Path(path).read_text())

    def patched(self, patch: dict[str, Any]) -> "RuleConfig":
        """Return a validated copy with `patch` applied, atomically."""
        known = {f.name for f in fields(self)}
        unknown = set(patch) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(patch)
        if "acf_lag_range_s" in kwargs:
            kwargs["acf_lag_range_s"] = tuple(kwargs["acf_lag_range_s"])
        cfg = replace(self, **kwargs)
        cfg.validate()
        return cfg
