from __future__ import annotations

import numpy as np
import pytest

from conftest import silence, sine
from oracles import naive_autocorr_peak
from stutterkit.align import AlignedWord, WordAlignment
from stutterkit.annotations import EventKind
from stutterkit.config import RuleConfig
from stutterkit.detectors import (detect_blocks, detect_prolongations,
                                  detect_sound_repetitions,
                                  detect_word_repetitions, repetition_score,
                                  replay_event)
from stutterkit.errors import AlignmentError
from stutterkit.pipeline import analysis_state, detect_events
from stutterkit.synthgen import (AudibleBlock, Pause, Prolongation, RepBurst,
                                 RepeatedWord, SilentBlock, Syllable,
                                 SynthSpec, generate, trace_spec)

CFG = RuleConfig()


def _features(audio, cfg=CFG):
    _, vad, fs = analysis_state(audio, cfg)
    return vad, fs


def _spec(plan, seed=5, rate=3.2):
    return SynthSpec(seed=seed, base_rate=rate, plan=tuple(plan))


def _syllables(k, rate=3.2):
    return [Syllable(dur=0.65 / rate), Pause(dur=0.28 / rate)] * k


class TestProlongations:
    def test_paper_trace_420ms_at_3p2(self):
        res = generate(trace_spec(), recording_id="t")
        report = detect_events(res.audio, CFG, alignment=res.alignment)
        prols = [e for e in report.events if e.kind == EventKind.PROLONGATION]
        assert len(prols) == 1
        ev = prols[0].evidence
        assert ev["normalized_duration"] > CFG.alpha
        assert abs(ev["normalized_duration"] - 1.34) <= 0.05

    def test_short_segment_below_t_min_rejected(self):
        # 300 ms at rate 3.2: 0.300 < T_min = 0.375
        plan = ([Pause(dur=0.3)] + _syllables(10)
                + [Syllable(dur=0.203), Pause(dur=0.09),
                   Prolongation(dur=0.30),
                   Pause(dur=0.09), Syllable(dur=0.203)]
                + _syllables(10) + [Pause(dur=0.3)])
        res = generate(_spec(plan), recording_id="p")
        report = detect_events(res.audio, CFG)
        assert not [e for e in report.events if e.kind == EventKind.PROLONGATION]

    def test_time_stretched_still_detected_when_normalized(self):
        spec = trace_spec()
        res = generate(spec.scaled(2.0), recording_id="s")
        report = detect_events(res.audio, CFG)
        prols = [e for e in report.events if e.kind == EventKind.PROLONGATION]
        assert len(prols) == 1
        # 0.84 s > T_min = 1.2/1.6 = 0.75
        assert prols[0].evidence["duration_s"] > prols[0].evidence["t_min_s"]

    def test_white_noise_never_extends(self):
        rng = np.random.default_rng(9)
        buf_samples = np.concatenate([
            np.zeros(4000), rng.normal(0, 0.2, 16000).clip(-1, 1), np.zeros(4000)])
        from stutterkit.audio import AudioBuffer
        vad, fs = _features(AudioBuffer(samples=buf_samples, sample_rate=16000))
        assert detect_prolongations(fs, CFG) == []

    def test_f0_hnr_gates_disabled_reduces_to_similarity_rule(self):
        cfg = CFG.patched({"theta_f0": float("inf"),
                           "theta_hnr": float("-inf")})
        res = generate(trace_spec(), recording_id="t")
        report = detect_events(res.audio, cfg)
        assert any(e.kind == EventKind.PROLONGATION for e in report.events)


class TestSoundRepetitions:
    def test_burst_train_detected_with_cycles(self):
        plan = ([Pause(dur=0.3)] + _syllables(6)
                + [RepBurst(cycles=8, period_s=0.125), Pause(dur=0.25)]
                + _syllables(6) + [Pause(dur=0.3)])
        res = generate(_spec(plan), recording_id="r")
        vad, fs = _features(res.audio)
        events = detect_sound_repetitions(fs, CFG)
        assert len(events) >= 1
        assert all(e.evidence["cycle_count"] >= 2 for e in events)
        # the window lying fully inside the burst train sees the 125 ms cycle
        best = max(events, key=lambda e: e.evidence["rep_score"])
        assert 0.115 <= best.evidence["acf_lag_s"] <= 0.135

    def test_identical_structured_halves_fire(self):
        # one window whose halves are the same burst pattern
        plan = ([Pause(dur=0.3)] + _syllables(6)
                + [RepBurst(cycles=10, period_s=0.075), Pause(dur=0.25)]
                + _syllables(6) + [Pause(dur=0.3)])
        res = generate(_spec(plan), recording_id="r")
        vad, fs = _features(res.audio)
        events = detect_sound_repetitions(fs, CFG)
        assert len(events) >= 1
        assert all(e.evidence["dtw_cost"] < CFG.theta_dtw for e in events)

    def test_steady_silence_no_event(self):
        from stutterkit.audio import AudioBuffer
        buf = AudioBuffer(
            samples=np.concatenate([sine(200, 0.5, amp=0.3).samples,
                                    silence(3.0).samples,
                                    sine(260, 0.5, amp=0.3).samples]),
            sample_rate=16000)
        vad, fs = _features(buf)
        assert detect_sound_repetitions(fs, CFG) == []

    def test_prolongation_not_mistaken_for_repetition(self):
        res = generate(trace_spec(), recording_id="t")
        vad, fs = _features(res.audio)
        assert detect_sound_repetitions(fs, CFG) == []


class TestRepetitionScore:
    def test_periodic_modulation_high_score_and_lag(self):
        plan = ([Pause(dur=0.3)] + _syllables(4)
                + [RepBurst(cycles=8, period_s=0.125), Pause(dur=0.25)]
                + _syllables(4) + [Pause(dur=0.3)])
        res = generate(_spec(plan), recording_id="r")
        vad, fs = _features(res.audio)
        rep = [a for a in res.annotations.events if a.kind == EventKind.SOUND_REP][0]
        center = (rep.start_s + rep.end_s) / 2
        score, lag = repetition_score(fs, center, CFG)
        assert score > CFG.theta_R
        assert 0.115 <= lag <= 0.135
        # oracle cross-check: its best peak sits on a multiple of the
        # period the detector found
        lo = fs.energy.frame_at(center) - 25
        track = fs.energy.values[lo:lo + 50]
        r, l = naive_autocorr_peak(track, 5, 40)
        assert r > 0.5
        period_frames = lag / 0.01
        ratio = l / period_frames
        assert abs(ratio - round(ratio)) * period_frames <= 2

    def test_white_noise_low_score(self):
        rng = np.random.default_rng(21)
        from stutterkit.audio import AudioBuffer
        x = np.concatenate([np.zeros(4000),
                            rng.normal(0, 0.2, 32000).clip(-1, 1),
                            np.zeros(4000)])
        vad, fs = _features(AudioBuffer(samples=x, sample_rate=16000))
        score, _ = repetition_score(fs, 1.3, CFG)
        assert score < 0.3

    def test_constant_feature_contributes_zero(self):
        cfg = CFG.patched({"acf_weights": {"energy": 0.0, "flux": 0.0,
                                           "centroid": 1.0}})
        vad, fs = _features(sine(250, 2.0, amp=0.3))
        score, _ = repetition_score(fs, 1.0, cfg)
        assert score == 0.0

    def test_window_outside_recording_rejected(self):
        vad, fs = _features(sine(250, 1.0, amp=0.3))
        with pytest.raises(ValueError):
            repetition_score(fs, 5.0, CFG)


class TestWordRepetitions:
    def _fs_for(self, plan, seed=5):
        res = generate(_spec(plan, seed=seed), recording_id="w")
        vad, fs = _features(res.audio)
        return res, fs

    def test_identical_intervals_fire_with_zero_cost(self):
        plan = ([Pause(dur=0.3)] + _syllables(6)
                + [RepeatedWord(dur=0.2, gap_s=0.25), Pause(dur=0.02)]
                + _syllables(6) + [Pause(dur=0.3)])
        res, fs = self._fs_for(plan)
        events = detect_word_repetitions(fs, res.alignment, CFG)
        assert len(events) == 1
        assert events[0].evidence["dtw_cost"] < 0.05
        pair = [w for w in res.alignment.words
                if w.word == events[0].evidence["matched_word"]]
        assert events[0].start_s == pytest.approx(pair[0].start_s)
        assert events[0].end_s == pytest.approx(pair[1].end_s)

    def test_distant_tokens_outside_window(self):
        words = WordAlignment(words=(
            AlignedWord(word="the", start_s=1.0, end_s=1.2),
            AlignedWord(word="the", start_s=3.0, end_s=3.2)))
        vad, fs = _features(sine(200, 4.0, amp=0.3))
        assert detect_word_repetitions(fs, words, CFG) == []

    def test_equal_text_dissimilar_acoustics_rejected(self):
        rng = np.random.default_rng(4)
        from stutterkit.audio import AudioBuffer
        tone = sine(200, 0.3, amp=0.3).samples
        noise = rng.normal(0, 0.2, len(tone)).clip(-1, 1)
        x = np.concatenate([np.zeros(4000), tone, np.zeros(3200), noise,
                            np.zeros(4000)])
        buf = AudioBuffer(samples=x, sample_rate=16000)
        vad, fs = _features(buf)
        t0 = 0.25
        words = WordAlignment(words=(
            AlignedWord(word="ba", start_s=t0, end_s=t0 + 0.3),
            AlignedWord(word="ba", start_s=t0 + 0.5, end_s=t0 + 0.8)))
        events = detect_word_repetitions(fs, words, CFG)
        assert events == []

    def test_no_alignment_skips_quietly(self):
        vad, fs = _features(sine(220, 1.0, amp=0.3))
        assert detect_word_repetitions(fs, None, CFG) == []

    def test_malformed_alignment_rejected(self):
        words = WordAlignment(words=(
            AlignedWord(word="a", start_s=1.0, end_s=0.5),))
        vad, fs = _features(sine(220, 1.0, amp=0.3))
        with pytest.raises(AlignmentError):
            detect_word_repetitions(fs, words, CFG)


class TestBlocks:
    def _run(self, block_dur, seed=5):
        plan = ([Pause(dur=0.3)] + _syllables(6)
                + [Syllable(dur=0.2), SilentBlock(dur=block_dur)]
                + _syllables(6) + [Pause(dur=0.3)])
        res = generate(_spec(plan, seed=seed), recording_id="b")
        vad, fs = _features(res.audio)
        return res, detect_blocks(fs, vad, CFG)

    def test_400ms_silence_after_cutoff_fires(self):
        res, events = self._run(0.40)
        silent = [e for e in events if e.evidence.get("variant") == "silent"]
        assert len(silent) == 1
        assert silent[0].evidence["silence_s"] > CFG.block_silence_s
        assert silent[0].evidence["preceding_flux"] > silent[0].evidence["flux_threshold"]

    def test_300ms_silence_below_threshold(self):
        res, events = self._run(0.30)
        assert [e for e in events if e.evidence.get("variant") == "silent"] == []

    def test_audible_block_detected(self):
        plan = ([Pause(dur=0.3)] + _syllables(6)
                + [Syllable(dur=0.2), Pause(dur=0.02),
                   AudibleBlock(dur=0.25), Pause(dur=0.02)]
                + _syllables(6) + [Pause(dur=0.3)])
        res = generate(_spec(plan), recording_id="a")
        vad, fs = _features(res.audio)
        events = detect_blocks(fs, vad, CFG)
        audible = [e for e in events if e.evidence.get("variant") == "audible"]
        assert len(audible) == 1
        ev = audible[0].evidence
        assert ev["rms_rel_db"] <= CFG.audible_block_rms_db
        assert ev["centroid_hz"] >= CFG.audible_block_centroid_hz

    def test_leading_silence_never_a_block(self):
        plan = [Pause(dur=1.0)] + _syllables(8) + [Pause(dur=1.0)]
        res = generate(_spec(plan), recording_id="l")
        vad, fs = _features(res.audio)
        events = detect_blocks(fs, vad, CFG)
        assert all(e.start_s > 0.9 for e in events)
        silent = [e for e in events if e.evidence.get("variant") == "silent"]
        assert silent == []


class TestDeterminismAndReplay:
    def test_identical_inputs_identical_events(self):
        res = generate(trace_spec(), recording_id="d")
        r1 = detect_events(res.audio, CFG, alignment=res.alignment)
        r2 = detect_events(res.audio, CFG, alignment=res.alignment)
        assert [e.to_dict() for e in r1.events] == [e.to_dict() for e in r2.events]

    def test_every_event_replays(self, tmp_path):
        plan = ([Pause(dur=0.3)] + _syllables(5)
                + [Syllable(dur=0.2), Pause(dur=0.09),
                   Prolongation(dur=0.55), Pause(dur=0.09), Syllable(dur=0.2)]
                + _syllables(3)
                + [RepBurst(cycles=16, period_s=0.05), Pause(dur=0.25)]
                + _syllables(3)
                + [Syllable(dur=0.2), SilentBlock(dur=0.5)]
                + _syllables(3)
                + [RepeatedWord(dur=0.2, gap_s=0.25), Pause(dur=0.02)]
                + _syllables(2) + [Pause(dur=0.3)])
        res = generate(_spec(plan), recording_id="all")
        report = detect_events(res.audio, CFG, alignment=res.alignment)
        kinds = {e.kind for e in report.events}
        assert len(kinds) == 4
        assert all(replay_event(e, report.config_snapshot) for e in report.events)

    def test_monotonicity_theta_sim(self):
        res = generate(trace_spec(), recording_id="m")
        vad, fs = _features(res.audio)
        frames_at = {}
        for theta in (0.90, 0.95, 0.99):
            cfg = CFG.patched({"theta_sim": theta})
            events = detect_prolongations(fs, cfg)
            frames_at[theta] = sum(e.duration_s for e in events)
        assert frames_at[0.90] >= frames_at[0.95] >= frames_at[0.99]
