from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import silence
from stutterkit.audio import save_audio
from stutterkit.cli import main
from stutterkit.synthgen import generate, trace_spec


@pytest.fixture(scope="module")
def trace_wav(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    res = generate(trace_spec(), recording_id="trace")
    wav = d / "trace.wav"
    save_audio(res.audio, wav)
    from stutterkit.align import write_alignment_csv
    words = d / "trace.words.csv"
    write_alignment_csv(res.alignment, words)
    return wav, words, res


def run_cli(args):
    proc = subprocess.run([sys.executable, "-m", "stutterkit.cli", *args],
                          capture_output=True, text=True)
    return proc


class TestDetect:
    def test_round_trip_prolongation_with_evidence(self, trace_wav, capsys):
        wav, words, _ = trace_wav
        rc = main(["detect", str(wav), "--alignment", str(words)])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        prols = [e for e in data["events"] if e["kind"] == "Prolongation"]
        assert len(prols) == 1
        assert "mean_sim" in prols[0]["evidence"]
        assert "normalized_duration" in prols[0]["evidence"]

    def test_silent_wav_empty_events_exit_zero(self, tmp_path, capsys):
        wav = tmp_path / "sil.wav"
        save_audio(silence(2.0), wav)
        rc = main(["detect", str(wav)])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        assert data["events"] == []

    def test_missing_file_exit_3_no_partial_output(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        rc = main(["detect", str(tmp_path / "nope.wav"), "--output", str(out)])
        assert rc == 3
        assert not out.exists()

    def test_byte_identical_reruns(self, trace_wav, tmp_path):
        wav, words, _ = trace_wav
        outs = []
        for i in range(2):
            p = tmp_path / f"r{i}.json"
            assert main(["detect", str(wav), "--alignment", str(words),
                         "--output", str(p)]) == 0
            outs.append(p.read_bytes())
        assert outs[0] == outs[1]

    def test_invalid_config_exit_4(self, trace_wav, tmp_path, capsys):
        wav, _, _ = trace_wav
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"theta_sim": 1.5}))
        rc = main(["detect", str(wav), "--config", str(cfg)])
        assert rc == 4

    def test_config_override_applies(self, trace_wav, tmp_path, capsys):
        wav, _, _ = trace_wav
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"alpha": 5.0}))  # T_min too long for 420 ms
        rc = main(["detect", str(wav), "--config", str(cfg)])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        assert data["config"]["alpha"] == 5.0
        assert not [e for e in data["events"] if e["kind"] == "Prolongation"]

    def test_text_format(self, trace_wav, capsys):
        wav, _, _ = trace_wav
        assert main(["detect", str(wav), "--format", "text"]) == 0
        out = capsys.readouterr().out
        assert "speaking_rate" in out


class TestCalibrate:
    def test_trace_baseline(self, trace_wav, capsys):
        wav, _, _ = trace_wav
        rc = main(["calibrate", str(wav)])
        assert rc == 0
        frag = json.loads(capsys.readouterr().out)
        assert abs(frag["speaking_rate"] - 3.2) <= 0.5
        assert frag["t_min_preview_s"] == pytest.approx(
            1.2 / frag["speaking_rate"], abs=1e-3)

    def test_silence_exit_5(self, tmp_path):
        wav = tmp_path / "sil.wav"
        save_audio(silence(2.0), wav)
        assert main(["calibrate", str(wav)]) == 5


class TestEval:
    def _write(self, path, rows):
        path.write_text("recording_id,kind,start_s,end_s\n"
                        + "".join(f"{r},{k},{s},{e}\n" for r, k, s, e in rows))

    def test_identical_files_perfect(self, tmp_path, capsys):
        p = tmp_path / "a.csv"
        self._write(p, [("r1", "Block", 1.0, 1.5), ("r1", "WordRep", 2.0, 2.4)])
        rc = main(["eval", str(p), str(p), "--format", "json"])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        assert data["overall"]["f1"] == 1.0

    def test_disjoint_files_zero(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        self._write(a, [("r1", "Block", 1.0, 1.5)])
        self._write(b, [("r1", "Block", 5.0, 5.5)])
        rc = main(["eval", str(a), str(b), "--format", "json"])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        assert data["overall"]["f1"] == 0.0

    def test_iou_flag_forwarded(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        self._write(a, [("r1", "Prolongation", 1.0, 1.5)])
        self._write(b, [("r1", "Prolongation", 1.05, 1.45)])
        rc = main(["eval", str(a), str(b), "--iou", "0.5", "--format", "json"])
        data = json.loads(capsys.readouterr().out)
        assert data["overall"]["tp"] == 1
        rc = main(["eval", str(a), str(b), "--iou", "0.9", "--format", "json"])
        data = json.loads(capsys.readouterr().out)
        assert data["overall"]["tp"] == 0

    def test_parse_failure_exit_4(self, tmp_path):
        a = tmp_path / "bad.csv"
        a.write_text("recording_id,kind,start_s,end_s\nr1,Nope,0,1\n")
        assert main(["eval", str(a), str(a)]) == 4


class TestSynth:
    def test_spec_json_deterministic(self, tmp_path):
        spec = {"seed": 3, "base_rate": 3.2, "plan": [
            {"type": "Pause", "dur": 0.3},
            {"type": "Syllable", "dur": 0.2},
            {"type": "Pause", "dur": 0.1},
            {"type": "Prolongation", "dur": 0.5},
            {"type": "Pause", "dur": 0.1},
            {"type": "Syllable", "dur": 0.2},
            {"type": "Pause", "dur": 0.3}]}
        sp = tmp_path / "spec.json"
        sp.write_text(json.dumps(spec))
        outs = []
        for sub in ("o1", "o2"):
            rc = main(["synth", "--spec", str(sp), "--outdir",
                       str(tmp_path / sub)])
            assert rc == 0
            outs.append((tmp_path / sub / "spec.wav").read_bytes())
        assert outs[0] == outs[1]

    def test_time_scale_doubles_annotations(self, tmp_path):
        spec = {"seed": 3, "plan": [
            {"type": "Pause", "dur": 0.3},
            {"type": "Prolongation", "dur": 0.5},
            {"type": "Pause", "dur": 0.3}]}
        sp = tmp_path / "spec.json"
        sp.write_text(json.dumps(spec))
        assert main(["synth", "--spec", str(sp), "--outdir",
                     str(tmp_path / "x1")]) == 0
        assert main(["synth", "--spec", str(sp), "--time-scale", "2.0",
                     "--outdir", str(tmp_path / "x2")]) == 0
        from stutterkit.annotations import load_annotations
        a1 = load_annotations(tmp_path / "x1" / "annotations.csv")["spec"]
        a2 = load_annotations(tmp_path / "x2" / "annotations.csv")["spec"]
        assert a2.events[0].duration_s == pytest.approx(
            2 * a1.events[0].duration_s, abs=0.01)

    def test_negative_duration_rejected(self, tmp_path):
        sp = tmp_path / "spec.json"
        sp.write_text(json.dumps({"plan": [{"type": "Pause", "dur": -1}]}))
        assert main(["synth", "--spec", str(sp),
                     "--outdir", str(tmp_path / "o")]) == 4


class TestBench:
    def test_short_file_reports_finite_ratio(self, trace_wav, capsys):
        wav, _, _ = trace_wav
        rc = main(["bench", str(wav)])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        assert data["rt_ratio"] is not None and data["rt_ratio"] > 0
        assert data["peak_rss_mb"] > 0

    def test_empty_after_vad_still_reports(self, tmp_path, capsys):
        wav = tmp_path / "sil.wav"
        save_audio(silence(3.0), wav)
        rc = main(["bench", str(wav)])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        assert data["audio_s"] == pytest.approx(3.0)
        assert np.isfinite(data["rt_ratio"])


class TestSubprocessEntry:
    def test_usage_error_exit_2(self):
        proc = run_cli(["definitely-not-a-command"])
        assert proc.returncode == 2


class TestConfigEnvVar:
    def test_env_var_supplies_default_config(self, trace_wav, tmp_path,
                                              capsys, monkeypatch):
        wav, _, _ = trace_wav
        cfg = tmp_path / "env.json"
        cfg.write_text(json.dumps({"alpha": 5.0}))
        monkeypatch.setenv("STUTTERKIT_CONFIG", str(cfg))
        assert main(["detect", str(wav)]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["config"]["alpha"] == 5.0
