"""Command-line entry point.

Exit codes: 0 ok, 2 usage (argparse), 3 I/O, 4 parse/format, 5
insufficient speech.
"""
from __future__ import annotations

import argparse
import json
import os
import resource
import sys
import time
from pathlib import Path

from .align import load_alignment
from .annotations import load_annotations, write_annotations
from .audio import load_audio, save_audio
from .config import RuleConfig
from .detectors import t_min_s
from .errors import (AnnotationParseError, AudioFormatError, ConfigError,
                     InsufficientSpeechError, StutterkitError)
from .evaluate import rate_sweep, score, write_sweep_csv
from .pipeline import analysis_state, detect_events, detect_file
from .synthgen import PRESETS, SynthSpec, generate, trace_spec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_NO_SPEECH = 5

CONFIG_ENV = "STUTTERKIT_CONFIG"


def _load_config(path: str | None) -> RuleConfig:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return RuleConfig()
    return RuleConfig.load(path)


def _emit(data: dict, fmt: str, out) -> None:
    if fmt == "json":
        json.dump(data, out, indent=2, sort_keys=True)
        out.write("\n")
    else:
        _emit_text(data, out)


def _emit_text(data: dict, out) -> None:
    events = data.get("events", [])
    out.write(f"recording: {data.get('recording_id', '?')}\n")
    out.write(f"speaking_rate: {data.get('speaking_rate', 0):.2f} syll/s\n")
    counts = data.get("counts", {})
    out.write("counts: " + "  ".join(f"{k}={v}" for k, v in counts.items()) + "\n")
    if events:
        out.write(f"{'kind':<14}{'start':>8}{'end':>8}{'conf':>7}  evidence\n")
    for e in events:
        ev = "  ".join(f"{k}={v}" for k, v in e["evidence"].items())
        out.write(f"{e['kind']:<14}{e['start_s']:>8.3f}{e['end_s']:>8.3f}"
                  f"{e['confidence']:>7.2f}  {ev}\n")


def cmd_detect(args) -> int:
    cfg = _load_config(args.config)
    report = detect_file(args.audio, cfg, args.alignment)
    data = report.to_dict()
    if args.output:
        with open(args.output, "w") as fh:
            _emit(data, args.format, fh)
    else:
        _emit(data, args.format, sys.stdout)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _load_config(args.config)
    buf = load_audio(args.audio)
    _, _, fs = analysis_state(buf, cfg)
    fragment = {
        "speaking_rate": round(fs.speaking_rate, 4),
        "t_min_preview_s": round(t_min_s(cfg, fs.speaking_rate), 4),
    }
    json.dump(fragment, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_eval(args) -> int:
    refs = load_annotations(args.ref)
    hyps = load_annotations(args.hyp)
    ids = sorted(set(refs) | set(hyps))
    from .annotations import AnnotationSet
    from .evaluate import score_corpus

    pairs = []
    for rec in ids:
        hyp = hyps.get(rec, AnnotationSet(recording_id=rec, events=()))
        ref = refs.get(rec, AnnotationSet(recording_id=rec, events=()))
        pairs.append((hyp, ref))
    report = score_corpus(pairs, iou_min=args.iou)
    if args.format == "json":
        json.dump(report.to_dict(), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        sys.stdout.write(report.text_table() + "\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.preset:
        if args.preset not in PRESETS:
            raise AnnotationParseError(
                f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
        corpus = PRESETS[args.preset](args.seed)
    elif args.spec:
        spec_data = json.loads(Path(args.spec).read_text())
        corpus = [(Path(args.spec).stem, _spec_from_dict(spec_data, args.seed))]
    else:
        corpus = [("trace", trace_spec(seed=args.seed))]
    annotations = []
    for rec_id, spec in corpus:
        res = generate(spec.scaled(args.time_scale), recording_id=rec_id)
        save_audio(res.audio, outdir / f"{rec_id}.wav")
        annotations.append(res.annotations)
        if len(res.alignment):
            from .align import write_alignment_csv
            write_alignment_csv(res.alignment, outdir / f"{rec_id}.words.csv")
    write_annotations(annotations, outdir / "annotations.csv")
    sys.stdout.write(f"wrote {len(corpus)} utterance(s) to {outdir}\n")
    return EXIT_OK


def _spec_from_dict(data: dict, seed: int) -> SynthSpec:
    from . import synthgen as sg

    seg_types = {"Syllable": sg.Syllable, "Prolongation": sg.Prolongation,
                 "RepBurst": sg.RepBurst, "SilentBlock": sg.SilentBlock,
                 "AudibleBlock": sg.AudibleBlock, "Pause": sg.Pause,
                 "RepeatedWord": sg.RepeatedWord}
    try:
        plan = tuple(seg_types[d.pop("type")](**d) for d in data["plan"])
        spec = SynthSpec(seed=data.get("seed", seed),
                         base_rate=data.get("base_rate", 3.2),
                         time_scale=data.get("time_scale", 1.0),
                         plan=plan)
        spec.validate()
    except (KeyError, TypeError, ValueError) as exc:
        raise AnnotationParseError(f"invalid synth spec: {exc}") from exc
    return spec


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    from .synthgen import sweep_corpus

    rows = rate_sweep(sweep_corpus(args.seed), args.scales, cfg)
    if args.output:
        write_sweep_csv(rows, args.output)
    sys.stdout.write(f"{'scale':>7} {'F1(normalized)':>15} {'F1(fixed)':>10}\n")
    for r in rows:
        sys.stdout.write(f"{r.scale:>7.2f} {r.f1_normalized:>15.3f} "
                         f"{r.f1_fixed:>10.3f}\n")
    return EXIT_OK


def _peak_rss_mb() -> float:
    # VmHWM resets on exec; getrusage's ru_maxrss is inherited from the
    # parent across fork+exec and would overstate a spawned benchmark
    try:
        with open("/proc/self/status") as fh:
            for line in fh:
                if line.startswith("VmHWM:"):
                    return int(line.split()[1]) / 1024.0
    except OSError:
        pass
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    buf = load_audio(args.audio)
    duration = buf.duration_s
    t0 = time.perf_counter()
    try:
        report = detect_events(buf, cfg, recording_id=Path(args.audio).stem)
        n_events = len(report.events)
    except InsufficientSpeechError:
        n_events = -1  # empty-after-VAD: still report timing over raw duration
    wall = time.perf_counter() - t0
    data = {
        "audio_s": round(duration, 3),
        "wall_s": round(wall, 3),
        "rt_ratio": round(wall / duration, 4) if duration > 0 else None,
        "peak_rss_mb": round(_peak_rss_mb(), 1),
        "events": n_events,
    }
    json.dump(data, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir, static_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stutterkit",
        description="Rule-based speech dysfluency detection with auditable "
                    "acoustic evidence.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="run the full detection pipeline")
    d.add_argument("audio")
    d.add_argument("--alignment", help="word alignment (CSV or TextGrid)")
    d.add_argument("--config")
    d.add_argument("--format", choices=("json", "text"), default="json")
    d.add_argument("--output", help="write report here instead of stdout")
    d.set_defaults(func=cmd_detect)

    c = sub.add_parser("calibrate", help="estimate a patient's speaking rate")
    c.add_argument("audio")
    c.add_argument("--config")
    c.set_defaults(func=cmd_calibrate)

    e = sub.add_parser("eval", help="score hypothesis vs reference annotations")
    e.add_argument("ref")
    e.add_argument("hyp")
    e.add_argument("--iou", type=float, default=0.5)
    e.add_argument("--format", choices=("json", "text"), default="text")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="generate synthetic annotated audio")
    s.add_argument("--preset", help="|".join(sorted(PRESETS)))
    s.add_argument("--spec", help="JSON plan file")
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--time-scale", type=float, default=1.0)
    s.add_argument("--outdir", default="synth_out")
    s.set_defaults(func=cmd_synth)

    w = sub.add_parser("sweep", help="speaking-rate robustness table")
    w.add_argument("--scales", type=float, nargs="+",
                   default=[0.5, 0.75, 1.0, 1.5, 2.0])
    w.add_argument("--seed", type=int, default=11)
    w.add_argument("--config")
    w.add_argument("--output", help="CSV output path")
    w.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bench", help="timing and memory report")
    b.add_argument("audio")
    b.add_argument("--config")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("serve", help="run the clinician review service")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8710)
    v.add_argument("--data-dir", default="sessions")
    v.add_argument("--ui-dir", help="serve the built clinician UI from here")
    v.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (AudioFormatError, AnnotationParseError, ConfigError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InsufficientSpeechError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SPEECH
    except StutterkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
