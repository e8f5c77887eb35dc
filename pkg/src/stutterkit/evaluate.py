"""Event-level scoring: greedy one-to-one IoU matching, per-kind and
micro-averaged precision/recall/F1, plus the speaking-rate sweep that
mirrors the fixed-vs-normalized robustness experiment.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .annotations import Annotation, AnnotationSet, EventKind, interval_iou
from .config import RuleConfig


@dataclass(frozen=True)
class KindScore:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if (self.tp + self.fp) else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if (self.tp + self.fn) else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if (p + r) else 0.0


@dataclass(frozen=True)
class EvalReport:
    recording_id: str
    iou_min: float
    per_kind: dict[EventKind, KindScore]
    matches: tuple[tuple[Annotation, Annotation, float], ...]  # (hyp, ref, iou)

    @property
    def overall(self) -> KindScore:
        return KindScore(
            tp=sum(s.tp for s in self.per_kind.values()),
            fp=sum(s.fp for s in self.per_kind.values()),
            fn=sum(s.fn for s in self.per_kind.values()),
        )

    def to_dict(self) -> dict:
        def row(s: KindScore) -> dict:
            return {"tp": s.tp, "fp": s.fp, "fn": s.fn,
                    "precision": round(s.precision, 4),
                    "recall": round(s.recall, 4),
                    "f1": round(s.f1, 4)}

        return {
            "recording_id": self.recording_id,
            "iou_min": self.iou_min,
            "per_kind": {k.value: row(s) for k, s in self.per_kind.items()},
            "overall": row(self.overall),
        }

    def text_table(self) -> str:
        lines = [f"{'kind':<14}{'TP':>5}{'FP':>5}{'FN':>5}"
                 f"{'P':>8}{'R':>8}{'F1':>8}"]
        for kind, s in self.per_kind.items():
            lines.append(f"{kind.value:<14}{s.tp:>5}{s.fp:>5}{s.fn:>5}"
                         f"{s.precision:>8.3f}{s.recall:>8.3f}{s.f1:>8.3f}")
        o = self.overall
        lines.append(f"{'overall':<14}{o.tp:>5}{o.fp:>5}{o.fn:>5}"
                     f"{o.precision:>8.3f}{o.recall:>8.3f}{o.f1:>8.3f}")
        return "\n".join(lines)


def greedy_match(hyp: list[Annotation], ref: list[Annotation],
                 iou_min: float) -> list[tuple[int, int, float]]:
    """One-to-one matching by descending IoU among same-kind pairs.

    Ties broken by (ref index, hyp index) for determinism.
    """
    pairs = []
    for ri, r in enumerate(ref):
        for hi, h in enumerate(hyp):
            if r.kind != h.kind:
                continue
            iou = interval_iou(h.start_s, h.end_s, r.start_s, r.end_s)
            if iou >= iou_min:
                pairs.append((iou, ri, hi))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    used_r: set[int] = set()
    used_h: set[int] = set()
    out = []
    for iou, ri, hi in pairs:
        if ri in used_r or hi in used_h:
            continue
        used_r.add(ri)
        used_h.add(hi)
        out.append((hi, ri, iou))
    return out


def score(hyp: AnnotationSet, ref: AnnotationSet,
          iou_min: float = 0.5) -> EvalReport:
    """TP/FP/FN per kind; a pair matches iff same kind and IoU >= iou_min."""
    if hyp.recording_id != ref.recording_id:
        raise ValueError(f"recording_id mismatch: "
                         f"{hyp.recording_id!r} vs {ref.recording_id!r}")
    per_kind: dict[EventKind, KindScore] = {}
    matches: list[tuple[Annotation, Annotation, float]] = []
    for kind in EventKind:
        h = hyp.by_kind(kind)
        r = ref.by_kind(kind)
        m = greedy_match(h, r, iou_min)
        per_kind[kind] = KindScore(tp=len(m), fp=len(h) - len(m),
                                   fn=len(r) - len(m))
        matches.extend((h[hi], r[ri], iou) for hi, ri, iou in m)
    return EvalReport(recording_id=ref.recording_id, iou_min=iou_min,
                      per_kind=per_kind, matches=tuple(matches))


def score_corpus(pairs: Iterable[tuple[AnnotationSet, AnnotationSet]],
                 iou_min: float = 0.5) -> EvalReport:
    """Pool TP/FP/FN over (hyp, ref) pairs from many recordings."""
    totals = {kind: [0, 0, 0] for kind in EventKind}
    matches: list[tuple[Annotation, Annotation, float]] = []
    for hyp, ref in pairs:
        rep = score(hyp, ref, iou_min)
        for kind, s in rep.per_kind.items():
            totals[kind][0] += s.tp
            totals[kind][1] += s.fp
            totals[kind][2] += s.fn
        matches.extend(rep.matches)
    return EvalReport(
        recording_id="corpus",
        iou_min=iou_min,
        per_kind={k: KindScore(*v) for k, v in totals.items()},
        matches=tuple(matches),
    )


def clip_binary_score(hyp: AnnotationSet, ref: AnnotationSet,
                      clip_s: float = 3.0) -> dict[str, KindScore]:
    """3-second-clip binary mode: a clip is positive for a kind iff any
    event of that kind intersects it."""
    end = max((e.end_s for s in (hyp, ref) for e in s.events), default=0.0)
    n_clips = int(end // clip_s) + 1 if end > 0 else 0
    out = {}
    for kind in EventKind:
        tp = fp = fn = 0
        for c in range(n_clips):
            lo, hi = c * clip_s, (c + 1) * clip_s
            in_h = any(e.start_s < hi and e.end_s > lo for e in hyp.by_kind(kind))
            in_r = any(e.start_s < hi and e.end_s > lo for e in ref.by_kind(kind))
            tp += in_h and in_r
            fp += in_h and not in_r
            fn += in_r and not in_h
        out[kind] = KindScore(tp=tp, fp=fp, fn=fn)
    return out


# ---------------------------------------------------------------------------
# rate sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    scale: float
    f1_normalized: float
    f1_fixed: float


def rate_sweep(specs, scales: list[float],
               cfg: RuleConfig | None = None) -> list[SweepRow]:
    """For each time scale: generate, detect with rate normalization on
    and off, and score. `specs` may be one SynthSpec or a corpus of
    (recording_id, SynthSpec) pairs."""
    from .pipeline import detect_events
    from .synthgen import SynthSpec, generate

    cfg = cfg or RuleConfig()
    if isinstance(specs, SynthSpec):
        specs = [("sweep00", specs)]
    rows = []
    cfg_on = cfg.patched({"rate_normalization_enabled": True})
    cfg_off = cfg.patched({"rate_normalization_enabled": False})
    for s in scales:
        if s <= 0:
            raise ValueError(f"scales must be positive, got {s}")
        pairs_on, pairs_off = [], []
        for rec_id, spec in specs:
            res = generate(spec.scaled(s), recording_id=rec_id)
            rep_on = detect_events(res.audio, cfg_on, alignment=res.alignment,
                                   recording_id=rec_id)
            rep_off = detect_events(res.audio, cfg_off, alignment=res.alignment,
                                    recording_id=rec_id)
            pairs_on.append((report_to_annotations(rep_on), res.annotations))
            pairs_off.append((report_to_annotations(rep_off), res.annotations))
        rows.append(SweepRow(
            scale=s,
            f1_normalized=score_corpus(pairs_on).overall.f1,
            f1_fixed=score_corpus(pairs_off).overall.f1,
        ))
    return rows


def report_to_annotations(report) -> AnnotationSet:
    return AnnotationSet(
        recording_id=report.recording_id,
        events=tuple(Annotation(kind=e.kind, start_s=e.start_s, end_s=e.end_s)
                     for e in report.events),
    )


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scale", "f1_normalized", "f1_fixed"])
        for r in rows:
            w.writerow([r.scale, f"{r.f1_normalized:.4f}", f"{r.f1_fixed:.4f}"])
