"""Conflict resolution: merge over-segmented detections, apply the
clinical precedence hierarchy, and assemble the final report.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

from .annotations import PRECEDENCE, EventKind
from .config import RuleConfig
from .detectors import DysfluencyEvent, replay_event

_RANK = {kind: i for i, kind in enumerate(PRECEDENCE)}  # 0 = most severe


@dataclass(frozen=True)
class EventReport:
    recording_id: str
    events: tuple[DysfluencyEvent, ...]
    config_snapshot: RuleConfig
    speaking_rate: float
    counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "recording_id": self.recording_id,
            "speaking_rate": round(self.speaking_rate, 4),
            "counts": self.counts,
            "config": self.config_snapshot.to_dict(),
            "events": [e.to_dict() for e in self.events],
        }

    def replay_all(self) -> bool:
        """True iff every event's evidence re-derives its firing decision."""
        return all(replay_event(e, self.config_snapshot) for e in self.events)


def _merge_same_kind(events: list[DysfluencyEvent],
                     min_sep: float) -> list[DysfluencyEvent]:
    """Merge same-kind events separated by < min_sep of non-event time.

    The merged event spans both and takes the max confidence (clinical
    reports should not dilute a confident detection); its evidence is the
    more confident constituent's, plus a merged_count marker.
    """
    out: list[DysfluencyEvent] = []
    for kind in EventKind:
        group = sorted((e for e in events if e.kind == kind),
                       key=lambda e: (e.start_s, e.end_s))
        if not group:
            continue
        cur = group[0]
        merged_n = cur.evidence.get("merged_count", 1)
        for nxt in group[1:]:
            if nxt.start_s - cur.end_s < min_sep:
                winner = cur if cur.confidence >= nxt.confidence else nxt
                evidence = dict(winner.evidence)
                merged_n += nxt.evidence.get("merged_count", 1)
                evidence["merged_count"] = merged_n
                cur = DysfluencyEvent(
                    kind=kind,
                    start_s=min(cur.start_s, nxt.start_s),
                    end_s=max(cur.end_s, nxt.end_s),
                    confidence=max(cur.confidence, nxt.confidence),
                    evidence=evidence,
                )
            else:
                out.append(cur)
                cur = nxt
                merged_n = cur.evidence.get("merged_count", 1)
        out.append(cur)
    return out


def _overlap_fraction(a: DysfluencyEvent, b: DysfluencyEvent) -> float:
    inter = min(a.end_s, b.end_s) - max(a.start_s, b.start_s)
    if inter <= 0:
        return 0.0
    shorter = min(a.duration_s, b.duration_s)
    return inter / shorter


def resolve(candidates: Iterable[DysfluencyEvent], cfg: RuleConfig, *,
            recording_id: str = "", speaking_rate: float = 0.0) -> EventReport:
    """Merge, apply precedence, and sort.

    Cross-kind overlaps covering >= overlap_fraction_gate of the shorter
    event are resolved by Block > SoundRep > Prolongation > WordRep;
    smaller overlaps are kept (dysfluencies may genuinely co-occur).
    """
    merged = _merge_same_kind(list(candidates), cfg.min_separation_s)

    # precedence pass: most severe first, earlier start breaks ties
    ordered = sorted(merged, key=lambda e: (_RANK[e.kind], e.start_s, e.end_s))
    kept: list[DysfluencyEvent] = []
    for cand in ordered:
        drop = False
        for acc in kept:
            if acc.kind == cand.kind:
                continue
            if _overlap_fraction(acc, cand) >= cfg.overlap_fraction_gate:
                drop = True
                break
        if not drop:
            kept.append(cand)

    kept.sort(key=lambda e: (e.start_s, e.end_s, _RANK[e.kind]))
    counts = {kind.value: 0 for kind in EventKind}
    for e in kept:
        counts[e.kind.value] += 1
    return EventReport(
        recording_id=recording_id,
        events=tuple(kept),
        config_snapshot=cfg,
        speaking_rate=speaking_rate,
        counts=counts,
    )
