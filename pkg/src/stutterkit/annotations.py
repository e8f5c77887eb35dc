"""Event annotations: the shared currency of synthgen, eval, and the CLI.

CSV schema: recording_id,kind,start_s,end_s.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import AnnotationParseError


class EventKind(str, Enum):
    PROLONGATION = "Prolongation"
    SOUND_REP = "SoundRep"
    WORD_REP = "WordRep"
    BLOCK = "Block"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


# clinical precedence, most severe first
PRECEDENCE = (EventKind.BLOCK, EventKind.SOUND_REP,
              EventKind.PROLONGATION, EventKind.WORD_REP)


@dataclass(frozen=True)
class Annotation:
    kind: EventKind
    start_s: float
    end_s: float

    def __post_init__(self):
        if not self.end_s > self.start_s:
            raise ValueError(f"annotation interval invalid: "
                             f"[{self.start_s}, {self.end_s}]")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class AnnotationSet:
    recording_id: str
    events: tuple[Annotation, ...]

    def __len__(self) -> int:
        return len(self.events)

    def by_kind(self, kind: EventKind) -> list[Annotation]:
        return [a for a in self.events if a.kind == kind]


def interval_iou(a_start: float, a_end: float,
                 b_start: float, b_end: float) -> float:
    inter = max(0.0, min(a_end, b_end) - max(a_start, b_start))
    union = max(a_end, b_end) - min(a_start, b_start)
    return inter / union if union > 0 else 0.0


def load_annotations(path: str | Path) -> dict[str, AnnotationSet]:
    """Parse an annotation CSV into one AnnotationSet per recording_id."""
    path = Path(path)
    per_rec: dict[str, list[Annotation]] = {}
    with path.open() as fh:
        reader = csv.reader(fh)
        for ln, row in enumerate(reader, start=1):
            if not row:
                continue
            if ln == 1 and row[0].strip().lower() == "recording_id":
                continue
            if len(row) < 4:
                raise AnnotationParseError(
                    f"{path}: line {ln}: expected recording_id,kind,start_s,end_s")
            rec, kind_s = row[0].strip(), row[1].strip()
            try:
                kind = EventKind(kind_s)
            except ValueError as exc:
                raise AnnotationParseError(
                    f"{path}: line {ln}: unknown kind {kind_s!r}") from exc
            try:
                start, end = float(row[2]), float(row[3])
            except ValueError as exc:
                raise AnnotationParseError(
                    f"{path}: line {ln}: bad number ({exc})") from exc
            if end <= start:
                raise AnnotationParseError(
                    f"{path}: line {ln}: interval end {end} <= start {start}")
            per_rec.setdefault(rec, []).append(
                Annotation(kind=kind, start_s=start, end_s=end))
    return {rec: AnnotationSet(recording_id=rec, events=tuple(evts))
            for rec, evts in per_rec.items()}


def write_annotations(sets: list[AnnotationSet] | AnnotationSet,
                      path: str | Path) -> None:
    if isinstance(sets, AnnotationSet):
        sets = [sets]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["recording_id", "kind", "start_s", "end_s"])
        for aset in sets:
            for a in aset.events:
                w.writerow([aset.recording_id, a.kind.value,
                            f"{a.start_s:.4f}", f"{a.end_s:.4f}"])
