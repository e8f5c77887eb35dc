"""Word alignments, consumed as input files and never computed here.

Two formats: CSV (word,start_s,end_s) and TextGrid-style interval-tier
text (long format; the first interval tier is used, preferring one named
"words"). Empty-text intervals are skipped.
"""
from __future__ import annotations

import csv
import re
import string
from dataclasses import dataclass
from pathlib import Path

from .errors import AlignmentError, AnnotationParseError

_PUNCT = str.maketrans("", "", string.punctuation)


def normalize_token(word: str) -> str:
    """Case-fold and strip punctuation so "The," matches "the"."""
    return word.casefold().translate(_PUNCT).strip()


@dataclass(frozen=True)
class AlignedWord:
    word: str
    start_s: float
    end_s: float


@dataclass(frozen=True)
class WordAlignment:
    words: tuple[AlignedWord, ...]

    def __len__(self) -> int:
        return len(self.words)

    def validate(self) -> None:
        prev_end = -1.0
        for w in self.words:
            if w.end_s <= w.start_s:
                raise AlignmentError(
                    f"retrograde interval for {w.word!r}: "
                    f"[{w.start_s}, {w.end_s}]")
            if w.start_s < prev_end - 1e-9:
                raise AlignmentError(
                    f"overlapping interval at {w.word!r} "
                    f"(starts {w.start_s} before previous end {prev_end})")
            prev_end = w.end_s


def load_alignment(path: str | Path) -> WordAlignment:
    """Dispatch on content: TextGrid if the header says so, else CSV."""
    path = Path(path)
    text = path.read_text()
    if "ooTextFile" in text[:200] or "IntervalTier" in text:
        align = parse_textgrid(text)
    else:
        align = parse_alignment_csv(text)
    align.validate()
    return align


def parse_alignment_csv(text: str) -> WordAlignment:
    words = []
    reader = csv.reader(text.splitlines())
    for ln, row in enumerate(reader, start=1):
        if not row or (ln == 1 and row[0].strip().lower() == "word"):
            continue
        if len(row) < 3:
            raise AnnotationParseError(f"line {ln}: expected word,start_s,end_s")
        try:
            start, end = float(row[1]), float(row[2])
        except ValueError as exc:
            raise AnnotationParseError(f"line {ln}: bad number ({exc})") from exc
        words.append(AlignedWord(word=row[0].strip(), start_s=start, end_s=end))
    return WordAlignment(words=tuple(words))


def write_alignment_csv(align: WordAlignment, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["word", "start_s", "end_s"])
        for word in align.words:
            w.writerow([word.word, f"{word.start_s:.4f}", f"{word.end_s:.4f}"])


_NUM = re.compile(r"(xmin|xmax)\s*=\s*([-\d.eE+]+)")
_TEXT = re.compile(r'text\s*=\s*"((?:[^"]|"")*)"')
_TIER_NAME = re.compile(r'name\s*=\s*"((?:[^"]|"")*)"')
_TIER_CLASS = re.compile(r'class\s*=\s*"IntervalTier"')


def parse_textgrid(text: str) -> WordAlignment:
    """Pull (word, xmin, xmax) triples out of a long-format TextGrid."""
    # split into tiers: everything after each 'item [k]:' header
    chunks = re.split(r"item\s*\[\d+\]\s*:", text)
    if len(chunks) < 2:
        raise AnnotationParseError("line 1: no interval tiers found in TextGrid")
    tiers = []
    for chunk in chunks[1:]:
        if not _TIER_CLASS.search(chunk):
            continue
        name_m = _TIER_NAME.search(chunk)
        tiers.append((name_m.group(1) if name_m else "", chunk))
    if not tiers:
        raise AnnotationParseError("line 1: no IntervalTier in TextGrid")
    chosen = next((c for n, c in tiers if n.strip().lower() in ("words", "word")),
                  tiers[0][1])

    words = []
    for m in re.finditer(
            r"intervals\s*\[\d+\]\s*:\s*xmin\s*=\s*([-\d.eE+]+)\s*"
            r"xmax\s*=\s*([-\d.eE+]+)\s*text\s*=\s*\"((?:[^\"]|\"\")*)\"",
            chosen):
        token = m.group(3).replace('""', '"').strip()
        if not token:
            continue
        words.append(AlignedWord(word=token,
                                 start_s=float(m.group(1)),
                                 end_s=float(m.group(2))))
    return WordAlignment(words=tuple(words))
