from __future__ import annotations

import pytest

from stutterkit.align import (WordAlignment, load_alignment, normalize_token,
                              parse_alignment_csv, parse_textgrid,
                              write_alignment_csv)
from stutterkit.annotations import (Annotation, AnnotationSet, EventKind,
                                    load_annotations, write_annotations)
from stutterkit.errors import AlignmentError, AnnotationParseError

TEXTGRID = '''File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 2.5
tiers? <exists>
size = 2
item []:
    item [1]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 2.5
        intervals: size = 4
        intervals [1]:
            xmin = 0
            xmax = 0.5
            text = ""
        intervals [2]:
            xmin = 0.5
            xmax = 1.0
            text = "the"
        intervals [3]:
            xmin = 1.1
            xmax = 1.6
            text = "The,"
        intervals [4]:
            xmin = 1.6
            xmax = 2.5
            text = "cat"
    item [2]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 2.5
        intervals: size = 1
        intervals [1]:
            xmin = 0
            xmax = 2.5
            text = "x"
'''


class TestNormalize:
    def test_case_and_punctuation(self):
        assert normalize_token("The,") == "the"
        assert normalize_token("  Ball!  ") == "ball"


class TestCsv:
    def test_roundtrip(self, tmp_path):
        text = "word,start_s,end_s\nthe,1.0,1.2\nthe,1.3,1.5\n"
        align = parse_alignment_csv(text)
        assert len(align) == 2
        assert align.words[0].word == "the"
        p = tmp_path / "a.csv"
        write_alignment_csv(align, p)
        back = load_alignment(p)
        assert back.words[0].start_s == pytest.approx(1.0)

    def test_bad_row_reports_line(self):
        with pytest.raises(AnnotationParseError, match="line 2"):
            parse_alignment_csv("word,start_s,end_s\nbroken,1.0\n")

    def test_bad_number_reports_line(self):
        with pytest.raises(AnnotationParseError, match="line 1"):
            parse_alignment_csv("x,notanumber,2.0\n")


class TestTextGrid:
    def test_words_tier_parsed_skipping_empty(self):
        align = parse_textgrid(TEXTGRID)
        assert [w.word for w in align.words] == ["the", "The,", "cat"]
        assert align.words[1].start_s == pytest.approx(1.1)

    def test_dispatch_by_content(self, tmp_path):
        p = tmp_path / "g.TextGrid"
        p.write_text(TEXTGRID)
        align = load_alignment(p)
        assert len(align) == 3

    def test_no_tier_rejected(self):
        with pytest.raises(AnnotationParseError):
            parse_textgrid("File type = nothing useful")


class TestValidation:
    def test_overlap_rejected(self):
        from stutterkit.align import AlignedWord
        align = WordAlignment(words=(
            AlignedWord(word="a", start_s=0.0, end_s=1.0),
            AlignedWord(word="b", start_s=0.5, end_s=1.5)))
        with pytest.raises(AlignmentError, match="overlap"):
            align.validate()

    def test_retrograde_rejected(self):
        from stutterkit.align import AlignedWord
        align = WordAlignment(words=(
            AlignedWord(word="a", start_s=1.0, end_s=0.5),))
        with pytest.raises(AlignmentError, match="retrograde"):
            align.validate()


class TestAnnotationsCsv:
    def test_roundtrip_multi_recording(self, tmp_path):
        sets = [
            AnnotationSet(recording_id="r1", events=(
                Annotation(kind=EventKind.BLOCK, start_s=1.0, end_s=1.5),)),
            AnnotationSet(recording_id="r2", events=(
                Annotation(kind=EventKind.WORD_REP, start_s=0.5, end_s=1.1),)),
        ]
        p = tmp_path / "ann.csv"
        write_annotations(sets, p)
        back = load_annotations(p)
        assert set(back) == {"r1", "r2"}
        assert back["r1"].events[0].kind == EventKind.BLOCK

    def test_unknown_kind_reports_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("recording_id,kind,start_s,end_s\nr1,Wiggle,0,1\n")
        with pytest.raises(AnnotationParseError, match="line 2"):
            load_annotations(p)

    def test_invalid_interval_reports_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("recording_id,kind,start_s,end_s\nr1,Block,2.0,1.0\n")
        with pytest.raises(AnnotationParseError, match="line 2"):
            load_annotations(p)
