from __future__ import annotations

import numpy as np
import pytest

from oracles import optimal_match_count
from stutterkit.annotations import Annotation, AnnotationSet, EventKind
from stutterkit.evaluate import (clip_binary_score, greedy_match, rate_sweep,
                                 score)


def aset(rec, items):
    return AnnotationSet(recording_id=rec, events=tuple(
        Annotation(kind=k, start_s=s, end_s=e) for k, s, e in items))


P = EventKind.PROLONGATION
B = EventKind.BLOCK


class TestScore:
    def test_identity_perfect(self):
        ref = aset("r", [(P, 1.0, 1.5), (B, 3.0, 3.4)])
        rep = score(ref, ref)
        for kind in (P, B):
            s = rep.per_kind[kind]
            assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)

    def test_empty_hypothesis_zeros(self):
        ref = aset("r", [(P, 1.0, 1.5), (P, 2.0, 2.5), (B, 3.0, 3.5)])
        hyp = aset("r", [])
        rep = score(hyp, ref)
        o = rep.overall
        assert (o.precision, o.recall, o.f1) == (0.0, 0.0, 0.0)

    def test_iou_point_eight_pair_matches(self):
        ref = aset("r", [(P, 1.0, 1.5)])
        hyp = aset("r", [(P, 1.05, 1.45)])
        rep = score(hyp, ref, iou_min=0.5)
        assert rep.per_kind[P].tp == 1
        # IoU = 0.40/0.50 = 0.8
        assert rep.matches[0][2] == pytest.approx(0.8)

    def test_kind_mismatch_never_matches(self):
        ref = aset("r", [(P, 1.0, 1.5)])
        hyp = aset("r", [(B, 1.0, 1.5)])
        rep = score(hyp, ref)
        assert rep.overall.tp == 0

    def test_recording_id_mismatch_rejected(self):
        with pytest.raises(ValueError):
            score(aset("a", []), aset("b", []))

    def test_symmetry_swaps_precision_recall(self):
        ref = aset("r", [(P, 1.0, 1.5), (P, 2.0, 2.8), (B, 4.0, 4.5)])
        hyp = aset("r", [(P, 1.02, 1.5), (B, 6.0, 6.5)])
        fwd = score(hyp, ref)
        rev = score(ref, hyp)
        assert fwd.overall.precision == pytest.approx(rev.overall.recall)
        assert fwd.overall.recall == pytest.approx(rev.overall.precision)

    def test_adding_tp_never_lowers_recall(self):
        ref = aset("r", [(P, 1.0, 1.5), (P, 3.0, 3.5)])
        hyp1 = aset("r", [(P, 1.0, 1.5)])
        hyp2 = aset("r", [(P, 1.0, 1.5), (P, 3.01, 3.52)])
        assert score(hyp2, ref).overall.recall >= score(hyp1, ref).overall.recall


class TestGreedyVsOptimal:
    def _random_instance(self, rng):
        def intervals(n):
            out = []
            t = 0.0
            for _ in range(n):
                t += float(rng.uniform(0.1, 1.0))
                d = float(rng.uniform(0.2, 1.2))
                out.append((t, t + d))
                t += d
            return out

        n_ref = int(rng.integers(1, 7))
        n_hyp = int(rng.integers(1, 7))
        ref = intervals(n_ref)
        # hypotheses: jittered copies of refs plus extras
        hyp = []
        for s, e in ref[:n_hyp]:
            j = float(rng.uniform(-0.15, 0.15))
            hyp.append((s + j, e + j))
        while len(hyp) < n_hyp:
            s = float(rng.uniform(0, 10))
            hyp.append((s, s + float(rng.uniform(0.2, 1.0))))
        return hyp, ref

    def test_matches_exhaustive_optimal(self):
        rng = np.random.default_rng(101)
        for _ in range(300):
            hyp_iv, ref_iv = self._random_instance(rng)
            hyp = aset("r", [(P, s, e) for s, e in hyp_iv])
            ref = aset("r", [(P, s, e) for s, e in ref_iv])
            got = score(hyp, ref).per_kind[P].tp
            expected = optimal_match_count(hyp_iv, ref_iv, 0.5)
            assert got == expected


class TestRateSweep:
    def test_empty_scales_empty_table(self):
        from stutterkit.synthgen import trace_spec
        assert rate_sweep(trace_spec(), []) == []

    def test_nonpositive_scale_rejected(self):
        from stutterkit.synthgen import trace_spec
        with pytest.raises(ValueError):
            rate_sweep(trace_spec(), [0.0])

    def test_single_spec_accepted(self):
        from stutterkit.synthgen import trace_spec
        rows = rate_sweep(trace_spec(), [1.0])
        assert len(rows) == 1
        assert rows[0].f1_normalized == 1.0


class TestClipBinaryMode:
    def test_clip_positive_on_any_intersection(self):
        # the event straddles the 3 s boundary: both clips count positive
        ref = aset("r", [(P, 2.9, 3.2)])
        hyp = aset("r", [(P, 2.95, 3.3)])
        out = clip_binary_score(hyp, ref, clip_s=3.0)
        assert out[P].tp == 2
        assert out[P].fn == 0
        assert out[P].fp == 0
