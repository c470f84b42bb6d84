"""Triplet recall against an exact-arithmetic greedy-matching oracle."""

import numpy as np
import pytest

import graphgen
import oracles
from sonograph.core import BBox, Detection, EntityClass, PredicateClass, SceneGraph, Triplet
from sonograph.metrics import (
    RelationEvalConfig,
    match_gt_flags,
    mean_relation_recall,
    relation_recall,
)

CW = PredicateClass.CONTIGUOUS_WITH
PE = PredicateClass.PARTIALLY_ENCASES
SUP = PredicateClass.SUPERIOR_TO


def _graph(image_id, detections, triplets):
    return SceneGraph(image_id=image_id, width=829, height=770,
                      detections=tuple(detections), triplets=tuple(triplets))


def _seven_triplet_scene():
    """Five entities, seven relations; the full-visibility layout in miniature."""
    boxes = [
        Detection(EntityClass.CCA, BBox(359, 375, 111, 111)),
        Detection(EntityClass.IJV, BBox(429, 275, 151, 91)),
        Detection(EntityClass.CR, BBox(174, 315, 121, 101)),
        Detection(EntityClass.TH, BBox(194, 340, 301, 181)),
        Detection(EntityClass.VB, BBox(134, 550, 141, 121)),
    ]
    trips = [
        Triplet(0, CW, 1), Triplet(0, CW, 3), Triplet(1, CW, 3),
        Triplet(2, SUP, 4), Triplet(3, PE, 2), Triplet(3, SUP, 4),
        Triplet(2, CW, 3),
    ]
    return boxes, trips


class TestWorkedExample:
    def test_top5_of_seven_then_all_at_20(self):
        boxes, trips = _seven_triplet_scene()
        gt = _graph("i1", boxes, trips)
        scored = [Triplet(t.sub, t.pred, t.obj, score=1.0 - 0.05 * i)
                  for i, t in enumerate(trips)]
        pred = _graph("i1", [Detection(d.cls, d.box, score=0.9) for d in boxes], scored)

        exp_r, exp_mr = oracles.recall_tables([pred], [gt], (5, 20))
        assert exp_r[5] == pytest.approx(5 / 7, abs=0)
        assert exp_r[20] == 1.0

        got = relation_recall([pred], [gt])
        assert got[5] == pytest.approx(exp_r[5], abs=0)
        assert got[20] == 1.0
        full = mean_relation_recall([pred], [gt])
        assert full.mean_recall_at_k[20] == 1.0
        assert full.mean_recall_at_k[5] == pytest.approx(exp_mr[5], abs=1e-12)


class TestAveraging:
    def test_mean_recall_over_predicates_present_in_gt(self):
        dets = [
            Detection(EntityClass.CCA, BBox(10, 10, 40, 40)),
            Detection(EntityClass.IJV, BBox(60, 10, 40, 40)),
            Detection(EntityClass.TH, BBox(10, 60, 40, 40)),
        ]
        gt = _graph("i1", dets, [
            Triplet(0, CW, 1), Triplet(0, PE, 2), Triplet(2, SUP, 1),
        ])
        # only the contiguity triplet is predicted
        pred = _graph("i1", [Detection(d.cls, d.box, score=0.9) for d in dets],
                      [Triplet(0, CW, 1, score=0.9)])
        full = mean_relation_recall([pred], [gt])
        assert full.recall_at_k[20] == pytest.approx(1 / 3, abs=0)
        assert full.mean_recall_at_k[20] == pytest.approx((1 + 0 + 0) / 3, abs=0)

    def test_single_predicate_collapses_mean_to_plain_recall(self):
        dets = [
            Detection(EntityClass.CCA, BBox(10, 10, 40, 40)),
            Detection(EntityClass.IJV, BBox(60, 10, 40, 40)),
        ]
        gt = _graph("i1", dets, [Triplet(0, CW, 1)])
        pred = _graph("i1", [Detection(d.cls, d.box, score=0.9) for d in dets],
                      [Triplet(0, CW, 1, score=0.9)])
        full = mean_relation_recall([pred], [gt])
        assert full.mean_recall_at_k[20] == full.recall_at_k[20] == 1.0

    def test_images_without_gt_triplets_are_skipped(self):
        dets = [
            Detection(EntityClass.CCA, BBox(10, 10, 40, 40)),
            Detection(EntityClass.IJV, BBox(60, 10, 40, 40)),
        ]
        gt_full = _graph("a", dets, [Triplet(0, CW, 1)])
        gt_empty = _graph("b", dets, [])
        pred_full = _graph("a", [Detection(d.cls, d.box, score=0.9) for d in dets],
                           [Triplet(0, CW, 1, score=0.9)])
        pred_empty = _graph("b", [Detection(d.cls, d.box, score=0.9) for d in dets], [])
        got = relation_recall([pred_full, pred_empty], [gt_full, gt_empty])
        assert got[20] == 1.0

    def test_no_predictions_scores_zero(self):
        dets = [
            Detection(EntityClass.CCA, BBox(10, 10, 40, 40)),
            Detection(EntityClass.IJV, BBox(60, 10, 40, 40)),
        ]
        gt = _graph("i1", dets, [Triplet(0, CW, 1)])
        pred = _graph("i1", [], [])
        assert relation_recall([pred], [gt])[20] == 0.0


class TestMatching:
    def test_match_needs_both_endpoints_at_half_iou(self):
        gt_dets = [
            Detection(EntityClass.CCA, BBox(0, 0, 20, 20)),
            Detection(EntityClass.IJV, BBox(40, 0, 20, 20)),
        ]
        gt = _graph("i1", gt_dets, [Triplet(0, CW, 1)])
        # subject aligns, object IoU is 1/3 which is under the gate
        pred = _graph("i1", [
            Detection(EntityClass.CCA, BBox(0, 0, 20, 20), score=0.9),
            Detection(EntityClass.IJV, BBox(50, 0, 20, 20), score=0.9),
        ], [Triplet(0, CW, 1, score=0.9)])
        assert relation_recall([pred], [gt])[20] == 0.0

    def test_equal_overlap_ties_take_the_earlier_gt(self):
        box = BBox(10, 10, 20, 20)
        gt_dets = [Detection(EntityClass.CCA, box), Detection(EntityClass.IJV, box),
                   Detection(EntityClass.CCA, box), Detection(EntityClass.IJV, box)]
        gt = _graph("i1", gt_dets, [Triplet(0, CW, 1), Triplet(2, CW, 3)])
        pred = _graph("i1", [Detection(EntityClass.CCA, box, score=0.9),
                             Detection(EntityClass.IJV, box, score=0.9)],
                      [Triplet(0, CW, 1, score=0.9)])
        flags = match_gt_flags(pred, gt, k=20, match_iou=0.5)
        assert flags == [True, False]

    def test_one_prediction_cannot_match_twice(self):
        box = BBox(10, 10, 20, 20)
        gt_dets = [Detection(EntityClass.CCA, box), Detection(EntityClass.IJV, box)]
        gt = _graph("i1", gt_dets, [Triplet(0, CW, 1)])
        pred = _graph("i1", [Detection(EntityClass.CCA, box, score=0.9),
                             Detection(EntityClass.IJV, box, score=0.8)],
                      [Triplet(0, CW, 1, score=0.9), Triplet(0, CW, 1, score=0.8)])
        assert sum(match_gt_flags(pred, gt, k=20, match_iou=0.5)) == 1

    def test_k_truncates_by_rank(self):
        boxes, trips = _seven_triplet_scene()
        gt = _graph("i1", boxes, trips)
        scored = [Triplet(t.sub, t.pred, t.obj, score=1.0 - 0.05 * i)
                  for i, t in enumerate(trips)]
        pred = _graph("i1", [Detection(d.cls, d.box, score=0.9) for d in boxes], scored)
        assert sum(match_gt_flags(pred, gt, k=1, match_iou=0.5)) == 1
        assert sum(match_gt_flags(pred, gt, k=7, match_iou=0.5)) == 7

    def test_bad_k_config_rejected(self):
        with pytest.raises(ValueError):
            RelationEvalConfig(k_values=(20, 5))
        with pytest.raises(ValueError):
            RelationEvalConfig(k_values=())


class TestAgainstOracle:
    def test_seeded_random_instances(self):
        rng = np.random.default_rng(45)
        for it in range(150):
            preds, gts = graphgen.random_pair_set(rng, f"r{it}")
            got_r = relation_recall(preds, gts)
            got_full = mean_relation_recall(preds, gts)
            exp_r, exp_mr = oracles.recall_tables(preds, gts, (5, 20))
            for k in (5, 20):
                assert got_r[k] == pytest.approx(exp_r[k], abs=1e-9)
                assert got_full.mean_recall_at_k[k] == pytest.approx(exp_mr[k], abs=1e-9)

    def test_recall_monotone_in_k(self):
        rng = np.random.default_rng(46)
        cfg = RelationEvalConfig(k_values=(1, 2, 3, 5, 20))
        for it in range(50):
            preds, gts = graphgen.random_pair_set(rng, f"k{it}")
            got = relation_recall(preds, gts, cfg)
            values = [got[k] for k in cfg.k_values]
            assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))
