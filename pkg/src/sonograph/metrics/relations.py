"""Relation Recall@K and mean Recall@K for scene-graph triplets."""

from __future__ import annotations

from dataclasses import dataclass

from ..core import PredicateClass, SceneGraph, iou
from .detection import check_id_alignment


@dataclass(frozen=True)
class RelationEvalConfig:
    k_values: tuple[int, ...] = (5, 20)
    match_iou: float = 0.5
    constrained: bool = True

    def __post_init__(self):
        ks = self.k_values
        if not ks or any(k < 1 for k in ks) or any(a >= b for a, b in zip(ks, ks[1:])):
            raise ValueError("k_values must be ascending positive integers")


@dataclass(frozen=True)
class RelationResult:
    recall_at_k: dict[int, float]
    mean_recall_at_k: dict[int, float]
    # per-predicate recalls behind the mean, for reporting
    per_predicate: dict[int, dict[PredicateClass, float]]


def match_gt_flags(pred: SceneGraph, gt: SceneGraph, k: int, match_iou: float) -> list[bool]:
    """One-to-one greedy matching of the top-k predicted triplets onto GT triplets.

    Predictions are visited in rank order (descending score, input order on
    ties); each takes the unmatched GT triplet with equal subject/object
    classes and predicate whose boxes overlap at IoU >= match_iou on both
    ends, preferring the GT with the larger binding overlap (the min of the
    subject and object IoUs), ties resolved by GT order.
    """
    ranked = sorted(
        range(len(pred.triplets)),
        key=lambda i: (-pred.triplets[i].effective_score, i),
    )[:k]
    taken = [False] * len(gt.triplets)
    for i in ranked:
        pt = pred.triplets[i]
        p_sub, p_obj = pred.detections[pt.sub], pred.detections[pt.obj]
        best_overlap, best_j = -1.0, -1
        for j, gtri in enumerate(gt.triplets):
            if taken[j] or gtri.pred is not pt.pred:
                continue
            g_sub, g_obj = gt.detections[gtri.sub], gt.detections[gtri.obj]
            if g_sub.cls is not p_sub.cls or g_obj.cls is not p_obj.cls:
                continue
            overlap = min(iou(p_sub.box, g_sub.box), iou(p_obj.box, g_obj.box))
            if overlap >= match_iou and overlap > best_overlap:
                best_overlap, best_j = overlap, j
        if best_j >= 0:
            taken[best_j] = True
    return taken


def _paired(preds: list[SceneGraph], gts: list[SceneGraph]) -> list[tuple[SceneGraph, SceneGraph]]:
    check_id_alignment(preds, gts)
    pred_by_id = {sg.image_id: sg for sg in preds}
    return [(pred_by_id[gt.image_id], gt) for gt in gts]


def _evaluate(
    preds: list[SceneGraph], gts: list[SceneGraph], cfg: RelationEvalConfig
) -> RelationResult:
    pairs = [(p, g) for p, g in _paired(preds, gts) if g.triplets]
    recall: dict[int, float] = {}
    mean_recall: dict[int, float] = {}
    per_pred_out: dict[int, dict[PredicateClass, float]] = {}
    for k in cfg.k_values:
        overall: list[float] = []
        by_pred: dict[PredicateClass, list[float]] = {p: [] for p in PredicateClass}
        for pred, gt in pairs:
            flags = match_gt_flags(pred, gt, k, cfg.match_iou)
            overall.append(sum(flags) / len(flags))
            for p in PredicateClass:
                idx = [j for j, t in enumerate(gt.triplets) if t.pred is p]
                if idx:
                    by_pred[p].append(sum(flags[j] for j in idx) / len(idx))
        recall[k] = sum(overall) / len(overall) if overall else 0.0
        per_pred = {p: sum(v) / len(v) for p, v in by_pred.items() if v}
        per_pred_out[k] = per_pred
        mean_recall[k] = sum(per_pred.values()) / len(per_pred) if per_pred else 0.0
    return RelationResult(recall_at_k=recall, mean_recall_at_k=mean_recall, per_predicate=per_pred_out)


def relation_recall(
    preds: list[SceneGraph],
    gts: list[SceneGraph],
    cfg: RelationEvalConfig = RelationEvalConfig(),
) -> dict[int, float]:
    """R@K averaged over images that have at least one GT triplet."""
    return _evaluate(preds, gts, cfg).recall_at_k


def mean_relation_recall(
    preds: list[SceneGraph],
    gts: list[SceneGraph],
    cfg: RelationEvalConfig = RelationEvalConfig(),
) -> RelationResult:
    """R@K plus mR@K: recall averaged over predicate classes present in GT.

    Per predicate, the same top-K match flags are reused; an image contributes
    to a predicate's recall only when it has GT triplets of that class.
    """
    return _evaluate(preds, gts, cfg)
