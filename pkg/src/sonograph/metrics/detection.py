"""COCO-style average precision for entity detection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import EntityClass, SceneGraph, iou
from ..errors import SonographError

RECALL_SAMPLES = 101
_RECALL_POINTS = np.arange(RECALL_SAMPLES) / (RECALL_SAMPLES - 1)


def default_iou_thresholds() -> tuple[float, ...]:
    return tuple(round(0.5 + 0.05 * i, 2) for i in range(10))


@dataclass(frozen=True)
class DetectionEvalConfig:
    iou_thresholds: tuple[float, ...] = field(default_factory=default_iou_thresholds)

    def __post_init__(self):
        ts = self.iou_thresholds
        if not ts or any(not 0 < t <= 1 for t in ts) or any(a >= b for a, b in zip(ts, ts[1:])):
            raise ValueError("iou_thresholds must be strictly increasing values in (0, 1]")


@dataclass(frozen=True)
class DetectionResult:
    """Per-class AP table plus the headline aggregates."""

    per_class_ap: dict[float, dict[EntityClass, float]]
    map_per_threshold: dict[float, float]
    ap50: float
    ap_range: float
    excluded_classes: tuple[EntityClass, ...]
    # interpolated precision at the 101 recall samples, per class, at IoU 0.5
    pr_curves_50: dict[EntityClass, tuple[float, ...]]


def check_id_alignment(preds: list[SceneGraph], gts: list[SceneGraph]) -> None:
    pred_ids = {sg.image_id for sg in preds}
    gt_ids = {sg.image_id for sg in gts}
    if pred_ids != gt_ids:
        only_p = sorted(pred_ids - gt_ids)[:3]
        only_g = sorted(gt_ids - pred_ids)[:3]
        raise SonographError(
            "ID_MISMATCH",
            f"prediction and ground-truth image ids differ (pred-only {only_p}, gt-only {only_g})",
        )


class _ClassEval:
    """Ranked predictions of one class with their IoUs against same-class GT."""

    def __init__(self, preds: list[SceneGraph], gts: dict[str, SceneGraph], cls: EntityClass):
        gt_boxes = {
            image_id: [d.box for d in sg.detections if d.cls is cls]
            for image_id, sg in gts.items()
        }
        self.total_gt = sum(len(v) for v in gt_boxes.values())
        # rank by descending score, ties by image id then per-image insertion order
        ranked = sorted(
            (
                (-det.effective_score, sg.image_id, idx, det.box)
                for sg in preds
                for idx, det in enumerate(sg.detections)
                if det.cls is cls
            ),
            key=lambda r: r[:3],
        )
        self.entries = [
            (image_id, [iou(box, g) for g in gt_boxes[image_id]])
            for _, image_id, _, box in ranked
        ]

    def match_flags(self, threshold: float) -> list[bool]:
        """Greedy matching: each prediction takes the unmatched GT of highest IoU."""
        matched: dict[str, set[int]] = {}
        flags = []
        for image_id, ious in self.entries:
            taken = matched.setdefault(image_id, set())
            best_iou, best_j = 0.0, -1
            for j, v in enumerate(ious):
                if j not in taken and v > best_iou:
                    best_iou, best_j = v, j
            if best_j >= 0 and best_iou >= threshold:
                taken.add(best_j)
                flags.append(True)
            else:
                flags.append(False)
        return flags


def _interpolated_ap(flags: list[bool], total_gt: int) -> tuple[float, np.ndarray]:
    """101-point interpolated AP: mean over recall samples of max precision at recall >= sample."""
    if total_gt == 0 or not flags:
        return 0.0, np.zeros(RECALL_SAMPLES)
    tp = np.cumsum(np.asarray(flags, dtype=np.float64))
    precision = tp / np.arange(1, len(flags) + 1, dtype=np.float64)
    recall = tp / total_gt
    interp = np.zeros(RECALL_SAMPLES)
    for i, r in enumerate(_RECALL_POINTS):
        ok = precision[recall >= r - 1e-12]
        if ok.size:
            interp[i] = ok.max()
    return float(interp.mean()), interp


def detection_ap(
    preds: list[SceneGraph],
    gts: list[SceneGraph],
    cfg: DetectionEvalConfig = DetectionEvalConfig(),
) -> DetectionResult:
    """Per-class AP and mAP over the configured IoU thresholds.

    Classes with no ground-truth boxes anywhere are excluded from mAP and
    reported in ``excluded_classes``.
    """
    check_id_alignment(preds, gts)
    gt_by_id = {sg.image_id: sg for sg in gts}

    present = [
        cls for cls in EntityClass if any(d.cls is cls for sg in gts for d in sg.detections)
    ]
    excluded = tuple(cls for cls in EntityClass if cls not in present)
    evals = {cls: _ClassEval(preds, gt_by_id, cls) for cls in present}

    per_class: dict[float, dict[EntityClass, float]] = {}
    map_per_threshold: dict[float, float] = {}
    curves_50: dict[EntityClass, tuple[float, ...]] = {}
    for t in cfg.iou_thresholds:
        row: dict[EntityClass, float] = {}
        for cls in present:
            ap, curve = _interpolated_ap(evals[cls].match_flags(t), evals[cls].total_gt)
            row[cls] = ap
            if t == 0.5:
                curves_50[cls] = tuple(curve.tolist())
        per_class[t] = row
        map_per_threshold[t] = float(np.mean([row[c] for c in present])) if present else 0.0

    ap50 = map_per_threshold.get(0.5, 0.0)
    ap_range = float(np.mean(list(map_per_threshold.values())))
    return DetectionResult(
        per_class_ap=per_class,
        map_per_threshold=map_per_threshold,
        ap50=ap50,
        ap_range=ap_range,
        excluded_classes=excluded,
        pr_curves_50=curves_50,
    )
