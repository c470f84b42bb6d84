"""Detection, relation, and text metrics plus report assembly."""

from .detection import (
    DetectionEvalConfig,
    DetectionResult,
    default_iou_thresholds,
    detection_ap,
)
from .relations import (
    RelationEvalConfig,
    RelationResult,
    match_gt_flags,
    mean_relation_recall,
    relation_recall,
)
from .report import (
    EvalReport,
    TextPair,
    TextSample,
    read_labels,
    read_pairs,
    render_csv,
    render_figures,
    render_table,
    score_report,
    score_text_pairs,
)
from .text import (
    DEFAULT_TEXT_CONFIG,
    RougeScore,
    TextMetricConfig,
    lcs_length,
    meteor,
    meteor_alignment,
    rouge_l,
    tokenize,
)

__all__ = [
    "DetectionEvalConfig",
    "DetectionResult",
    "default_iou_thresholds",
    "detection_ap",
    "RelationEvalConfig",
    "RelationResult",
    "match_gt_flags",
    "mean_relation_recall",
    "relation_recall",
    "EvalReport",
    "TextPair",
    "TextSample",
    "read_labels",
    "read_pairs",
    "render_csv",
    "render_figures",
    "render_table",
    "score_report",
    "score_text_pairs",
    "DEFAULT_TEXT_CONFIG",
    "RougeScore",
    "TextMetricConfig",
    "lcs_length",
    "meteor",
    "meteor_alignment",
    "rouge_l",
    "tokenize",
]
