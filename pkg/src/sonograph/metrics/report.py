"""Evaluation report assembly: scores, plain-text tables, CSV, and figures."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from ..core import EntityClass, SceneGraph
from ..dataset import DatasetFile
from ..errors import SonographError
from .detection import DetectionEvalConfig, DetectionResult, detection_ap
from .relations import RelationEvalConfig, RelationResult, mean_relation_recall
from .text import DEFAULT_TEXT_CONFIG, TextMetricConfig, meteor, rouge_l


@dataclass(frozen=True)
class TextPair:
    """One candidate/reference sentence pair keyed by a stable id."""

    pair_id: str
    candidate: str
    reference: str


@dataclass(frozen=True)
class TextSample:
    pair_id: str
    meteor: float
    rouge_precision: float
    rouge_recall: float
    rouge_f: float


@dataclass
class EvalReport:
    """Everything the evaluation pipeline produces, JSON-serializable."""

    detection: Optional[DetectionResult] = None
    relations: Optional[RelationResult] = None
    text_samples: tuple[TextSample, ...] = ()
    meteor_mean: Optional[float] = None
    rouge_l_mean: Optional[float] = None
    human_acc: Optional[float] = None
    directional_accuracy: Optional[float] = None

    def to_dict(self) -> dict:
        out: dict = {}
        if self.detection is not None:
            d = self.detection
            out["detection"] = {
                "ap50": d.ap50,
                "ap_range": d.ap_range,
                "map_per_threshold": {f"{t:.2f}": v for t, v in d.map_per_threshold.items()},
                "per_class_ap": {
                    f"{t:.2f}": {cls.value: ap for cls, ap in row.items()}
                    for t, row in d.per_class_ap.items()
                },
                "excluded_classes": [c.value for c in d.excluded_classes],
                "pr_curves_50": {cls.value: list(v) for cls, v in d.pr_curves_50.items()},
            }
        if self.relations is not None:
            r = self.relations
            out["relations"] = {
                "recall_at_k": {str(k): v for k, v in r.recall_at_k.items()},
                "mean_recall_at_k": {str(k): v for k, v in r.mean_recall_at_k.items()},
                "per_predicate": {
                    str(k): {p.value: v for p, v in row.items()}
                    for k, row in r.per_predicate.items()
                },
            }
        if self.text_samples:
            out["text"] = {
                "samples": [
                    {
                        "id": s.pair_id,
                        "meteor": s.meteor,
                        "rouge_l": {
                            "precision": s.rouge_precision,
                            "recall": s.rouge_recall,
                            "f": s.rouge_f,
                        },
                    }
                    for s in self.text_samples
                ],
                "meteor_mean": self.meteor_mean,
                "rouge_l_mean": self.rouge_l_mean,
            }
        if self.human_acc is not None:
            out["human_acc"] = self.human_acc
        if self.directional_accuracy is not None:
            out["directional_accuracy"] = self.directional_accuracy
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def score_text_pairs(
    pairs: Sequence[TextPair], cfg: TextMetricConfig = DEFAULT_TEXT_CONFIG
) -> tuple[tuple[TextSample, ...], float, float]:
    out = []
    for p in pairs:
        r = rouge_l(p.candidate, p.reference, cfg)
        out.append(
            TextSample(
                pair_id=p.pair_id,
                meteor=meteor(p.candidate, p.reference, cfg),
                rouge_precision=r.precision,
                rouge_recall=r.recall,
                rouge_f=r.f,
            )
        )
    samples = tuple(out)
    n = len(samples)
    meteor_mean = sum(s.meteor for s in samples) / n if n else 0.0
    rouge_mean = sum(s.rouge_f for s in samples) / n if n else 0.0
    return samples, meteor_mean, rouge_mean


def read_labels(text: str) -> float:
    """Mean pass rate from a human-judgement labels file.

    Layout: {"labels": [{"id": "...", "verdict": "pass"|"fail"}, ...]}
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SonographError("SYNTAX", f"labels file is not valid JSON: {e}") from e
    labels = raw.get("labels") if isinstance(raw, dict) else None
    if not isinstance(labels, list) or not labels:
        raise SonographError("SCHEMA", "labels file must contain a non-empty 'labels' array")
    passes = 0
    for i, entry in enumerate(labels):
        verdict = entry.get("verdict") if isinstance(entry, dict) else None
        if verdict not in ("pass", "fail"):
            raise SonographError("SCHEMA", "verdict must be 'pass' or 'fail'", f"labels[{i}]")
        passes += verdict == "pass"
    return passes / len(labels)


def read_pairs(text: str) -> tuple[TextPair, ...]:
    """Candidate/reference pairs from a scoring file.

    Layout: {"pairs": [{"id": "...", "candidate": "...", "reference": "..."}, ...]}
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SonographError("SYNTAX", f"pairs file is not valid JSON: {e}") from e
    pairs = raw.get("pairs") if isinstance(raw, dict) else None
    if not isinstance(pairs, list) or not pairs:
        raise SonographError("SCHEMA", "pairs file must contain a non-empty 'pairs' array")
    out = []
    for i, entry in enumerate(pairs):
        if not isinstance(entry, dict):
            raise SonographError("SCHEMA", "pair must be an object", f"pairs[{i}]")
        for key in ("id", "candidate", "reference"):
            if not isinstance(entry.get(key), str):
                raise SonographError("SCHEMA", f"pair needs a string {key!r}", f"pairs[{i}]")
        out.append(TextPair(entry["id"], entry["candidate"], entry["reference"]))
    return tuple(out)


def score_report(
    pred: Optional[DatasetFile] = None,
    gt: Optional[DatasetFile] = None,
    text_pairs: Sequence[TextPair] = (),
    labels_text: Optional[str] = None,
    det_cfg: DetectionEvalConfig = DetectionEvalConfig(),
    rel_cfg: RelationEvalConfig = RelationEvalConfig(),
    text_cfg: TextMetricConfig = DEFAULT_TEXT_CONFIG,
) -> EvalReport:
    """Run every applicable metric and assemble the report."""
    report = EvalReport()
    if pred is not None and gt is not None:
        pred_graphs = [rec.sg for rec in pred.images]
        gt_graphs = [rec.sg for rec in gt.images]
        report.detection = detection_ap(pred_graphs, gt_graphs, det_cfg)
        report.relations = mean_relation_recall(pred_graphs, gt_graphs, rel_cfg)
    if text_pairs:
        report.text_samples, report.meteor_mean, report.rouge_l_mean = score_text_pairs(
            text_pairs, text_cfg
        )
    if labels_text is not None:
        report.human_acc = read_labels(labels_text)
    return report


def _fmt(v: Optional[float]) -> str:
    return "   -  " if v is None else f"{v:6.3f}"


def render_table(report: EvalReport) -> str:
    """Plain-text tables mirroring the detection/relation and task-metric layouts."""
    lines: list[str] = []
    if report.detection is not None and report.relations is not None:
        d, r = report.detection, report.relations
        ks = sorted(r.recall_at_k)
        header = "         AP@[50:95]   AP@50" + "".join(
            f"     R@{k:<3d}   mR@{k:<3d}" for k in ks
        )
        lines.append("Object and relation detection")
        lines.append(header)
        row = f"overall      {d.ap_range:6.3f}  {d.ap50:6.3f}"
        for k in ks:
            row += f"    {r.recall_at_k[k]:6.3f}   {r.mean_recall_at_k[k]:6.3f}"
        lines.append(row)
        lines.append("")
        lines.append("Per-class AP@50")
        for cls in EntityClass:
            ap = d.per_class_ap.get(0.5, {}).get(cls)
            note = "  (no ground truth)" if cls in d.excluded_classes else ""
            lines.append(f"  {cls.value:<4s} {_fmt(ap)}{note}")
        lines.append("")
    if report.text_samples or report.human_acc is not None or report.directional_accuracy is not None:
        lines.append("Generated-text metrics")
        lines.append("            Acc    METEOR   ROUGE_L")
        acc = report.human_acc if report.human_acc is not None else report.directional_accuracy
        lines.append(
            f"overall   {_fmt(acc)}   {_fmt(report.meteor_mean)}   {_fmt(report.rouge_l_mean)}"
        )
        lines.append("")
    return "\n".join(lines)


def render_csv(report: EvalReport) -> str:
    """Flat metric,value rows (per-class and per-K included)."""
    rows: list[tuple[str, str]] = []
    if report.detection is not None:
        d = report.detection
        rows.append(("ap50", repr(d.ap50)))
        rows.append(("ap_range", repr(d.ap_range)))
        for t in sorted(d.map_per_threshold):
            rows.append((f"map@{t:.2f}", repr(d.map_per_threshold[t])))
        for t in sorted(d.per_class_ap):
            for cls, ap in d.per_class_ap[t].items():
                rows.append((f"ap@{t:.2f}/{cls.value}", repr(ap)))
    if report.relations is not None:
        r = report.relations
        for k in sorted(r.recall_at_k):
            rows.append((f"recall@{k}", repr(r.recall_at_k[k])))
        for k in sorted(r.mean_recall_at_k):
            rows.append((f"mean_recall@{k}", repr(r.mean_recall_at_k[k])))
    if report.meteor_mean is not None:
        rows.append(("meteor_mean", repr(report.meteor_mean)))
    if report.rouge_l_mean is not None:
        rows.append(("rouge_l_mean", repr(report.rouge_l_mean)))
    if report.human_acc is not None:
        rows.append(("human_acc", repr(report.human_acc)))
    if report.directional_accuracy is not None:
        rows.append(("directional_accuracy", repr(report.directional_accuracy)))
    return "metric,value\n" + "".join(f"{k},{v}\n" for k, v in rows)


def render_figures(report: EvalReport, outdir) -> list[str]:
    """Write the report's figures as PNG files; returns the paths written."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    if report.detection is not None and report.detection.pr_curves_50:
        fig, ax = plt.subplots(figsize=(5, 4))
        recalls = [i / 100 for i in range(101)]
        for cls, curve in report.detection.pr_curves_50.items():
            ax.plot(recalls, curve, label=cls.value)
        ax.set_xlabel("recall")
        ax.set_ylabel("interpolated precision")
        ax.set_title("PR curves at IoU 0.5")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(fontsize=8)
        path = out / "pr_curves_50.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(str(path))

    if report.detection is not None and report.detection.map_per_threshold:
        fig, ax = plt.subplots(figsize=(5, 4))
        ts = sorted(report.detection.map_per_threshold)
        ax.plot(ts, [report.detection.map_per_threshold[t] for t in ts], marker="o")
        ax.set_xlabel("IoU threshold")
        ax.set_ylabel("mAP")
        ax.set_title("mAP across IoU thresholds")
        ax.set_ylim(-0.02, 1.02)
        path = out / "map_vs_iou.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(str(path))

    if report.relations is not None and report.relations.recall_at_k:
        fig, ax = plt.subplots(figsize=(5, 4))
        ks = sorted(report.relations.recall_at_k)
        xs = range(len(ks))
        ax.bar([x - 0.2 for x in xs], [report.relations.recall_at_k[k] for k in ks], 0.4, label="R@K")
        ax.bar(
            [x + 0.2 for x in xs],
            [report.relations.mean_recall_at_k.get(k, 0.0) for k in ks],
            0.4,
            label="mR@K",
        )
        ax.set_xticks(list(xs), [f"K={k}" for k in ks])
        ax.set_ylim(0, 1.05)
        ax.set_title("Relation recall")
        ax.legend()
        path = out / "relation_recall.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(str(path))

    if report.text_samples:
        fig, ax = plt.subplots(figsize=(5, 4))
        names = ["METEOR", "ROUGE_L"]
        ax.bar(names, [report.meteor_mean or 0.0, report.rouge_l_mean or 0.0], color=["#4878d0", "#ee854a"])
        ax.set_ylim(0, 1.05)
        ax.set_title(f"Text metrics over {len(report.text_samples)} samples")
        path = out / "text_metrics.png"
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(str(path))

    return written
