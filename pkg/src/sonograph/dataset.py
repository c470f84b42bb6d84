"""Annotation/prediction dataset format: parse, validate, write, flip-augment, replay.

One JSON layout serves both ground truth and predictions; the only difference
is whether boxes and relations carry a ``score`` field.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

from .core import (
    BBox,
    Detection,
    EntityClass,
    LateralSide,
    PredicateClass,
    Predictor,
    SceneGraph,
    Triplet,
    flip_horizontal,
    register_predictor,
    validate,
)
from .errors import SonographError

log = logging.getLogger(__name__)

DATASET_VERSION = 1
CATEGORY_KEYS = tuple(e.value for e in EntityClass)
PREDICATE_STRINGS = tuple(p.value for p in PredicateClass)

FLIP_SUFFIX = "_hf"


class DatasetError(SonographError):
    pass


@dataclass(frozen=True)
class ImageRecord:
    """One annotated frame: a scene graph plus an optional lateral-side label."""

    sg: SceneGraph
    side: LateralSide = LateralSide.UNKNOWN


@dataclass(frozen=True)
class DatasetFile:
    version: int = DATASET_VERSION
    categories: tuple[str, ...] = CATEGORY_KEYS
    predicates: tuple[str, ...] = PREDICATE_STRINGS
    images: tuple[ImageRecord, ...] = ()

    def ids(self) -> list[str]:
        return [rec.sg.image_id for rec in self.images]

    def by_id(self) -> dict[str, ImageRecord]:
        return {rec.sg.image_id: rec for rec in self.images}


_IMAGE_FIELDS = {"id", "width", "height", "side", "boxes", "relations"}
_BOX_FIELDS = {"cls", "x", "y", "w", "h", "score"}
_REL_FIELDS = {"sub", "pred", "obj", "score"}
_TOP_FIELDS = {"version", "categories", "predicates", "images"}

# sg-core validation codes folded into the dataset error vocabulary
_VALIDATE_CODE_MAP = {
    "INDEX_OUT_OF_RANGE": "REF",
    "SELF_RELATION": "REF",
    "DUPLICATE_PAIR": "REF",
    "BOX_OUT_OF_BOUNDS": "BOUNDS",
    "BAD_BOX": "BOUNDS",
    "BAD_SCORE": "SCHEMA",
}


def _require(obj: dict, key: str, kind, path: str):
    if key not in obj:
        raise DatasetError("SCHEMA", f"missing required field {key!r}", path)
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DatasetError("SCHEMA", f"field {key!r} must be a number", f"{path}.{key}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise DatasetError("SCHEMA", f"field {key!r} must be an integer", f"{path}.{key}")
        return value
    if not isinstance(value, kind):
        raise DatasetError("SCHEMA", f"field {key!r} has wrong type", f"{path}.{key}")
    return value


def _check_extra(obj: dict, allowed: set[str], path: str, strict: bool):
    extra = sorted(set(obj) - allowed)
    if not extra:
        return
    if strict:
        raise DatasetError("SCHEMA", f"unknown fields {extra}", path)
    log.warning("ignoring unknown fields %s at %s", extra, path)


def _parse_score(obj: dict, path: str):
    if "score" not in obj:
        return None
    score = obj["score"]
    if isinstance(score, bool) or not isinstance(score, (int, float)):
        raise DatasetError("SCHEMA", "score must be a number", f"{path}.score")
    if not 0.0 <= score <= 1.0:
        raise DatasetError("SCHEMA", f"score {score} outside [0, 1]", f"{path}.score")
    return float(score)


def parse_dataset(text: str, strict: bool = True) -> DatasetFile:
    """Parse and fully validate dataset text.

    Raises DatasetError with code SYNTAX, SCHEMA, VOCAB, REF, or BOUNDS; the
    error carries the image id / field path of the offending element.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise DatasetError("SYNTAX", f"not well-formed JSON: {e}") from e
    if not isinstance(raw, dict):
        raise DatasetError("SCHEMA", "top level must be an object")
    _check_extra(raw, _TOP_FIELDS, "$", strict)

    version = _require(raw, "version", int, "$")
    if version != DATASET_VERSION:
        raise DatasetError("SCHEMA", f"unsupported version {version}", "$.version")
    categories = _require(raw, "categories", list, "$")
    if tuple(categories) != CATEGORY_KEYS:
        raise DatasetError("VOCAB", f"categories must be {list(CATEGORY_KEYS)}", "$.categories")
    predicates = _require(raw, "predicates", list, "$")
    if tuple(predicates) != PREDICATE_STRINGS:
        raise DatasetError("VOCAB", f"predicates must be {list(PREDICATE_STRINGS)}", "$.predicates")

    images_raw = _require(raw, "images", list, "$")
    images: list[ImageRecord] = []
    seen_ids: set[str] = set()
    for i, img in enumerate(images_raw):
        path = f"images[{i}]"
        if not isinstance(img, dict):
            raise DatasetError("SCHEMA", "image entry must be an object", path)
        _check_extra(img, _IMAGE_FIELDS, path, strict)
        image_id = _require(img, "id", str, path)
        if image_id in seen_ids:
            raise DatasetError("SCHEMA", f"duplicate image id {image_id!r}", f"{path}.id")
        seen_ids.add(image_id)
        width = _require(img, "width", int, path)
        height = _require(img, "height", int, path)
        if width <= 0 or height <= 0:
            raise DatasetError("SCHEMA", "width and height must be positive", path)

        side = LateralSide.UNKNOWN
        if "side" in img:
            try:
                side = LateralSide(img["side"])
            except ValueError:
                raise DatasetError("SCHEMA", f"side must be left/right/unknown, got {img['side']!r}", f"{path}.side") from None

        detections: list[Detection] = []
        for j, box in enumerate(_require(img, "boxes", list, path)):
            bpath = f"{path}.boxes[{j}]"
            if not isinstance(box, dict):
                raise DatasetError("SCHEMA", "box entry must be an object", bpath)
            _check_extra(box, _BOX_FIELDS, bpath, strict)
            cls_key = _require(box, "cls", str, bpath)
            try:
                cls = EntityClass(cls_key)
            except ValueError:
                raise DatasetError("VOCAB", f"unknown entity class {cls_key!r}", f"{bpath}.cls") from None
            bbox = BBox(
                x=_require(box, "x", float, bpath),
                y=_require(box, "y", float, bpath),
                w=_require(box, "w", float, bpath),
                h=_require(box, "h", float, bpath),
            )
            detections.append(Detection(cls=cls, box=bbox, score=_parse_score(box, bpath)))

        triplets: list[Triplet] = []
        for j, rel in enumerate(_require(img, "relations", list, path)):
            rpath = f"{path}.relations[{j}]"
            if not isinstance(rel, dict):
                raise DatasetError("SCHEMA", "relation entry must be an object", rpath)
            _check_extra(rel, _REL_FIELDS, rpath, strict)
            pred_str = _require(rel, "pred", str, rpath)
            try:
                pred = PredicateClass(pred_str)
            except ValueError:
                raise DatasetError("VOCAB", f"unknown predicate {pred_str!r}", f"{rpath}.pred") from None
            triplets.append(
                Triplet(
                    sub=_require(rel, "sub", int, rpath),
                    pred=pred,
                    obj=_require(rel, "obj", int, rpath),
                    score=_parse_score(rel, rpath),
                )
            )

        sg = SceneGraph(
            image_id=image_id,
            width=width,
            height=height,
            detections=tuple(detections),
            triplets=tuple(triplets),
        )
        for v in validate(sg):
            code = _VALIDATE_CODE_MAP.get(v.code, "SCHEMA")
            # report in file vocabulary, not scene-graph field names
            vpath = v.path.replace("detections[", "boxes[").replace("triplets[", "relations[")
            raise DatasetError(code, v.message, f"{path}.{vpath}")
        images.append(ImageRecord(sg=sg, side=side))

    return DatasetFile(images=tuple(images))


def _num(value: float):
    # canonical form writes integral coordinates as ints
    return int(value) if float(value).is_integer() else value


def write_dataset(d: DatasetFile) -> str:
    """Canonical serialization: fixed key order, input image order, byte-stable."""
    payload = {
        "version": d.version,
        "categories": list(d.categories),
        "predicates": list(d.predicates),
        "images": [],
    }
    for rec in d.images:
        sg = rec.sg
        boxes = []
        for det in sg.detections:
            box = {
                "cls": det.cls.value,
                "x": _num(det.box.x),
                "y": _num(det.box.y),
                "w": _num(det.box.w),
                "h": _num(det.box.h),
            }
            if det.score is not None:
                box["score"] = det.score
            boxes.append(box)
        relations = []
        for t in sg.triplets:
            rel = {"sub": t.sub, "pred": t.pred.value, "obj": t.obj}
            if t.score is not None:
                rel["score"] = t.score
            relations.append(rel)
        payload["images"].append(
            {
                "id": sg.image_id,
                "width": sg.width,
                "height": sg.height,
                "side": rec.side.value,
                "boxes": boxes,
                "relations": relations,
            }
        )
    return json.dumps(payload, indent=2) + "\n"


def augment_flip(d: DatasetFile) -> DatasetFile:
    """Append a horizontally flipped copy of every image (id suffixed "_hf").

    Side labels swap left/right; unknown stays unknown. Output has twice the
    images of the input.
    """
    for i, rec in enumerate(d.images):
        if rec.sg.image_id.endswith(FLIP_SUFFIX):
            raise DatasetError(
                "DUPLICATE_ID",
                f"image id {rec.sg.image_id!r} already carries the flip suffix",
                f"images[{i}].id",
            )
    flipped = tuple(
        ImageRecord(
            sg=replace(flip_horizontal(rec.sg), image_id=rec.sg.image_id + FLIP_SUFFIX),
            side=rec.side.flipped(),
        )
        for rec in d.images
    )
    return replace(d, images=d.images + flipped)


class ReplayPredictor(Predictor):
    """Serves stored prediction graphs by image id."""

    def __init__(self, predictions: DatasetFile):
        for i, rec in enumerate(predictions.images):
            sg = rec.sg
            for j, det in enumerate(sg.detections):
                if det.score is None:
                    raise DatasetError("MISSING_SCORES", "box without score", f"images[{i}].boxes[{j}]")
            for j, t in enumerate(sg.triplets):
                if t.score is None:
                    raise DatasetError("MISSING_SCORES", "relation without score", f"images[{i}].relations[{j}]")
        self._graphs = {rec.sg.image_id: rec.sg for rec in predictions.images}

    def predict(self, frame: str) -> SceneGraph:
        try:
            return self._graphs[frame]
        except KeyError:
            raise DatasetError("UNKNOWN_IMAGE", f"no stored prediction for image {frame!r}") from None


def replay_predictor(predictions: DatasetFile) -> ReplayPredictor:
    return ReplayPredictor(predictions)


register_predictor("replay", replay_predictor)


def load_dataset(path, strict: bool = True) -> DatasetFile:
    with open(path, "r", encoding="utf-8") as f:
        return parse_dataset(f.read(), strict=strict)


def save_dataset(d: DatasetFile, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(write_dataset(d))
