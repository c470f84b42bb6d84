"""Domain vocabulary, scene-graph data model, and geometric primitives.

Everything here is an immutable value; all operations are pure functions.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, Optional


class EntityClass(Enum):
    """The five carotid-region anatomical structures."""

    CCA = "CCA"
    IJV = "IJV"
    CR = "CR"
    TH = "TH"
    VB = "VB"

    @property
    def display_name(self) -> str:
        return _ENTITY_DISPLAY[self]

    @property
    def order(self) -> int:
        """Canonical position in the vocabulary (CCA first, VB last)."""
        return _ENTITY_ORDER[self]


_ENTITY_DISPLAY = {
    EntityClass.CCA: "Carotid Common Artery",
    EntityClass.IJV: "Internal Jugular Vein",
    EntityClass.CR: "Cartilage Ring",
    EntityClass.TH: "Thyroid",
    EntityClass.VB: "Vertebral Body",
}

_ENTITY_ORDER = {cls: i for i, cls in enumerate(EntityClass)}

ENTITY_VOCABULARY: tuple[EntityClass, ...] = tuple(EntityClass)


class PredicateClass(Enum):
    """The three anatomical interaction modes."""

    CONTIGUOUS_WITH = "is contiguous with"
    PARTIALLY_ENCASES = "partially encases"
    SUPERIOR_TO = "is superior to"

    @property
    def display_name(self) -> str:
        return self.value


PREDICATE_VOCABULARY: tuple[PredicateClass, ...] = tuple(PredicateClass)


class LateralSide(Enum):
    """Which side of the neck a frame images."""

    LEFT = "left"
    RIGHT = "right"
    UNKNOWN = "unknown"

    def flipped(self) -> "LateralSide":
        if self is LateralSide.LEFT:
            return LateralSide.RIGHT
        if self is LateralSide.RIGHT:
            return LateralSide.LEFT
        return LateralSide.UNKNOWN


class MoveDirection(Enum):
    """Probe motion direction in the image frame."""

    IMAGE_LEFT = "image-left"
    IMAGE_RIGHT = "image-right"
    STATIC = "static"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left corner plus size, in pixels (y grows downward)."""

    x: float
    y: float
    w: float
    h: float

    @property
    def cx(self) -> float:
        return self.x + self.w / 2

    @property
    def cy(self) -> float:
        return self.y + self.h / 2

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Detection:
    """One detected entity instance. ``score is None`` marks ground truth (treated as 1.0)."""

    cls: EntityClass
    box: BBox
    score: Optional[float] = None

    @property
    def effective_score(self) -> float:
        return 1.0 if self.score is None else self.score


@dataclass(frozen=True)
class Triplet:
    """<subject, predicate, object> relation; sub/obj index the owning graph's detections."""

    sub: int
    pred: PredicateClass
    obj: int
    score: Optional[float] = None

    @property
    def effective_score(self) -> float:
        return 1.0 if self.score is None else self.score


@dataclass(frozen=True)
class SceneGraph:
    """Per-frame detections plus relation triplets."""

    image_id: str
    width: int
    height: int
    detections: tuple[Detection, ...] = ()
    triplets: tuple[Triplet, ...] = ()

    def triplet_classes(self, t: Triplet) -> tuple[EntityClass, PredicateClass, EntityClass]:
        return (self.detections[t.sub].cls, t.pred, self.detections[t.obj].cls)


@dataclass(frozen=True)
class LateralMovement:
    """Probe lateral motion inferred between two consecutive frames.

    ``direction`` is in the probe frame (opposite of the anatomy's image shift);
    ``anatomy_dx_px`` keeps the signed image-frame shift for auditing.
    """

    direction: MoveDirection
    magnitude_px: float = 0.0
    reference_entity: Optional[EntityClass] = None
    anatomy_dx_px: float = 0.0


@dataclass(frozen=True)
class Violation:
    """One scene-graph invariant violation."""

    code: str
    path: str
    message: str


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes; 0.0 when disjoint."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


def flip_horizontal(sg: SceneGraph) -> SceneGraph:
    """Mirror a scene graph around the vertical image axis.

    Boxes map x -> width - x - w; classes, scores, triplets, and predicates are
    unchanged (all three predicates are horizontally orientation-agnostic).
    """
    flipped = tuple(
        replace(d, box=replace(d.box, x=sg.width - d.box.x - d.box.w))
        for d in sg.detections
    )
    return replace(sg, detections=flipped)


def present_entities(sg: SceneGraph) -> set[EntityClass]:
    return {d.cls for d in sg.detections}


def missing_entities(sg: SceneGraph) -> set[EntityClass]:
    """Vocabulary entities with no detection in the graph."""
    return set(ENTITY_VOCABULARY) - present_entities(sg)


def validate(sg: SceneGraph) -> list[Violation]:
    """Return every invariant violation; an empty list means the graph is well formed."""
    out: list[Violation] = []
    for i, d in enumerate(sg.detections):
        path = f"detections[{i}]"
        if d.box.w <= 0 or d.box.h <= 0:
            out.append(Violation("BAD_BOX", path, f"non-positive box size {d.box.w}x{d.box.h}"))
        elif (
            d.box.x < 0
            or d.box.y < 0
            or d.box.x + d.box.w > sg.width
            or d.box.y + d.box.h > sg.height
        ):
            out.append(Violation("BOX_OUT_OF_BOUNDS", path, "box extends outside the image"))
        if d.score is not None and not 0.0 <= d.score <= 1.0:
            out.append(Violation("BAD_SCORE", path, f"score {d.score} outside [0, 1]"))

    n = len(sg.detections)
    seen_pairs: set[tuple[int, int]] = set()
    for i, t in enumerate(sg.triplets):
        path = f"triplets[{i}]"
        if not (0 <= t.sub < n and 0 <= t.obj < n):
            out.append(Violation("INDEX_OUT_OF_RANGE", path, f"indices ({t.sub}, {t.obj}) with {n} detections"))
            continue
        if t.sub == t.obj:
            out.append(Violation("SELF_RELATION", path, f"subject equals object ({t.sub})"))
            continue
        if (t.sub, t.obj) in seen_pairs:
            out.append(Violation("DUPLICATE_PAIR", path, f"second triplet on pair ({t.sub}, {t.obj})"))
        seen_pairs.add((t.sub, t.obj))
        if t.score is not None and not 0.0 <= t.score <= 1.0:
            out.append(Violation("BAD_SCORE", path, f"score {t.score} outside [0, 1]"))
    return out


class Predictor(ABC):
    """A scene-graph source: maps a frame reference (image id or probe pose) to a graph."""

    @abstractmethod
    def predict(self, frame) -> SceneGraph:
        raise NotImplementedError


_PREDICTOR_REGISTRY: dict[str, Callable[..., Predictor]] = {}


def register_predictor(name: str, factory: Callable[..., Predictor]) -> None:
    _PREDICTOR_REGISTRY[name] = factory


def predictor_factory(name: str) -> Callable[..., Predictor]:
    try:
        return _PREDICTOR_REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_PREDICTOR_REGISTRY))
        raise KeyError(f"unknown predictor {name!r} (registered: {known})") from None


def entity_by_key(key: str) -> EntityClass:
    return EntityClass(key)


def predicate_by_display(display: str) -> PredicateClass:
    return PredicateClass(display)
