"""Scene graphs to prompt text: side and movement inference, prompt assembly."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Optional

from .core import (
    Detection,
    EntityClass,
    LateralMovement,
    LateralSide,
    MoveDirection,
    SceneGraph,
)
from .errors import SonographError


class TaskKind(Enum):
    SUMMARIZATION = "summarization"
    GUIDANCE = "guidance"


@dataclass(frozen=True)
class SideConvention:
    """Probe-marker convention: does image-left correspond to the patient's right."""

    image_left_is_patient_right: bool = True


@dataclass(frozen=True)
class MovementConfig:
    priority: tuple[EntityClass, ...] = (
        EntityClass.CCA,
        EntityClass.IJV,
        EntityClass.TH,
        EntityClass.CR,
        EntityClass.VB,
    )
    static_frac: float = 0.01

    def validate(self) -> None:
        if sorted(self.priority, key=lambda e: e.order) != list(EntityClass):
            raise SonographError("BAD_CONFIG", "priority must be a permutation of the vocabulary")
        if self.static_frac <= 0:
            raise SonographError("BAD_CONFIG", "static threshold must be positive")


@dataclass(frozen=True)
class GroundingPrompt:
    triplet_lines: tuple[str, ...]
    side_line: str
    movement_line: Optional[str]
    text: str


@dataclass(frozen=True)
class TaskInstruction:
    task: TaskKind
    template_id: str
    version: int
    text: str


def _best_instance(sg: SceneGraph, cls: EntityClass) -> Optional[Detection]:
    candidates = [d for d in sg.detections if d.cls is cls]
    if not candidates:
        return None
    return max(candidates, key=lambda d: d.effective_score)


def infer_lateral_side(sg: SceneGraph, conv: SideConvention = SideConvention()) -> LateralSide:
    """Scanned side from CCA's position relative to a midline landmark (CR, else VB)."""
    cca = _best_instance(sg, EntityClass.CCA)
    reference = _best_instance(sg, EntityClass.CR) or _best_instance(sg, EntityClass.VB)
    if cca is None or reference is None or cca.box.cx == reference.box.cx:
        return LateralSide.UNKNOWN
    cca_on_image_left = cca.box.cx < reference.box.cx
    patient_right = cca_on_image_left == conv.image_left_is_patient_right
    return LateralSide.RIGHT if patient_right else LateralSide.LEFT


def infer_lateral_movement(
    prev: SceneGraph, curr: SceneGraph, cfg: MovementConfig = MovementConfig()
) -> LateralMovement:
    """Probe-frame lateral motion from the shift of a shared reference entity."""
    cfg.validate()
    if prev.width != curr.width or prev.height != curr.height:
        raise SonographError(
            "DIMENSION_MISMATCH",
            f"frames are {prev.width}x{prev.height} vs {curr.width}x{curr.height}",
        )
    eps = cfg.static_frac * curr.width
    for cls in cfg.priority:
        a = _best_instance(prev, cls)
        b = _best_instance(curr, cls)
        if a is None or b is None:
            continue
        dx = b.box.cx - a.box.cx
        if abs(dx) <= eps:
            direction = MoveDirection.STATIC
        elif dx > 0:
            # anatomy drifting image-right means the probe itself moved image-left
            direction = MoveDirection.IMAGE_LEFT
        else:
            direction = MoveDirection.IMAGE_RIGHT
        return LateralMovement(
            direction=direction,
            magnitude_px=abs(dx),
            reference_entity=cls,
            anatomy_dx_px=dx,
        )
    return LateralMovement(direction=MoveDirection.UNKNOWN)


def _template(name: str, version: int) -> str:
    ref = resources.files("sonograph") / "templates" / f"{name}_v{version}.txt"
    return ref.read_text(encoding="utf-8")


_SIDE_TEXT = {
    LateralSide.LEFT: "left",
    LateralSide.RIGHT: "right",
    LateralSide.UNKNOWN: "undetermined",
}
_MOVEMENT_TEXT = {
    MoveDirection.IMAGE_LEFT: "toward image-left",
    MoveDirection.IMAGE_RIGHT: "toward image-right",
    MoveDirection.STATIC: "static",
    MoveDirection.UNKNOWN: "undetermined",
}

TEMPLATE_VERSION = 1


def triplet_line(sg: SceneGraph, index: int) -> str:
    t = sg.triplets[index]
    sub = sg.detections[t.sub].cls.display_name
    obj = sg.detections[t.obj].cls.display_name
    return f"<{sub}, {t.pred.value}, {obj}>"


def render_grounding(
    sg: SceneGraph,
    side: LateralSide,
    movement: Optional[LateralMovement] = None,
    task: TaskKind = TaskKind.SUMMARIZATION,
) -> GroundingPrompt:
    """Assemble the grounding block: triplet lines, side line, movement line for guidance."""
    if task is TaskKind.GUIDANCE and movement is None:
        raise SonographError("MISSING_MOVEMENT", "guidance prompts need a movement estimate")
    order = sorted(
        range(len(sg.triplets)),
        key=lambda i: (
            sg.detections[sg.triplets[i].sub].cls.order,
            sg.detections[sg.triplets[i].obj].cls.order,
        ),
    )
    lines = tuple(triplet_line(sg, i) for i in order)
    side_line = f"Scanned side: {_SIDE_TEXT[side]} neck."
    movement_line = None
    template_name = "grounding_summarization"
    if task is TaskKind.GUIDANCE:
        assert movement is not None
        movement_line = f"Probe lateral movement: {_MOVEMENT_TEXT[movement.direction]}."
        template_name = "grounding_guidance"
    text = _template(template_name, TEMPLATE_VERSION)
    if lines:
        text = text.replace("{TRIPLETS}", "\n".join(lines))
    else:
        text = text.replace("{TRIPLETS}\n", "")
    text = text.replace("{SIDE}", _SIDE_TEXT[side])
    if movement is not None and task is TaskKind.GUIDANCE:
        text = text.replace("{MOVEMENT}", _MOVEMENT_TEXT[movement.direction])
    return GroundingPrompt(
        triplet_lines=lines, side_line=side_line, movement_line=movement_line, text=text
    )


def render_task_instruction(task: TaskKind, user_query: str) -> TaskInstruction:
    """Fixed per-task instruction text with the user query embedded verbatim."""
    if not user_query.strip():
        raise SonographError("EMPTY_QUERY", "the user query must not be empty")
    name = "task_summarization" if task is TaskKind.SUMMARIZATION else "task_guidance"
    text = _template(name, TEMPLATE_VERSION).replace("{QUERY}", user_query)
    return TaskInstruction(task=task, template_id=name, version=TEMPLATE_VERSION, text=text)
