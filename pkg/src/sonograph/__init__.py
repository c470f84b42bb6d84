"""Scene-graph grounded carotid ultrasound understanding toolkit."""

from .core import (
    BBox,
    Detection,
    EntityClass,
    LateralMovement,
    LateralSide,
    MoveDirection,
    PredicateClass,
    Predictor,
    SceneGraph,
    Triplet,
    Violation,
    flip_horizontal,
    iou,
    predictor_factory,
    register_predictor,
    validate,
)
from .errors import SonographError

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "Detection",
    "EntityClass",
    "LateralMovement",
    "LateralSide",
    "MoveDirection",
    "PredicateClass",
    "Predictor",
    "SceneGraph",
    "SonographError",
    "Triplet",
    "Violation",
    "flip_horizontal",
    "iou",
    "predictor_factory",
    "register_predictor",
    "validate",
    "__version__",
]
