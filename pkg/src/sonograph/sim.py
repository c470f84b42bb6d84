"""Procedural 2D neck model: pose-conditioned scene-graph synthesis and guidance.

Anatomy is abstracted as per-entity ellipse tracks parameterized by the probe's
longitudinal position z. The whole bundle shifts laterally with the probe offset
u, so relative geometry (and therefore the relation set) depends only on z;
what changes with u is which ellipses still intersect the image. Right-side
frames are built by mirroring the left frame at -u, which makes the mirror
invariant exact rather than approximate.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

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
)
from .errors import SonographError

# One probe step; all guidance and session poses live on this grid.
POSE_STEP = 0.05
_GRID_DENOM = 20


def quantize(value: float) -> float:
    """Snap a coordinate to the probe-step grid (n/20 exactly)."""
    return round(value * _GRID_DENOM) / _GRID_DENOM


class GuideDirection(Enum):
    CRANIAL = "cranial"
    CAUDAL = "caudal"
    MEDIAL = "medial"
    LATERAL = "lateral"


@dataclass(frozen=True)
class ProbePose:
    """Virtual probe state: longitudinal z in [0,1], lateral u in [-1,1], side."""

    z: float
    u: float
    side: LateralSide = LateralSide.LEFT

    def __post_init__(self) -> None:
        if not (isinstance(self.z, (int, float)) and 0.0 <= self.z <= 1.0):
            raise SonographError("BAD_CONFIG", f"pose z must be in [0,1], got {self.z!r}")
        if not (isinstance(self.u, (int, float)) and -1.0 <= self.u <= 1.0):
            raise SonographError("BAD_CONFIG", f"pose u must be in [-1,1], got {self.u!r}")
        if self.side not in (LateralSide.LEFT, LateralSide.RIGHT):
            raise SonographError("BAD_CONFIG", f"pose side must be left or right, got {self.side!r}")
        # +0.0 canonicalizes -0.0 so ids and rng keys do not fork on sign of zero
        object.__setattr__(self, "z", float(self.z) + 0.0)
        object.__setattr__(self, "u", float(self.u) + 0.0)

    def quantized(self) -> "ProbePose":
        return ProbePose(quantize(self.z), quantize(self.u), self.side)


@dataclass(frozen=True)
class Advice:
    """Guidance outcome: already visible, or a single-axis probe move."""

    visible: bool
    direction: Optional[GuideDirection] = None
    steps: int = 0


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    rx: float
    ry: float

    def contains(self, x: float, y: float) -> bool:
        return ((x - self.cx) / self.rx) ** 2 + ((y - self.cy) / self.ry) ** 2 <= 1.0


@dataclass(frozen=True)
class EllipseTrack:
    """One entity's geometry: center path over (z, u) plus a presence interval."""

    entity: EntityClass
    x: float
    y: float
    rx: float
    ry: float
    z_lo: float
    z_hi: float
    x_slope: float = 0.0
    y_slope: float = 0.0

    def present_at(self, z: float) -> bool:
        return self.z_lo <= z <= self.z_hi

    def ellipse_at(self, z: float, u: float, lateral_shift_px: float) -> Ellipse:
        cx = self.x + self.x_slope * (z - 0.5) + lateral_shift_px * u
        cy = self.y + self.y_slope * (z - 0.5)
        return Ellipse(cx, cy, self.rx, self.ry)


@dataclass(frozen=True)
class NeckModel:
    tracks: tuple[EllipseTrack, ...]
    width: int = 829
    height: int = 770
    depth_mm: float = 45.0
    focus_mm: float = 20.0
    lateral_shift_px: float = 330.0
    contiguity_gap_px: float = 10.0
    encasement_min_deg: float = 120.0
    superior_margin_px: float = 40.0

    def validate(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise SonographError("BAD_CONFIG", "image dimensions must be positive")
        if self.contiguity_gap_px < 0 or self.superior_margin_px < 0:
            raise SonographError("BAD_CONFIG", "rule thresholds must be nonnegative")
        if not 0 < self.encasement_min_deg <= 360:
            raise SonographError("BAD_CONFIG", "encasement_min_deg must be in (0,360]")
        seen = [t.entity for t in self.tracks]
        if seen != sorted(set(seen), key=lambda e: e.order) or len(seen) != len(EntityClass):
            raise SonographError("BAD_CONFIG", "model needs exactly one track per entity, in class order")
        for t in self.tracks:
            if t.rx <= 0 or t.ry <= 0:
                raise SonographError("BAD_CONFIG", f"{t.entity.value}: radii must be positive")
            if not (0.0 <= t.z_lo <= t.z_hi <= 1.0):
                raise SonographError("BAD_CONFIG", f"{t.entity.value}: bad presence interval")
            if t.entity in (EntityClass.CCA, EntityClass.IJV) and (t.z_lo != 0.0 or t.z_hi != 1.0):
                raise SonographError("BAD_CONFIG", f"{t.entity.value} must be present on all of [0,1]")

    def track_for(self, entity: EntityClass) -> EllipseTrack:
        for t in self.tracks:
            if t.entity is entity:
                return t
        raise SonographError("BAD_CONFIG", f"no track for {entity.value}")


def default_model() -> NeckModel:
    """Left-frame layout: vessels lateral, airway structures medial, VB deepest."""
    model = NeckModel(
        tracks=(
            EllipseTrack(EntityClass.CCA, x=414, y=430, rx=55, ry=55, z_lo=0.0, z_hi=1.0),
            EllipseTrack(EntityClass.IJV, x=504, y=320, rx=75, ry=45, z_lo=0.0, z_hi=1.0),
            EllipseTrack(EntityClass.CR, x=234, y=365, rx=60, ry=50, z_lo=0.35, z_hi=0.80),
            EllipseTrack(EntityClass.TH, x=344, y=430, rx=150, ry=90, z_lo=0.25, z_hi=0.70),
            EllipseTrack(EntityClass.VB, x=204, y=610, rx=70, ry=60, z_lo=0.0, z_hi=1.0, y_slope=40.0),
        )
    )
    model.validate()
    return model


def _clipped_box(e: Ellipse, width: int, height: int) -> Optional[BBox]:
    """Integer AABB of the ellipse clipped to the image; None when fully outside."""
    x0 = max(0, math.floor(e.cx - e.rx))
    x1 = min(width, math.ceil(e.cx + e.rx))
    y0 = max(0, math.floor(e.cy - e.ry))
    y1 = min(height, math.ceil(e.cy + e.ry))
    if x1 <= x0 or y1 <= y0:
        return None
    return BBox(x0, y0, x1 - x0, y1 - y0)


_RAY_COUNT = 360
_RAY_COS = np.cos(np.arange(_RAY_COUNT) * (math.pi / 180.0))
_RAY_SIN = np.sin(np.arange(_RAY_COUNT) * (math.pi / 180.0))


def _ray_entry(e: Ellipse, px: float, py: float) -> np.ndarray:
    """Distance along each of the 360 rays from (px,py) to first entry into e (inf = miss)."""
    x0 = (px - e.cx) / e.rx
    y0 = (py - e.cy) / e.ry
    c = x0 * x0 + y0 * y0 - 1.0
    if c <= 0.0:
        return np.zeros(_RAY_COUNT)
    dx = _RAY_COS / e.rx
    dy = _RAY_SIN / e.ry
    a = dx * dx + dy * dy
    b = x0 * dx + y0 * dy
    disc = b * b - a * c
    t = np.full(_RAY_COUNT, np.inf)
    ok = disc >= 0.0
    root = np.full(_RAY_COUNT, np.inf)
    root[ok] = (-b[ok] - np.sqrt(disc[ok])) / a[ok]
    t[ok & (root >= 0.0)] = root[ok & (root >= 0.0)]
    return t


def _encasement_coverage(items: Sequence[tuple[EntityClass, Ellipse]]) -> np.ndarray:
    """coverage[j][i] = rays from item j's center whose first hit within reach is item i."""
    n = len(items)
    reach = 1.5 * max(max(e.rx, e.ry) for _, e in items)
    coverage = np.zeros((n, n), dtype=int)
    for j, (_, source) in enumerate(items):
        ts = np.full((n, _RAY_COUNT), np.inf)
        for i, (_, e) in enumerate(items):
            if i != j:
                ts[i] = _ray_entry(e, source.cx, source.cy)
        ts[ts > reach] = np.inf
        first = ts.argmin(axis=0)
        hit = np.isfinite(ts.min(axis=0))
        for i in range(n):
            coverage[j, i] = int(((first == i) & hit).sum())
    return coverage


_BOUNDARY_SAMPLES = 720
_BOUNDARY_COS = np.cos(np.linspace(0.0, 2.0 * math.pi, _BOUNDARY_SAMPLES, endpoint=False))
_BOUNDARY_SIN = np.sin(np.linspace(0.0, 2.0 * math.pi, _BOUNDARY_SAMPLES, endpoint=False))


def _boundary_points(e: Ellipse) -> tuple[np.ndarray, np.ndarray]:
    return e.cx + e.rx * _BOUNDARY_COS, e.cy + e.ry * _BOUNDARY_SIN


def _contiguous(a: Ellipse, b: Ellipse, gap: float) -> bool:
    dist = math.hypot(a.cx - b.cx, a.cy - b.cy)
    # boundary lies within max(rx,ry) of the center, so this bound is rigorous
    if dist - max(a.rx, a.ry) - max(b.rx, b.ry) > gap:
        return False
    if a.contains(b.cx, b.cy) or b.contains(a.cx, a.cy):
        return True
    ax, ay = _boundary_points(a)
    bx, by = _boundary_points(b)
    inside = ((ax - b.cx) / b.rx) ** 2 + ((ay - b.cy) / b.ry) ** 2 <= 1.0
    if inside.any():
        return True
    inside = ((bx - a.cx) / a.rx) ** 2 + ((by - a.cy) / a.ry) ** 2 <= 1.0
    if inside.any():
        return True
    d2 = (ax[:, None] - bx[None, :]) ** 2 + (ay[:, None] - by[None, :]) ** 2
    return bool(d2.min() <= gap * gap)


def derive_relations(
    model: NeckModel, items: Sequence[tuple[EntityClass, Ellipse]]
) -> tuple[Triplet, ...]:
    """Rule-based triplets over visible ellipses, one per ordered pair at most.

    Priority per ordered pair (A,B): partial encasement (ray coverage of A from
    B's center in [theta_min, 360) degrees), then superiority (A at least
    margin px shallower with horizontally overlapping extents), then contiguity
    (boundary gap <= threshold or overlap), the last emitted once per unordered
    pair with the lower-class subject.
    """
    n = len(items)
    if n == 0:
        return ()
    coverage = _encasement_coverage(items) if n > 1 else np.zeros((1, 1), dtype=int)
    triplets: list[Triplet] = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            cls_i, e_i = items[i]
            cls_j, e_j = items[j]
            cov = coverage[j, i]
            if model.encasement_min_deg <= cov * (360.0 / _RAY_COUNT) and cov < _RAY_COUNT:
                triplets.append(Triplet(i, PredicateClass.PARTIALLY_ENCASES, j, score=1.0))
                continue
            if e_i.cy < e_j.cy - model.superior_margin_px and abs(e_i.cx - e_j.cx) < e_i.rx + e_j.rx:
                triplets.append(Triplet(i, PredicateClass.SUPERIOR_TO, j, score=1.0))
                continue
            if i < j and _contiguous(e_i, e_j, model.contiguity_gap_px):
                triplets.append(Triplet(i, PredicateClass.CONTIGUOUS_WITH, j, score=1.0))
    return tuple(triplets)


def _visible_items(model: NeckModel, z: float, u: float) -> list[tuple[EntityClass, Ellipse, BBox]]:
    out = []
    for t in model.tracks:
        if not t.present_at(z):
            continue
        e = t.ellipse_at(z, u, model.lateral_shift_px)
        box = _clipped_box(e, model.width, model.height)
        if box is not None:
            out.append((t.entity, e, box))
    return out


@lru_cache(maxsize=4096)
def _left_frame(model: NeckModel, z: float, u: float, image_id: str) -> SceneGraph:
    items = _visible_items(model, z, u)
    detections = tuple(Detection(cls, box, score=1.0) for cls, _, box in items)
    triplets = derive_relations(model, [(cls, e) for cls, e, _ in items])
    return SceneGraph(
        image_id=image_id,
        width=model.width,
        height=model.height,
        detections=detections,
        triplets=triplets,
    )


def pose_image_id(pose: ProbePose) -> str:
    return f"sim_{pose.side.value}_z{pose.z!r}_u{pose.u!r}"


def cross_section(model: NeckModel, pose: ProbePose) -> SceneGraph:
    """Ground-truth scene graph at a pose; right side mirrors the left frame."""
    image_id = pose_image_id(pose)
    if pose.side is LateralSide.LEFT:
        return _left_frame(model, pose.z, pose.u, image_id)
    return flip_horizontal(_left_frame(model, pose.z, -pose.u + 0.0, image_id))


@dataclass(frozen=True)
class NoiseConfig:
    """Perturbation strengths for emulating an imperfect predictor."""

    seed: int = 0
    box_jitter_px: float = 0.0
    drop_prob: float = 0.0
    score_noise: float = 0.0
    spurious_prob: float = 0.0

    def validate(self) -> None:
        if not (0.0 <= self.drop_prob <= 1.0 and 0.0 <= self.spurious_prob <= 1.0):
            raise SonographError("BAD_CONFIG", "probabilities must be in [0,1]")
        if self.box_jitter_px < 0 or self.score_noise < 0:
            raise SonographError("BAD_CONFIG", "noise stddevs must be nonnegative")

    @property
    def is_zero(self) -> bool:
        return (
            self.box_jitter_px == 0.0
            and self.drop_prob == 0.0
            and self.score_noise == 0.0
            and self.spurious_prob == 0.0
        )


def _pose_rng(seed: int, pose: ProbePose) -> np.random.Generator:
    key = f"{seed}|{pose.z!r}|{pose.u!r}|{pose.side.value}".encode()
    digest = hashlib.sha256(key).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


class SimulatorPredictor(Predictor):
    """Predictor over poses: ground truth plus seeded, pose-keyed perturbations."""

    def __init__(self, model: NeckModel, noise: NoiseConfig = NoiseConfig()):
        model.validate()
        noise.validate()
        self.model = model
        self.noise = noise

    def predict(self, frame: ProbePose) -> SceneGraph:
        gt = cross_section(self.model, frame)
        if self.noise.is_zero:
            return gt
        rng = _pose_rng(self.noise.seed, frame)
        cfg = self.noise
        kept: list[Detection] = []
        index_map: dict[int, int] = {}
        for i, det in enumerate(gt.detections):
            if rng.random() < cfg.drop_prob:
                continue
            box = det.box
            dx, dy, dw, dh = rng.normal(0.0, cfg.box_jitter_px, 4) if cfg.box_jitter_px else (0.0,) * 4
            w = max(1.0, box.w + dw)
            h = max(1.0, box.h + dh)
            x = min(max(box.x + dx, 0.0), gt.width - 1.0)
            y = min(max(box.y + dy, 0.0), gt.height - 1.0)
            w = min(w, gt.width - x)
            h = min(h, gt.height - y)
            score = min(1.0, max(0.0, det.effective_score + rng.normal(0.0, cfg.score_noise)))
            index_map[i] = len(kept)
            kept.append(Detection(det.cls, BBox(x, y, w, h), score=score))
        triplets: list[Triplet] = []
        for t in gt.triplets:
            if t.sub not in index_map or t.obj not in index_map:
                continue
            score = min(1.0, max(0.0, t.effective_score + rng.normal(0.0, cfg.score_noise)))
            triplets.append(Triplet(index_map[t.sub], t.pred, index_map[t.obj], score=score))
        if cfg.spurious_prob > 0.0:
            related = {(t.sub, t.obj) for t in triplets}
            predicates = list(PredicateClass)
            for i in range(len(kept)):
                for j in range(len(kept)):
                    if i == j or (i, j) in related:
                        continue
                    if rng.random() < cfg.spurious_prob:
                        pred = predicates[int(rng.integers(len(predicates)))]
                        triplets.append(Triplet(i, pred, j, score=float(rng.random())))
        return replace(gt, detections=tuple(kept), triplets=tuple(triplets))


def simulator_predictor(model: Optional[NeckModel] = None, noise: Optional[NoiseConfig] = None) -> SimulatorPredictor:
    return SimulatorPredictor(model or default_model(), noise or NoiseConfig())


register_predictor("simulator", simulator_predictor)


def _target_visible(model: NeckModel, z: float, u: float, side: LateralSide, target: EntityClass) -> bool:
    sg = cross_section(model, ProbePose(z, u, side))
    return any(d.cls is target for d in sg.detections)


def _steps(delta: float) -> int:
    return max(1, math.ceil(abs(delta) / POSE_STEP - 1e-9))


def _z_direction(dz: float) -> GuideDirection:
    return GuideDirection.CRANIAL if dz > 0 else GuideDirection.CAUDAL


def _u_direction(du: float, side: LateralSide) -> GuideDirection:
    # in the left frame +u shifts midline structures into view = probe moving medially
    medial = du > 0 if side is LateralSide.LEFT else du < 0
    return GuideDirection.MEDIAL if medial else GuideDirection.LATERAL


def oracle_guidance(model: NeckModel, pose: ProbePose, target: EntityClass) -> Advice:
    """Shortest single-axis probe move (z preferred) that brings target into view.

    Poses are searched on the step grid. When no single-axis move suffices but
    some grid pose shows the target, the first leg (z, else u) of the cheapest
    combined move is returned; callers reach the target by iterating.
    """
    if _target_visible(model, pose.z, pose.u, pose.side, target):
        return Advice(visible=True)
    grid = [n / _GRID_DENOM for n in range(_GRID_DENOM + 1)]
    ugrid = [n / _GRID_DENOM for n in range(-_GRID_DENOM, _GRID_DENOM + 1)]

    best_z: Optional[tuple[tuple[int, float], float]] = None
    for z in grid:
        if _target_visible(model, z, pose.u, pose.side, target):
            dz = z - pose.z
            # ties between equal-length moves resolve cranially
            key = (_steps(dz), -dz)
            if best_z is None or key < best_z[0]:
                best_z = (key, dz)
    if best_z is not None:
        (steps, _), dz = best_z
        return Advice(visible=False, direction=_z_direction(dz), steps=steps)

    best_u: Optional[tuple[tuple[int, float], float]] = None
    for u in ugrid:
        if _target_visible(model, pose.z, u, pose.side, target):
            du = u - pose.u
            # ties between equal-length moves resolve toward the midline on either side
            medial_last = -du if pose.side is LateralSide.LEFT else du
            key = (_steps(du), medial_last)
            if best_u is None or key < best_u[0]:
                best_u = (key, du)
    if best_u is not None:
        (steps, _), du = best_u
        return Advice(visible=False, direction=_u_direction(du, pose.side), steps=steps)

    best_pair = None
    for z in grid:
        for u in ugrid:
            if not _target_visible(model, z, u, pose.side, target):
                continue
            dz, du = z - pose.z, u - pose.u
            total = _steps(dz) + _steps(du)
            medial_u = u if pose.side is LateralSide.LEFT else -u
            key = (total, z, medial_u)
            if best_pair is None or key < best_pair[0]:
                best_pair = (key, dz, du)
    if best_pair is None:
        raise SonographError("UNREACHABLE", f"{target.value} is not visible at any pose of this model")
    _, dz, du = best_pair
    if abs(dz) > 1e-12:
        return Advice(visible=False, direction=_z_direction(dz), steps=_steps(dz))
    return Advice(visible=False, direction=_u_direction(du, pose.side), steps=_steps(du))


_MODEL_KEYS = {
    "version",
    "width",
    "height",
    "depth_mm",
    "focus_mm",
    "lateral_shift_px",
    "thresholds",
    "entities",
}
_THRESHOLD_KEYS = {"contiguity_gap_px", "encasement_min_deg", "superior_margin_px"}
_TRACK_KEYS = {"x", "y", "rx", "ry", "z", "x_slope", "y_slope"}


def _number(raw: object, where: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise SonographError("SCHEMA", f"expected a number, got {raw!r}", where)
    return float(raw)


def parse_model(text: str) -> NeckModel:
    """Model file -> NeckModel; SYNTAX/SCHEMA for shape, BAD_CONFIG for invariants."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SonographError("SYNTAX", f"model file is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise SonographError("SCHEMA", "model file must be a JSON object")
    extra = set(raw) - _MODEL_KEYS
    if extra:
        raise SonographError("SCHEMA", f"unknown model fields: {sorted(extra)}")
    if raw.get("version") != 1:
        raise SonographError("SCHEMA", f"unsupported model version {raw.get('version')!r}")
    thresholds = raw.get("thresholds", {})
    if not isinstance(thresholds, dict) or set(thresholds) - _THRESHOLD_KEYS:
        raise SonographError("SCHEMA", "bad thresholds block", "thresholds")
    entities = raw.get("entities")
    if not isinstance(entities, dict):
        raise SonographError("SCHEMA", "model needs an entities mapping", "entities")
    unknown = set(entities) - {e.value for e in EntityClass}
    if unknown:
        raise SonographError("VOCAB", f"unknown entities: {sorted(unknown)}", "entities")
    missing = {e.value for e in EntityClass} - set(entities)
    if missing:
        raise SonographError("SCHEMA", f"missing entities: {sorted(missing)}", "entities")
    tracks = []
    for cls in EntityClass:
        spec_ = entities[cls.value]
        where = f"entities.{cls.value}"
        if not isinstance(spec_, dict) or set(spec_) - _TRACK_KEYS:
            raise SonographError("SCHEMA", "bad track block", where)
        for key in ("x", "y", "rx", "ry", "z"):
            if key not in spec_:
                raise SonographError("SCHEMA", f"missing field {key}", where)
        z = spec_["z"]
        if not (isinstance(z, list) and len(z) == 2):
            raise SonographError("SCHEMA", "z must be [lo, hi]", f"{where}.z")
        tracks.append(
            EllipseTrack(
                entity=cls,
                x=_number(spec_["x"], f"{where}.x"),
                y=_number(spec_["y"], f"{where}.y"),
                rx=_number(spec_["rx"], f"{where}.rx"),
                ry=_number(spec_["ry"], f"{where}.ry"),
                z_lo=_number(z[0], f"{where}.z"),
                z_hi=_number(z[1], f"{where}.z"),
                x_slope=_number(spec_.get("x_slope", 0.0), f"{where}.x_slope"),
                y_slope=_number(spec_.get("y_slope", 0.0), f"{where}.y_slope"),
            )
        )
    model = NeckModel(
        tracks=tuple(tracks),
        width=int(_number(raw.get("width", 829), "width")),
        height=int(_number(raw.get("height", 770), "height")),
        depth_mm=_number(raw.get("depth_mm", 45.0), "depth_mm"),
        focus_mm=_number(raw.get("focus_mm", 20.0), "focus_mm"),
        lateral_shift_px=_number(raw.get("lateral_shift_px", 330.0), "lateral_shift_px"),
        contiguity_gap_px=_number(thresholds.get("contiguity_gap_px", 10.0), "thresholds"),
        encasement_min_deg=_number(thresholds.get("encasement_min_deg", 120.0), "thresholds"),
        superior_margin_px=_number(thresholds.get("superior_margin_px", 40.0), "thresholds"),
    )
    model.validate()
    return model


def _num(v: float) -> object:
    return int(v) if float(v).is_integer() else float(v)


def write_model(model: NeckModel) -> str:
    model.validate()
    doc = {
        "version": 1,
        "width": model.width,
        "height": model.height,
        "depth_mm": _num(model.depth_mm),
        "focus_mm": _num(model.focus_mm),
        "lateral_shift_px": _num(model.lateral_shift_px),
        "thresholds": {
            "contiguity_gap_px": _num(model.contiguity_gap_px),
            "encasement_min_deg": _num(model.encasement_min_deg),
            "superior_margin_px": _num(model.superior_margin_px),
        },
        "entities": {
            t.entity.value: {
                "x": _num(t.x),
                "y": _num(t.y),
                "rx": _num(t.rx),
                "ry": _num(t.ry),
                "z": [_num(t.z_lo), _num(t.z_hi)],
                "x_slope": _num(t.x_slope),
                "y_slope": _num(t.y_slope),
            }
            for t in model.tracks
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def load_model(path) -> NeckModel:
    from pathlib import Path

    return parse_model(Path(path).read_text(encoding="utf-8"))


def save_model(model: NeckModel, path) -> None:
    from pathlib import Path

    Path(path).write_text(write_model(model), encoding="utf-8")
