"""Interactive scanning sessions over HTTP plus guidance-response scoring."""

import json
import re
import threading
import uuid
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .core import (
    EntityClass,
    LateralMovement,
    LateralSide,
    MoveDirection,
    Predictor,
    SceneGraph,
    missing_entities,
)
from .errors import SonographError
from .gateway import BackendConfig, ChatRequest, MockBackend, Transcript, send
from .grounding import (
    MovementConfig,
    SideConvention,
    TaskKind,
    infer_lateral_movement,
    infer_lateral_side,
    render_grounding,
    render_task_instruction,
)
from .metrics import TextPair, score_text_pairs
from .sim import (
    POSE_STEP,
    GuideDirection,
    NeckModel,
    NoiseConfig,
    ProbePose,
    SimulatorPredictor,
    default_model,
    load_model,
    oracle_guidance,
    quantize,
)

# ---------------------------------------------------------------------------
# direction keyword extraction and guidance scoring

_DIRECTION_SYNONYMS: dict[str, frozenset[str]] = {
    "cranial": frozenset({"cranial", "cranially", "superior", "superiorly", "up", "upward", "upwards", "head", "headward", "cephalad", "rostral"}),
    "caudal": frozenset({"caudal", "caudally", "inferior", "inferiorly", "down", "downward", "downwards", "clavicle", "feet", "footward"}),
    "medial": frozenset({"medial", "medially", "inward", "inwards", "midline", "centre", "center"}),
    "lateral": frozenset({"lateral", "laterally", "outward", "outwards", "outer"}),
    "visible": frozenset({"visible", "already"}),
}
# left/right depend on the scanned side: "left" points at the patient's right,
# which is toward the midline only when the left neck is being scanned
_SIDED_WORDS = {
    "left": {LateralSide.LEFT: "medial", LateralSide.RIGHT: "lateral"},
    "right": {LateralSide.LEFT: "lateral", LateralSide.RIGHT: "medial"},
}

_WORD_RE = re.compile(r"[a-z]+")


def extract_directions(text: str, side: Optional[LateralSide] = None) -> frozenset[str]:
    """Canonical direction keywords found in a response, case-insensitive."""
    words = set(_WORD_RE.findall(text.lower()))
    found = {canon for canon, syns in _DIRECTION_SYNONYMS.items() if words & syns}
    if side in (LateralSide.LEFT, LateralSide.RIGHT):
        for word, mapping in _SIDED_WORDS.items():
            if word in words:
                found.add(mapping[side])
    return frozenset(found)


@dataclass(frozen=True)
class GuidanceEvalRecord:
    request_id: str
    prompt: str
    response: str
    oracle: str
    extracted: frozenset[str]
    match: bool
    reference: Optional[str] = None


@dataclass(frozen=True)
class GuidanceEvalResult:
    records: tuple[GuidanceEvalRecord, ...]
    accuracy: float
    meteor_mean: Optional[float] = None
    rouge_l_mean: Optional[float] = None


def evaluate_guidance(entries: Sequence[Mapping[str, object]]) -> GuidanceEvalResult:
    """Directional accuracy (plus text metrics when references exist) of records.

    Each entry needs ``response`` and ``oracle`` (a canonical direction or
    "visible"); ``side``, ``prompt``, ``request_id``, ``reference`` optional.
    """
    if not entries:
        raise SonographError("PARSE", "no guidance records to evaluate")
    records = []
    for i, entry in enumerate(entries):
        response = entry.get("response")
        oracle = entry.get("oracle")
        if not isinstance(response, str) or not isinstance(oracle, str):
            raise SonographError("PARSE", "record needs response and oracle text", f"records[{i}]")
        side_raw = entry.get("side")
        side = LateralSide(side_raw) if isinstance(side_raw, str) else None
        extracted = extract_directions(response, side)
        records.append(
            GuidanceEvalRecord(
                request_id=str(entry.get("request_id", f"r{i:04d}")),
                prompt=str(entry.get("prompt", "")),
                response=response,
                oracle=oracle,
                extracted=extracted,
                match=oracle in extracted,
                reference=entry.get("reference") if isinstance(entry.get("reference"), str) else None,
            )
        )
    accuracy = sum(r.match for r in records) / len(records)
    with_refs = [r for r in records if r.reference is not None]
    meteor_mean = rouge_mean = None
    if with_refs:
        pairs = [TextPair(r.request_id, r.response, r.reference) for r in with_refs]
        _, meteor_mean, rouge_mean = score_text_pairs(pairs)
    return GuidanceEvalResult(
        records=tuple(records),
        accuracy=accuracy,
        meteor_mean=meteor_mean,
        rouge_l_mean=rouge_mean,
    )


# ---------------------------------------------------------------------------
# sessions

@dataclass(frozen=True)
class Frame:
    step: int
    pose: ProbePose
    sg: SceneGraph
    side: LateralSide
    movement: Optional[LateralMovement]

    def payload(self) -> dict:
        return {
            "step": self.step,
            "pose": {"z": self.pose.z, "u": self.pose.u, "side": self.pose.side.value},
            "image_id": self.sg.image_id,
            "width": self.sg.width,
            "height": self.sg.height,
            "detections": [
                {
                    "cls": d.cls.value,
                    "box": {"x": d.box.x, "y": d.box.y, "w": d.box.w, "h": d.box.h},
                    "score": d.score,
                }
                for d in self.sg.detections
            ],
            "triplets": [
                {"sub": t.sub, "pred": t.pred.value, "obj": t.obj, "score": t.score}
                for t in self.sg.triplets
            ],
            "side": self.side.value,
            "movement": None
            if self.movement is None
            else {
                "direction": self.movement.direction.value,
                "magnitude_px": self.movement.magnitude_px,
                "reference": self.movement.reference_entity.value
                if self.movement.reference_entity
                else None,
                "anatomy_dx_px": self.movement.anatomy_dx_px,
            },
            "missing": [e.value for e in sorted(missing_entities(self.sg), key=lambda e: e.order)],
        }


@dataclass
class Settings:
    """Service-wide configuration: model, predictor noise, backends, logging."""

    model: NeckModel = field(default_factory=default_model)
    noise: NoiseConfig = NoiseConfig()
    backends: dict[str, tuple[BackendConfig, Optional[MockBackend]]] = field(default_factory=dict)
    history_capacity: int = 64
    step: float = POSE_STEP
    side_convention: SideConvention = SideConvention()
    movement_config: MovementConfig = MovementConfig()
    transcript: Optional[Transcript] = None

    def __post_init__(self) -> None:
        if not self.backends:
            self.backends = {"mock-oracle": (BackendConfig(kind="mock"), MockBackend(oracle_mode=True))}
        if self.history_capacity < 2:
            raise SonographError("BAD_CONFIG", "history capacity must be at least 2")

    def backend(self, name: str) -> tuple[BackendConfig, Optional[MockBackend]]:
        if name not in self.backends:
            raise SonographError("BAD_CONFIG", f"unknown backend {name!r}")
        return self.backends[name]


class Session:
    def __init__(self, session_id: str, settings: Settings, pose: ProbePose):
        self.id = session_id
        self.settings = settings
        self.lock = threading.Lock()
        self.predictor: Predictor = SimulatorPredictor(settings.model, settings.noise)
        self.pose = pose
        self.frames: deque[Frame] = deque(maxlen=settings.history_capacity)
        self.chats: list[dict] = []
        self._query_counter = 0
        self._append_frame(pose, previous=None)

    def _append_frame(self, pose: ProbePose, previous: Optional[Frame]) -> Frame:
        sg = self.predictor.predict(pose)
        side = infer_lateral_side(sg, self.settings.side_convention)
        movement = None
        if previous is not None:
            movement = infer_lateral_movement(previous.sg, sg, self.settings.movement_config)
        frame = Frame(
            step=previous.step + 1 if previous else 0,
            pose=pose,
            sg=sg,
            side=side,
            movement=movement,
        )
        self.frames.append(frame)
        return frame

    @property
    def current(self) -> Frame:
        return self.frames[-1]

    def move(self, dz: float = 0.0, du: float = 0.0, toggle_side: bool = False) -> Frame:
        with self.lock:
            side = self.pose.side.flipped() if toggle_side else self.pose.side
            z = min(max(quantize(self.pose.z + dz), 0.0), 1.0)
            u = min(max(quantize(self.pose.u + du), -1.0), 1.0)
            pose = ProbePose(z, u, side)
            self.pose = pose
            return self._append_frame(pose, previous=self.current)

    def next_request_id(self) -> str:
        self._query_counter += 1
        return f"q{self._query_counter:04d}"


def _find_target(query: str, sg: SceneGraph) -> Optional[EntityClass]:
    """Entity the query asks about: earliest name mention, else first missing one."""
    lowered = query.lower()
    hits = []
    for cls in EntityClass:
        for needle in (cls.display_name.lower(), cls.value.lower()):
            pattern = r"\b" + re.escape(needle) + r"\b"
            m = re.search(pattern, lowered)
            if m:
                hits.append((m.start(), cls.order, cls))
                break
    if hits:
        return min(hits)[2]
    absent = sorted(missing_entities(sg), key=lambda e: e.order)
    return absent[0] if absent else None


class SessionRegistry:
    def __init__(self, settings: Settings):
        self.settings = settings
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def create(self, pose: ProbePose) -> Session:
        session = Session(f"s{uuid.uuid4().hex[:12]}", self.settings, pose)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SonographError("NO_SESSION", f"no session {session_id!r}")
        return session

    def query(
        self,
        session_id: str,
        task: TaskKind,
        user_query: str,
        backend_name: str,
        reference: Optional[str] = None,
        allow_unknown_movement: bool = False,
    ) -> dict:
        session = self.get(session_id)
        cfg, mock = self.settings.backend(backend_name)
        with session.lock:
            frame = session.current
            request_id = f"{session.id}-{session.next_request_id()}"
            movement = frame.movement
            if task is TaskKind.GUIDANCE and movement is None:
                if not allow_unknown_movement:
                    raise SonographError(
                        "PRECONDITION",
                        "guidance needs two frames; move the probe first or allow unknown movement",
                    )
                movement = LateralMovement(direction=MoveDirection.UNKNOWN)
            grounding = render_grounding(frame.sg, frame.side, movement=movement, task=task)
            instruction = render_task_instruction(task, user_query)
            user_text = f"{grounding.text}\n\nQuery: {user_query}"
            audit: dict = {
                "request_id": request_id,
                "task": task.value,
                "triplet_lines": list(grounding.triplet_lines),
                "side": frame.side.value,
                "movement": None if frame.movement is None else frame.movement.direction.value,
                "missing": [e.value for e in sorted(missing_entities(frame.sg), key=lambda e: e.order)],
                "target": None,
                "oracle": None,
                "match": None,
            }
            context: Optional[dict] = None
            if task is TaskKind.GUIDANCE:
                target = _find_target(user_query, frame.sg)
                advice = None
                if target is not None:
                    advice = oracle_guidance(self.settings.model, frame.pose, target)
                audit["target"] = target.value if target else None
                if advice is None or advice.visible:
                    audit["oracle"] = "visible"
                    context = {
                        "oracle_direction": "visible",
                        "oracle_steps": 0,
                        "target": target.display_name if target else "the requested anatomy",
                    }
                else:
                    assert advice.direction is not None
                    audit["oracle"] = advice.direction.value
                    audit["oracle_steps"] = advice.steps
                    context = {
                        "oracle_direction": advice.direction.value,
                        "oracle_steps": advice.steps,
                        "target": target.display_name if target else "",
                    }
        request = ChatRequest(
            system=instruction.text,
            user=user_text,
            backend=backend_name,
            request_id=request_id,
            context=context,
        )
        response = send(request, cfg, mock=mock, transcript=self.settings.transcript)
        if task is TaskKind.GUIDANCE and audit["oracle"] is not None:
            side = LateralSide(audit["side"]) if audit["side"] != "unknown" else None
            audit["match"] = audit["oracle"] in extract_directions(response.text, side)
        entry = {
            "request_id": request_id,
            "task": task.value,
            "query": user_query,
            "system": instruction.text,
            "user": user_text,
            "response": response.text,
            "audit": audit,
            "reference": reference,
        }
        with session.lock:
            session.chats.append(entry)
        return {
            "prompt": {"system": instruction.text, "user": user_text},
            "response": {
                "text": response.text,
                "latency_ms": response.latency_ms,
                "backend": response.backend,
                "request_id": response.request_id,
            },
            "audit": audit,
        }


def read_guidance_records(text: str) -> list[dict]:
    """Guidance records from a JSONL file, one object per non-empty line."""
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise SonographError("PARSE", f"bad JSON on line {lineno}: {e}") from e
        if not isinstance(obj, dict):
            raise SonographError("PARSE", f"line {lineno} is not an object")
        records.append(obj)
    return records


_NOISE_FIELDS = {"seed", "box_jitter_px", "drop_prob", "score_noise", "spurious_prob"}
_CONFIG_FIELDS = {"model", "noise", "backends", "transcript", "history_capacity"}
_BACKEND_FIELDS = {
    "kind",
    "endpoint",
    "model",
    "credential_env",
    "timeout_ms",
    "retries",
    "max_in_flight",
    "oracle_mode",
}


def settings_from_config(text: str) -> Settings:
    """Build service settings from a JSON config document.

    Top-level keys: "model" (path to a cross-section model file), "noise",
    "backends" (name to backend spec), "transcript" (JSONL path), and
    "history_capacity". A backend spec with kind "mock" gets an oracle-mode
    mock unless "oracle_mode" is false.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SonographError("SYNTAX", f"config is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise SonographError("SCHEMA", "config must be a JSON object")
    extra = set(raw) - _CONFIG_FIELDS
    if extra:
        raise SonographError("SCHEMA", f"unknown config keys: {sorted(extra)}")

    model = default_model()
    if "model" in raw:
        if not isinstance(raw["model"], str):
            raise SonographError("SCHEMA", "model must be a file path", "model")
        model = load_model(raw["model"])

    noise = NoiseConfig()
    if "noise" in raw:
        spec = raw["noise"]
        if not isinstance(spec, dict) or set(spec) - _NOISE_FIELDS:
            raise SonographError("SCHEMA", f"noise keys must be among {sorted(_NOISE_FIELDS)}", "noise")
        noise = NoiseConfig(**spec)
        noise.validate()

    backends: dict[str, tuple[BackendConfig, Optional[MockBackend]]] = {}
    for name, spec in (raw.get("backends") or {}).items():
        if not isinstance(spec, dict) or set(spec) - _BACKEND_FIELDS:
            raise SonographError("SCHEMA", "bad backend spec", f"backends.{name}")
        oracle_mode = bool(spec.pop("oracle_mode", True))
        cfg = BackendConfig(**spec)
        cfg.validate()
        mock = MockBackend(oracle_mode=oracle_mode) if cfg.kind == "mock" else None
        backends[name] = (cfg, mock)

    transcript = None
    if "transcript" in raw:
        if not isinstance(raw["transcript"], str):
            raise SonographError("SCHEMA", "transcript must be a file path", "transcript")
        transcript = Transcript(raw["transcript"])

    kwargs: dict = {"model": model, "noise": noise, "backends": backends, "transcript": transcript}
    if "history_capacity" in raw:
        if not isinstance(raw["history_capacity"], int):
            raise SonographError("SCHEMA", "history_capacity must be an integer", "history_capacity")
        kwargs["history_capacity"] = raw["history_capacity"]
    return Settings(**kwargs)


def direction_delta(direction: GuideDirection, side: LateralSide) -> tuple[float, float]:
    """One probe step (dz, du) realizing a guidance direction on the given side."""
    if direction is GuideDirection.CRANIAL:
        return POSE_STEP, 0.0
    if direction is GuideDirection.CAUDAL:
        return -POSE_STEP, 0.0
    medial_du = POSE_STEP if side is LateralSide.LEFT else -POSE_STEP
    if direction is GuideDirection.MEDIAL:
        return 0.0, medial_du
    return 0.0, -medial_du


# ---------------------------------------------------------------------------
# HTTP surface

def _error_status(code: str) -> int:
    if code == "NO_SESSION":
        return 404
    if code in ("TRANSPORT", "TIMEOUT", "BAD_RESPONSE", "AUTH"):
        return 502
    if code == "PRECONDITION":
        return 409
    return 400


def create_app(settings: Optional[Settings] = None, ui_dir: Optional[str] = None):
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse
    from pydantic import BaseModel

    settings = settings or Settings()
    app = FastAPI(title="sonograph scan service")
    registry = SessionRegistry(settings)
    app.state.registry = registry

    class CreateBody(BaseModel):
        z: float = 0.5
        u: float = 0.0
        side: str = "left"

    class MoveBody(BaseModel):
        dz: float = 0.0
        du: float = 0.0
        toggle_side: bool = False

    class QueryBody(BaseModel):
        task: str
        query: str
        backend: str = "mock-oracle"
        reference: Optional[str] = None
        allow_unknown_movement: bool = False

    @app.exception_handler(SonographError)
    async def _handle(request: Request, exc: SonographError):
        return JSONResponse(
            status_code=_error_status(exc.code),
            content={"error": {"code": exc.code, "message": exc.message, "path": exc.path}},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session(body: CreateBody):
        try:
            side = LateralSide(body.side)
        except ValueError:
            raise SonographError("BAD_CONFIG", f"side must be left or right, got {body.side!r}")
        pose = ProbePose(quantize(body.z), quantize(body.u), side)
        session = registry.create(pose)
        return {"id": session.id}

    @app.get("/sessions/{session_id}/frame")
    def get_frame(session_id: str):
        session = registry.get(session_id)
        with session.lock:
            return session.current.payload()

    @app.post("/sessions/{session_id}/move")
    def move(session_id: str, body: MoveBody):
        session = registry.get(session_id)
        return session.move(dz=body.dz, du=body.du, toggle_side=body.toggle_side).payload()

    @app.post("/sessions/{session_id}/query")
    def query(session_id: str, body: QueryBody):
        try:
            task = TaskKind(body.task)
        except ValueError:
            raise SonographError("BAD_CONFIG", f"task must be summarization or guidance, got {body.task!r}")
        return registry.query(
            session_id,
            task,
            body.query,
            body.backend,
            reference=body.reference,
            allow_unknown_movement=body.allow_unknown_movement,
        )

    @app.get("/sessions/{session_id}/history")
    def history(session_id: str):
        session = registry.get(session_id)
        with session.lock:
            return {
                "frames": [f.payload() for f in session.frames],
                "chats": list(session.chats),
            }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        # Registered last so API routes keep precedence at the same origin.
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


# ---------------------------------------------------------------------------
# closed-loop driver (used by the CLI and by tests)

def drive_guidance_loop(
    registry: SessionRegistry,
    pose: ProbePose,
    target: EntityClass,
    backend: str = "mock-oracle",
    max_queries: int = 8,
) -> list[dict]:
    """Create a session at pose and follow guidance answers until target appears.

    Returns the guidance records produced along the way (one per query).
    """
    session = registry.create(pose)
    session.move()  # second frame so movement is defined
    records: list[dict] = []
    query_text = f"where is the {target.display_name}?"
    for _ in range(max_queries):
        out = registry.query(session.id, TaskKind.GUIDANCE, query_text, backend)
        audit = out["audit"]
        records.append(
            {
                "request_id": audit["request_id"],
                "prompt": out["prompt"]["user"],
                "response": out["response"]["text"],
                "oracle": audit["oracle"],
                "side": audit["side"],
            }
        )
        if audit["oracle"] == "visible":
            break
        direction = GuideDirection(audit["oracle"])
        dz, du = direction_delta(direction, session.pose.side)
        for _ in range(int(audit.get("oracle_steps", 1))):
            session.move(dz=dz, du=du)
    return records
