"""Chat-completion client with retries, a deterministic mock backend, transcripts."""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Optional

import requests

from .core import EntityClass
from .errors import SonographError

_BACKOFF_BASE_S = 0.05


@dataclass(frozen=True)
class ChatRequest:
    """One prompt: task instruction as system text, grounding block as user text.

    ``context`` carries structured side-channel data for deterministic mock
    backends (oracle direction, target); it is never sent over the wire and is
    excluded from the request fingerprint.
    """

    system: str
    user: str
    temperature: float = 0.0
    max_tokens: int = 512
    backend: str = "mock"
    request_id: str = ""
    context: Optional[Mapping[str, object]] = None

    def validate(self) -> None:
        if not self.user:
            raise SonographError("BAD_CONFIG", "request user text must not be empty")
        if self.temperature < 0:
            raise SonographError("BAD_CONFIG", "temperature must be nonnegative")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    latency_ms: float
    backend: str
    request_id: str = ""
    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None
    finish_reason: Optional[str] = None


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"
    endpoint: str = ""
    model: str = ""
    credential_env: Optional[str] = None
    timeout_ms: float = 30000.0
    retries: int = 2
    max_in_flight: int = 4

    def validate(self) -> None:
        if self.kind not in ("http-chat", "mock"):
            raise SonographError("BAD_CONFIG", f"unknown backend kind {self.kind!r}")
        if self.timeout_ms <= 0:
            raise SonographError("BAD_CONFIG", "timeout must be positive")
        if self.retries < 0:
            raise SonographError("BAD_CONFIG", "retries must be nonnegative")
        if self.max_in_flight < 1:
            raise SonographError("BAD_CONFIG", "max_in_flight must be at least 1")
        if self.kind == "http-chat" and not self.endpoint:
            raise SonographError("BAD_CONFIG", "http-chat backend needs an endpoint")


def request_fingerprint(system: str, user: str) -> str:
    """Stable key for scripting mock responses to a specific prompt."""
    return hashlib.sha256(system.encode() + b"\x00" + user.encode()).hexdigest()


_TRIPLET_LINE = re.compile(r"^<(.+?), (.+?), (.+?)>$", re.MULTILINE)
_SIDE_LINE = re.compile(r"^Scanned side: (\w+) neck\.$", re.MULTILINE)


class MockBackend:
    """Deterministic stand-in for an LLM: scripted replay or prompt-driven oracle.

    Mapping mode answers only fingerprints present in the script. Oracle mode
    reads the grounding prompt like the real model would (which entities appear
    in triplet lines, which side) and verbalizes the guidance advice passed in
    the request context, so closed-loop tests run with zero network access.
    """

    def __init__(
        self,
        script: Optional[Mapping[str, str]] = None,
        oracle_mode: bool = False,
        latency_s: float = 0.0,
    ):
        if (script is None) == (not oracle_mode):
            raise SonographError("BAD_CONFIG", "mock backend needs a script or oracle mode")
        self.script = dict(script) if script is not None else None
        self.oracle_mode = oracle_mode
        self.latency_s = latency_s

    def complete(self, req: ChatRequest) -> str:
        if self.script is not None:
            fp = request_fingerprint(req.system, req.user)
            if fp not in self.script:
                raise SonographError("UNSCRIPTED", f"no scripted response for fingerprint {fp[:12]}…")
            return self.script[fp]
        return self._oracle_answer(req)

    def _oracle_answer(self, req: ChatRequest) -> str:
        mentioned = set()
        for match in _TRIPLET_LINE.finditer(req.user):
            mentioned.add(match.group(1))
            mentioned.add(match.group(3))
        missing = [e.display_name for e in EntityClass if e.display_name not in mentioned]
        side = _SIDE_LINE.search(req.user)
        side_text = side.group(1) if side else "undetermined"
        ctx = dict(req.context or {})
        direction = ctx.get("oracle_direction")
        if direction == "visible":
            target = ctx.get("target", "the requested anatomy")
            return f"{target} is already visible in the current {side_text}-neck image."
        if isinstance(direction, str):
            steps = ctx.get("oracle_steps", 1)
            listing = ", ".join(missing) if missing else "none of the key anatomies"
            return (
                f"Missing from the scene graph: {listing}. "
                f"Move the probe {direction} by {steps} steps to reveal the target."
            )
        present = [e.display_name for e in EntityClass if e.display_name in mentioned]
        listing = ", ".join(present) if present else "no related structures"
        count = len(_TRIPLET_LINE.findall(req.user))
        noun = "relation" if count == 1 else "relations"
        return (
            f"This is a scan of the {side_text} neck. "
            f"The scene graph relates {listing} through {count} {noun}."
        )


class Transcript:
    """Append-only JSONL log of every send; one record per attempted request."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, entry: dict) -> None:
        line = json.dumps(entry, sort_keys=True)
        try:
            with self._lock:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
        except OSError as e:
            raise SonographError("IO", f"cannot append to transcript: {e}") from e

    @staticmethod
    def read(path) -> list[dict]:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise SonographError("IO", f"cannot read transcript: {e}") from e
        records = []
        for i, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise SonographError("PARSE", f"bad transcript line {i + 1}: {e}") from e
        return records


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _record(req: ChatRequest, *, response: Optional[str], latency_ms: float,
            error: Optional[str], finish_reason: Optional[str], attempts: int) -> dict:
    return {
        "request_id": req.request_id,
        "ts": _utc_now(),
        "backend": req.backend,
        "system": req.system,
        "user": req.user,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
        "response": response,
        "latency_ms": latency_ms,
        "finish_reason": finish_reason,
        "error": error,
        "attempts": attempts,
    }


def _http_attempt(req: ChatRequest, cfg: BackendConfig) -> tuple[str, Optional[int], Optional[int], Optional[str]]:
    headers = {"Content-Type": "application/json"}
    if cfg.credential_env:
        secret = os.environ.get(cfg.credential_env)
        if not secret:
            raise SonographError(
                "AUTH", f"credential environment variable {cfg.credential_env} is not set"
            )
        headers["Authorization"] = f"Bearer {secret}"
    payload = {
        "model": cfg.model,
        "messages": [
            {"role": "system", "content": req.system},
            {"role": "user", "content": req.user},
        ],
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
    }
    resp = requests.post(cfg.endpoint, json=payload, headers=headers, timeout=cfg.timeout_ms / 1000.0)
    if resp.status_code in (401, 403):
        raise SonographError("AUTH", f"backend rejected credentials (HTTP {resp.status_code})")
    if resp.status_code != 200:
        raise _Transport(f"HTTP {resp.status_code}")
    try:
        body = resp.json()
        text = body["choices"][0]["message"]["content"]
        if not isinstance(text, str):
            raise TypeError("content is not text")
    except Exception as e:
        raise SonographError("BAD_RESPONSE", f"malformed completion body: {e}") from e
    usage = body.get("usage") or {}
    finish = None
    choice = body["choices"][0]
    if isinstance(choice, dict):
        finish = choice.get("finish_reason")
    return text, usage.get("prompt_tokens"), usage.get("completion_tokens"), finish


class _Transport(Exception):
    pass


def send(
    req: ChatRequest,
    cfg: BackendConfig,
    mock: Optional[MockBackend] = None,
    transcript: Optional[Transcript] = None,
) -> ChatResponse:
    """Send one request; retry transport failures; log exactly one transcript record."""
    req.validate()
    cfg.validate()
    started = time.monotonic()
    attempts = 0
    last_error: Optional[SonographError] = None
    text: Optional[str] = None
    p_tok = c_tok = None
    finish = None
    latency_ms = 0.0
    for attempt in range(cfg.retries + 1):
        attempts = attempt + 1
        try:
            if cfg.kind == "mock":
                if mock is None:
                    raise SonographError("BAD_CONFIG", "mock backend requires a mock instance")
                if mock.latency_s * 1000.0 > cfg.timeout_ms:
                    raise _Timeout()
                text = mock.complete(req)
                latency_ms = max(mock.latency_s * 1000.0, 0.0)
                finish = "stop"
            else:
                text, p_tok, c_tok, finish = _http_attempt(req, cfg)
                latency_ms = (time.monotonic() - started) * 1000.0
            last_error = None
            break
        except _Timeout:
            last_error = SonographError("TIMEOUT", _audit("mock latency exceeds timeout", req))
        except requests.Timeout:
            last_error = SonographError("TIMEOUT", _audit("request timed out", req))
        except (_Transport, requests.RequestException) as e:
            last_error = SonographError("TRANSPORT", _audit(str(e) or type(e).__name__, req))
        except SonographError as e:
            # AUTH / BAD_RESPONSE / UNSCRIPTED are not transport-level: no retry
            last_error = SonographError(e.code, _audit(e.message, req), path=e.path)
            break
        if attempt < cfg.retries:
            time.sleep(_BACKOFF_BASE_S * (2**attempt))
    record = _record(
        req,
        response=text,
        latency_ms=latency_ms,
        error=last_error.code if last_error else None,
        finish_reason=finish,
        attempts=attempts,
    )
    if transcript is not None:
        transcript.append(record)
    if last_error is not None:
        raise last_error
    assert text is not None
    return ChatResponse(
        text=text,
        latency_ms=latency_ms,
        backend=req.backend,
        request_id=req.request_id,
        prompt_tokens=p_tok,
        completion_tokens=c_tok,
        finish_reason=finish,
    )


class _Timeout(Exception):
    pass


def _audit(message: str, req: ChatRequest) -> str:
    return f"{message} (request {req.request_id or 'unidentified'})"
