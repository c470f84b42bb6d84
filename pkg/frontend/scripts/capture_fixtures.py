"""Record a scripted scan session against the real service.

Drives ten interactions through the HTTP layer and saves every request
body, response payload, and the server-side transcript into
test/fixtures/session.json. The vitest suite replays these payloads
through a stub fetch, so the console is tested against genuine service
output without needing a running Python process.

Run from the repository root:

    python3 frontend/scripts/capture_fixtures.py
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from sonograph.gateway import Transcript
from sonograph.service import Settings, create_app

INTERACTIONS = [
    ("move", {"dz": 0.05}),
    ("query", {"task": "guidance", "query": "where is the Cartilage Ring?"}),
    ("move", {"dz": 0.2}),
    ("query", {"task": "guidance", "query": "where is the Cartilage Ring?"}),
    ("move", {"du": 0.25}),
    ("query", {"task": "summarization", "query": "what do you see?"}),
    ("move", {"toggle_side": True}),
    ("query", {"task": "summarization", "query": "describe the image"}),
    ("query", {"task": "guidance", "query": "where is the Thyroid?"}),
]


def main() -> None:
    out_path = Path(__file__).resolve().parent.parent / "test" / "fixtures" / "session.json"
    with tempfile.TemporaryDirectory() as tmp:
        transcript_path = Path(tmp) / "transcript.jsonl"
        app = create_app(Settings(transcript=Transcript(transcript_path)))
        client = TestClient(app)

        create_body = {"z": 0.1, "u": -0.5, "side": "left"}
        created = client.post("/sessions", json=create_body)
        created.raise_for_status()
        sid = created.json()["id"]

        first = client.get(f"/sessions/{sid}/frame")
        first.raise_for_status()

        steps = []
        for kind, body in INTERACTIONS:
            if kind == "move":
                resp = client.post(f"/sessions/{sid}/move", json=body)
                resp.raise_for_status()
                steps.append({"kind": "move", "body": body, "frame": resp.json()})
            else:
                resp = client.post(f"/sessions/{sid}/query", json=body)
                resp.raise_for_status()
                steps.append({"kind": "query", "body": body, "response": resp.json()})

        fixture = {
            "create": {"body": create_body, "response": created.json()},
            "first_frame": first.json(),
            "interactions": steps,
            "transcript": Transcript.read(transcript_path),
        }
    out_path.write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    queries = sum(1 for s in steps if s["kind"] == "query")
    print(f"wrote {out_path}: {1 + len(steps)} interactions, {queries} transcript records")


if __name__ == "__main__":
    main()
