#!/usr/bin/env python3
"""Record a scripted composition session against the real service into a
replayable stub fixture for the frontend contract tests."""

import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))
from conftest import toy_training_text  # noqa: E402

from versecraft.charlm import TrainConfig, train_on_text  # noqa: E402
from versecraft.service import create_app  # noqa: E402
from versecraft.stylemodel import StyleConfig, StyleModel  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "test" / "fixtures" / "recorded_session.json"


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="record-"))
    cfg = TrainConfig(layers=1, hidden=24, embed=12, bptt_len=32, lr=5e-3,
                      steps=400, batch=8, seed=3)
    params, _ = train_on_text(toy_training_text(), cfg)
    params.save(workdir / "lm.bin")
    style = StyleModel(
        author_id="toy",
        high_entropy_terms={"bright": 1.0, "night": 0.8, "star": 0.6, "sea": 0.5},
        topic_words={"moon": 1.0, "sky": 0.7},
        expanded_terms={},
        config=StyleConfig(),
    )
    style.save(workdir / "toy.style.json")
    client = TestClient(create_app(workdir))

    recorded = []

    def call(method, path, json_body=None, params_q=None):
        resp = client.request(method, path, json=json_body, params=params_q)
        entry = {
            "method": method,
            "path": path,
            "query": params_q or {},
            "body": json_body,
            "status": resp.status_code,
        }
        try:
            entry["response"] = resp.json()
            entry["response_kind"] = "json"
        except ValueError:
            entry["response"] = resp.text
            entry["response_kind"] = "text"
        recorded.append(entry)
        return entry["response"]

    spec = {"style_id": "toy", "meter": "US", "rhyme_scheme": "AA", "line_count": 2,
            "beam_width": 24, "branch": 8, "seed": 11}
    state = call("POST", "/api/sessions", {"title": "recorded poem", "spec": spec})
    sid = state["session_id"]
    base = f"/api/sessions/{sid}"

    state = call("POST", f"{base}/candidates", {"count": 5})
    first = state["pending"][0]["id"]
    call("POST", f"{base}/accept", {"candidate_id": first})
    state = call("POST", f"{base}/candidates", {"count": 5})
    # a stale id triggers the 409 the board must recover from
    call("POST", f"{base}/accept", {"candidate_id": "99-99"})
    call("GET", base)  # the recovery refetch
    second = state["pending"][0]["id"]
    call("POST", f"{base}/accept", {"candidate_id": second})
    call("POST", f"{base}/export", params_q={"format": "text"})
    call("POST", f"{base}/export", params_q={"format": "json"})
    call("POST", f"{base}/undo")
    call("GET", base)

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"session_id": sid, "entries": recorded}, indent=2), "utf-8")
    print(f"recorded {len(recorded)} exchanges -> {OUT}")


if __name__ == "__main__":
    main()
