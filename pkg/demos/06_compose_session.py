#!/usr/bin/env python3
# Human-in-the-loop composition against the HTTP service, driven
# in-process (no network needed). A human would do this through the
# browser workbench in frontend/; the flow is the same: request
# candidates, accept or edit, undo freely, export at the end.

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from versecraft.charlm import TrainConfig, train_lm
from versecraft.cli import bundled_data_path
from versecraft.corpus import ingest_directory
from versecraft.service import create_app
from versecraft.stylemodel import StyleConfig, build_style_model

workdir = Path(tempfile.mkdtemp(prefix="versecraft-demo-"))
author = ingest_directory(bundled_data_path("poems/author"), "author")
background = ingest_directory(bundled_data_path("poems/background"), "background")

print("preparing models...")
params, _ = train_lm(author, TrainConfig(layers=2, hidden=48, embed=24, bptt_len=48,
                                         lr=3e-3, steps=1200, batch=12, seed=7))
params.save(workdir / "lm.bin")
style = build_style_model(
    author, background,
    StyleConfig(top_percent=10.0, num_topics=5, select_topics=3,
                lda_iterations=300, embed_dim=16, seed=11),
)
style.save(workdir / "author.style.json")

client = TestClient(create_app(workdir))
print("service:", client.get("/api/health").json())

session = client.post("/api/sessions", json={
    "title": "a demo couplet",
    "spec": {"style_id": "author", "meter": "iambic-tetrameter",
             "rhyme_scheme": "AA", "line_count": 2, "seed": 9},
}).json()
sid = session["session_id"]
print(f"\nsession {sid[:8]}... created")

for round_no in (1, 2):
    state = client.post(f"/api/sessions/{sid}/candidates", json={"count": 4}).json()
    print(f"\nround {round_no} candidates:")
    for cand in state["pending"]:
        print(f"  [{cand['id']}] {cand['text']:44s} {cand['rendering']} "
              f"(score {cand['score']:.2f})")
    choice = state["pending"][0]["id"]
    state = client.post(f"/api/sessions/{sid}/accept", json={"candidate_id": choice}).json()
    print(f"accepted {choice}; poem so far: "
          f"{[l['text'] for l in state['accepted_lines']]}")
    if state["rhyme_bindings"]:
        print(f"rhyme bindings: {state['rhyme_bindings']}")

print("\nexport (text):")
print(client.post(f"/api/sessions/{sid}/export", params={"format": "text"}).text)

# the whole history is an append-only journal; undo is a stack pop
client.post(f"/api/sessions/{sid}/undo")
state = client.get(f"/api/sessions/{sid}").json()
print(f"after undo, accepted lines: {len(state['accepted_lines'])}")
