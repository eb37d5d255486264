"""HTTP facade and human-in-the-loop composition sessions.

A session is the poem-so-far plus the knobs that steer the next candidate
request. Its state is a pure fold over an append-only JSONL action journal
(`create`, `candidates`, `accept`, `undo`, `import`), which makes undo a
stack pop, restarts free, and candidate requests reproducible: generation
is re-run during replay with the seed derived from (session seed, request
counter), so the same journal always folds to the same state.

Human edits are first-class: custom text is accepted even when it breaks
the form, carrying warnings instead of rejections.
"""

from __future__ import annotations

import json
import time
import uuid
from pathlib import Path
from threading import Lock

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .charlm import LstmParams
from .corpus import Corpus, Document
from .formshaper import LexiconError, PronLexicon, meter_cycle, rhyme_keys
from .generator import (
    GenerationError,
    GenerationExhausted,
    GenerationSpec,
    RhymeConstraint,
    generate_line,
    rendering_segments,
    rhymable_words,
    usable_lexicon_words,
)
from .stylemodel import StyleConfig, StyleModel, build_style_model
from .validators import validate_meter


class ServiceError(Exception):
    def __init__(self, code: str, message: str, status: int = 400, details=None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status
        self.details = details or {}


class SessionSpec(BaseModel):
    style_id: str | None = None
    meter: str = "iambic-tetrameter"
    rhyme_scheme: str = "ABAB"
    line_count: int = 4
    boost_terms: float = Field(1.0, ge=0)
    boost_topics: float = Field(0.5, ge=0)
    temperature: float = Field(0.8, gt=0)
    beam_width: int = Field(24, ge=1)
    branch: int = Field(6, ge=1)
    samples_per_line: int = Field(8, ge=1)
    max_expansions: int = Field(12000, ge=1)
    seed: int = 42


class CreateSessionRequest(BaseModel):
    title: str = ""
    spec: SessionSpec = SessionSpec()
    import_state: dict | None = None


class CandidatesRequest(BaseModel):
    count: int = Field(5, ge=1, le=50)
    # knob-panel edits ride along with each request instead of mutating the
    # session spec; structural knobs may only change before the first line
    spec_overrides: dict | None = None


OVERRIDE_KEYS = {
    "meter", "boost_terms", "boost_topics", "temperature", "beam_width",
    "branch", "samples_per_line", "max_expansions", "seed",
}
STRUCTURAL_KEYS = {"rhyme_scheme", "line_count"}


class AcceptRequest(BaseModel):
    candidate_id: str | None = None
    text: str | None = None


class StyleBuildRequest(BaseModel):
    author_id: str
    documents: list[dict]
    background: list[dict] | None = None
    config: dict = {}


class ModelStore:
    """Immutable shared resources: language model, lexicon, style models."""

    def __init__(self, models_dir: Path):
        self.models_dir = Path(models_dir)
        lm_path = self.models_dir / "lm.bin"
        if not lm_path.exists():
            raise ServiceError("missing_model", f"no lm.bin under {models_dir}", 500)
        self.lm = LstmParams.load(lm_path)
        lex_path = self.models_dir / "lexicon.txt"
        if not lex_path.exists():
            from .cli import bundled_data_path

            lex_path = bundled_data_path("lexicon.txt")
        self.lexicon = PronLexicon.load(lex_path)
        self.styles: dict[str, StyleModel] = {}
        for path in sorted(self.models_dir.glob("*.style.json")):
            style = StyleModel.load(path)
            self.styles[path.name[: -len(".style.json")]] = style

    def style(self, style_id: str | None) -> StyleModel | None:
        if style_id is None:
            return None
        if style_id not in self.styles:
            raise ServiceError("unknown_style", f"no style model named {style_id!r}", 404)
        return self.styles[style_id]

    def add_style(self, style_id: str, style: StyleModel) -> None:
        style.save(self.models_dir / f"{style_id}.style.json")
        self.styles[style_id] = style


def build_generation_spec(store: ModelStore, spec: SessionSpec) -> GenerationSpec:
    return GenerationSpec(
        lm=store.lm,
        lexicon=store.lexicon,
        meter=meter_cycle(spec.meter),
        line_count=spec.line_count,
        rhyme_scheme=spec.rhyme_scheme,
        style=store.style(spec.style_id),
        boost_terms=spec.boost_terms,
        boost_topics=spec.boost_topics,
        temperature=spec.temperature,
        beam_width=spec.beam_width,
        branch=spec.branch,
        samples_per_line=spec.samples_per_line,
        max_expansions=spec.max_expansions,
        seed=spec.seed,
    )


# ---------------------------------------------------------------------------
# Session state as a fold over the journal


def initial_state(session_id: str, title: str, spec: dict, ts: float) -> dict:
    return {
        "session_id": session_id,
        "title": title,
        "spec": spec,
        "accepted_lines": [],
        "rhyme_bindings": {},
        "pending": [],
        "request_counter": 0,
        "complete": False,
        "created_at": ts,
        "updated_at": ts,
        "version": 1,
    }


def _letter_for_line(spec: dict, index: int) -> str | None:
    scheme = spec.get("rhyme_scheme") or ""
    return scheme[index] if index < len(scheme) else None


def _constraint_for_line(state: dict) -> RhymeConstraint | None:
    letter = _letter_for_line(state["spec"], len(state["accepted_lines"]))
    if letter is None:
        return None
    binding = state["rhyme_bindings"].get(letter)
    if binding is None:
        return None
    return RhymeConstraint(
        keys=frozenset(tuple(k) for k in binding["keys"]),
        forbidden=frozenset(binding["words"]),
    )


def apply_candidates(store: ModelStore, state: dict, payload: dict, ts: float) -> dict:
    if state["complete"]:
        raise ServiceError("poem_complete", "all lines are already accepted", 409)
    spec_dict = dict(state["spec"])
    overrides = payload.get("spec_overrides") or {}
    unknown = set(overrides) - OVERRIDE_KEYS - STRUCTURAL_KEYS
    if unknown:
        raise ServiceError("bad_override", f"cannot override {sorted(unknown)}", 400)
    structural = {k: v for k, v in overrides.items() if k in STRUCTURAL_KEYS}
    if structural and state["accepted_lines"]:
        raise ServiceError(
            "locked_spec", "rhyme scheme and line count are fixed once lines exist", 409
        )
    spec_dict.update(overrides)
    scheme = spec_dict.get("rhyme_scheme") or ""
    if scheme and len(scheme) != spec_dict["line_count"]:
        raise ServiceError(
            "bad_override",
            f"rhyme scheme {scheme!r} does not cover {spec_dict['line_count']} lines",
            400,
        )
    spec_model = SessionSpec(**spec_dict)
    gen_spec = build_generation_spec(store, spec_model)
    index = len(state["accepted_lines"])
    pattern = gen_spec.pattern_for_line(index)
    counter = state["request_counter"] + 1
    letter = _letter_for_line(spec_dict, index)
    constraint = None
    if letter is not None:
        binding = state["rhyme_bindings"].get(letter)
        if binding is not None:
            constraint = RhymeConstraint(
                keys=frozenset(tuple(k) for k in binding["keys"]),
                forbidden=frozenset(binding["words"]),
            )
    ending_whitelist = None
    if constraint is None and letter is not None and scheme.count(letter) > 1:
        ending_whitelist = rhymable_words(
            store.lexicon, usable_lexicon_words(store.lm, store.lexicon)
        )
    try:
        result = generate_line(
            gen_spec,
            pattern,
            [line["text"] for line in state["accepted_lines"]],
            constraint,
            seed=(spec_model.seed, counter),
            ending_whitelist=ending_whitelist,
        )
    except GenerationExhausted as exc:
        raise ServiceError("exhausted", str(exc), 409, details=exc.diagnostics)
    candidates = []
    for i, cand in enumerate(result.candidates[: payload["count"]]):
        candidates.append(
            {
                "id": f"{counter}-{i}",
                "text": cand.text,
                "score": cand.score,
                "logprob": cand.logprob,
                "boost": cand.boost,
                "rendering": cand.rendering,
                "word_renderings": rendering_segments(
                    cand.words, store.lexicon, pattern
                ),
                "words": cand.words,
                "boost_hits": [list(h) for h in cand.hits],
            }
        )
    new = json.loads(json.dumps(state))
    new["pending"] = candidates
    new["request_counter"] = counter
    if structural:
        new["spec"] = {**new["spec"], **structural}
    new["updated_at"] = ts
    new["version"] = state["version"] + 1
    return new


def apply_accept(store: ModelStore, state: dict, payload: dict, ts: float) -> dict:
    if state["complete"]:
        raise ServiceError("poem_complete", "all lines are already accepted", 409)
    spec = state["spec"]
    index = len(state["accepted_lines"])
    pattern = meter_cycle(spec["meter"])[index % len(meter_cycle(spec["meter"]))]
    letter = _letter_for_line(spec, index)
    warnings: list[str] = []
    if payload.get("candidate_id") is not None:
        wanted = payload["candidate_id"]
        match = [c for c in state["pending"] if c["id"] == wanted]
        if not match:
            raise ServiceError("stale_candidate", f"candidate {wanted!r} is not pending", 409)
        cand = match[0]
        line = {
            "text": cand["text"],
            "provenance": "generated",
            "candidate_id": cand["id"],
            "rendering": cand["rendering"],
            "word_renderings": cand["word_renderings"],
            "words": cand["words"],
            "warnings": [],
        }
        end_word = cand["words"][-1]
    else:
        text = (payload.get("text") or "").strip()
        if not text:
            raise ServiceError("empty_text", "custom text must be non-empty", 400)
        words = text.lower().split()
        rendering = ""
        word_renderings: list[str] = []
        try:
            segments = rendering_segments(words, store.lexicon, pattern)
            rendering = "".join(segments)
            word_renderings = segments
        except (GenerationError, LexiconError):
            if not validate_meter(text.lower(), pattern, store.lexicon):
                warnings.append(f"line does not scan as {pattern.template}")
        constraint = _constraint_for_line(state)
        end_word = words[-1]
        if constraint is not None:
            try:
                keys = rhyme_keys(end_word, store.lexicon)
            except LexiconError:
                keys = set()
            if end_word in constraint.forbidden:
                warnings.append(f"end word {end_word!r} repeats a bound rhyme word")
            elif not (keys & constraint.keys):
                warnings.append(f"end word {end_word!r} does not match the bound rhyme")
        line = {
            "text": text,
            "provenance": "edited",
            "candidate_id": None,
            "rendering": rendering,
            "word_renderings": word_renderings,
            "words": words,
            "warnings": warnings,
        }
    new = json.loads(json.dumps(state))
    new["accepted_lines"].append(line)
    new["pending"] = []
    if letter is not None:
        binding = new["rhyme_bindings"].get(letter)
        try:
            keys = sorted(list(k) for k in rhyme_keys(end_word, store.lexicon))
        except LexiconError:
            keys = []
        if binding is None:
            if keys:
                new["rhyme_bindings"][letter] = {"keys": keys, "words": [end_word]}
            else:
                line["warnings"].append(
                    f"end word {end_word!r} not in lexicon; rhyme letter {letter} unbound"
                )
        else:
            if end_word not in binding["words"]:
                binding["words"].append(end_word)
    new["complete"] = len(new["accepted_lines"]) >= spec["line_count"]
    new["updated_at"] = ts
    new["version"] = state["version"] + 1
    return new


def apply_import(state_payload: dict, session_id: str, ts: float) -> dict:
    content = json.loads(json.dumps(state_payload))
    content["session_id"] = session_id
    content["created_at"] = ts
    content["updated_at"] = ts
    content["version"] = 1
    content["pending"] = []
    return content


class SessionStore:
    """Per-session journals on disk; state caches fold the journal."""

    def __init__(self, store: ModelStore, sessions_dir: Path):
        self.store = store
        self.dir = Path(sessions_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.locks: dict[str, Lock] = {}
        self.cache: dict[str, dict] = {}
        for path in sorted(self.dir.glob("*.jsonl")):
            sid = path.stem
            try:
                self.cache[sid] = self.replay(sid)
                self.locks[sid] = Lock()
            except ServiceError:
                continue

    def journal_path(self, session_id: str) -> Path:
        return self.dir / f"{session_id}.jsonl"

    def entries(self, session_id: str) -> list[dict]:
        path = self.journal_path(session_id)
        if not path.exists():
            raise ServiceError("unknown_session", f"no session {session_id!r}", 404)
        return [json.loads(line) for line in path.read_text("utf-8").splitlines() if line]

    def replay(self, session_id: str) -> dict:
        stack: list[dict] = []
        for entry in self.entries(session_id):
            action, payload, ts = entry["action"], entry["payload"], entry["ts"]
            if action == "create":
                stack = [
                    initial_state(session_id, payload["title"], payload["spec"], ts)
                ]
            elif action == "import":
                stack = [apply_import(payload, session_id, ts)]
            elif action == "candidates":
                stack.append(apply_candidates(self.store, stack[-1], payload, ts))
            elif action == "accept":
                stack.append(apply_accept(self.store, stack[-1], payload, ts))
            elif action == "undo":
                stack.pop()
        if not stack:
            raise ServiceError("corrupt_journal", f"empty journal for {session_id!r}", 500)
        return stack[-1]

    def append(self, session_id: str, action: str, payload: dict) -> dict:
        """Apply one action, persist it, and cache the new state. The
        journal write is the linearization point."""
        lock = self.locks.setdefault(session_id, Lock())
        with lock:
            ts = time.time()
            state = self.cache.get(session_id)
            if action == "create":
                new = initial_state(session_id, payload["title"], payload["spec"], ts)
            elif action == "import":
                new = apply_import(payload, session_id, ts)
            elif state is None:
                raise ServiceError("unknown_session", f"no session {session_id!r}", 404)
            elif action == "candidates":
                new = apply_candidates(self.store, state, payload, ts)
            elif action == "accept":
                new = apply_accept(self.store, state, payload, ts)
            elif action == "undo":
                entries = self.entries(session_id)
                if len([e for e in entries if e["action"] != "undo"]) - len(
                    [e for e in entries if e["action"] == "undo"]
                ) <= 1:
                    raise ServiceError("nothing_to_undo", "no action to undo", 409)
                stack: list[dict] = []
                for entry in entries:
                    if entry["action"] == "create":
                        stack = [
                            initial_state(session_id, entry["payload"]["title"],
                                          entry["payload"]["spec"], entry["ts"])
                        ]
                    elif entry["action"] == "import":
                        stack = [apply_import(entry["payload"], session_id, entry["ts"])]
                    elif entry["action"] == "candidates":
                        stack.append(
                            apply_candidates(self.store, stack[-1], entry["payload"], entry["ts"])
                        )
                    elif entry["action"] == "accept":
                        stack.append(
                            apply_accept(self.store, stack[-1], entry["payload"], entry["ts"])
                        )
                    elif entry["action"] == "undo":
                        stack.pop()
                if len(stack) < 2:
                    raise ServiceError("nothing_to_undo", "no action to undo", 409)
                new = stack[-2]
            else:
                raise ServiceError("bad_action", f"unknown action {action!r}", 400)
            with open(self.journal_path(session_id), "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"action": action, "payload": payload, "ts": ts}) + "\n")
            self.cache[session_id] = new
            return new


def render_export(state: dict, fmt: str) -> tuple[str, str]:
    """(body, media type) of a session export."""
    title = state["title"] or f"untitled ({state['session_id'][:8]})"
    lines = [line["text"] for line in state["accepted_lines"]]
    if fmt == "text":
        return title + "\n\n" + "\n".join(lines) + ("\n" if lines else ""), "text/plain"
    if fmt == "markdown":
        body = "\n".join(f"{line}  " for line in lines)
        return f"# {title}\n\n{body}\n", "text/markdown"
    if fmt == "json":
        return json.dumps(state, sort_keys=True, indent=2), "application/json"
    raise ServiceError("bad_format", f"unknown export format {fmt!r}", 400)


def create_app(models_dir: Path | str, sessions_dir: Path | str | None = None) -> FastAPI:
    store = ModelStore(Path(models_dir))
    sessions = SessionStore(store, Path(sessions_dir or Path(models_dir) / "sessions"))
    app = FastAPI(title="versecraft", version="0.1.0")

    @app.exception_handler(ServiceError)
    async def service_error_handler(_request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "styles": sorted(store.styles),
            "alphabet": len(store.lm.vocab),
            "lexicon_words": len(store.lexicon.entries),
        }

    @app.get("/api/styles")
    def list_styles():
        return [
            {
                "id": style_id,
                "author_id": style.author_id,
                "high_entropy_terms": len(style.high_entropy_terms),
                "topic_words": len(style.topic_words),
                "expanded_terms": len(style.expanded_terms),
            }
            for style_id, style in sorted(store.styles.items())
        ]

    @app.post("/api/styles", status_code=201)
    def build_style(req: StyleBuildRequest):
        author_docs = [
            Document.from_text(d.get("id", f"doc{i}"), d["text"], d.get("title"))
            for i, d in enumerate(req.documents)
        ]
        if not author_docs:
            raise ServiceError("empty_corpus", "documents list is empty", 400)
        author = Corpus.from_documents(req.author_id, author_docs)
        if req.background:
            bg_docs = [
                Document.from_text(d.get("id", f"bg{i}"), d["text"], d.get("title"))
                for i, d in enumerate(req.background)
            ]
            background = Corpus.from_documents("background", bg_docs)
        else:
            from .cli import bundled_data_path
            from .corpus import ingest_directory

            background = ingest_directory(bundled_data_path("poems/background"), "background")
        config = StyleConfig(**req.config)
        style = build_style_model(author, background, config)
        store.add_style(req.author_id, style)
        return {"id": req.author_id}

    @app.post("/api/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        session_id = uuid.uuid4().hex
        store.style(req.spec.style_id)  # 404 before any journal exists
        if req.import_state is not None:
            state = sessions.append(session_id, "import", req.import_state)
        else:
            state = sessions.append(
                session_id, "create", {"title": req.title, "spec": req.spec.model_dump()}
            )
        return state

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        state = sessions.cache.get(session_id)
        if state is None:
            raise ServiceError("unknown_session", f"no session {session_id!r}", 404)
        return state

    @app.post("/api/sessions/{session_id}/candidates")
    def request_candidates(session_id: str, req: CandidatesRequest):
        payload = {"count": req.count}
        if req.spec_overrides:
            payload["spec_overrides"] = req.spec_overrides
        return sessions.append(session_id, "candidates", payload)

    @app.post("/api/sessions/{session_id}/accept")
    def accept(session_id: str, req: AcceptRequest):
        if req.candidate_id is None and not (req.text or "").strip():
            raise ServiceError("bad_accept", "need candidate_id or text", 400)
        return sessions.append(
            session_id, "accept", {"candidate_id": req.candidate_id, "text": req.text}
        )

    @app.post("/api/sessions/{session_id}/undo")
    def undo(session_id: str):
        return sessions.append(session_id, "undo", {})

    @app.post("/api/sessions/{session_id}/export")
    def export(session_id: str, format: str = "text"):
        state = sessions.cache.get(session_id)
        if state is None:
            raise ServiceError("unknown_session", f"no session {session_id!r}", 404)
        body, media = render_export(state, format)
        if format == "json":
            return JSONResponse(content=json.loads(body))
        return PlainTextResponse(content=body, media_type=media)

    return app
