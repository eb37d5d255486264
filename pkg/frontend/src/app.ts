// Browser bootstrap: a thin dispatcher between DOM events and the service.
// Every acknowledged response replaces the whole view model; the client
// holds no poem state of its own beyond the knob draft. The session id
// lives in the URL hash, so links are shareable and reload restores the
// session from the server journal.

import { ApiClient, ApiError } from "./api";
import {
  buildSessionView,
  canRequestCandidates,
  KnobState,
  knobsFromSpec,
  overridesFromKnobs,
  SessionView,
} from "./state";
import { renderApp, renderDiagnostics } from "./render";
import type { SessionState } from "./types";

const api = new ApiClient("");

let server: SessionState | null = null;
let knobs: KnobState | null = null;
let view: SessionView | null = null;

function root(): HTMLElement {
  const el = document.getElementById("app");
  if (!el) throw new Error("missing #app element");
  return el;
}

function show(state: SessionState, notice: string | null = null): void {
  server = state;
  if (knobs === null) {
    knobs = knobsFromSpec(state.spec);
  }
  view = buildSessionView(state, knobs, notice);
  window.location.hash = state.session_id;
  root().innerHTML = renderApp(view);
  wire();
}

async function refresh(notice: string | null): Promise<void> {
  if (!server) return;
  show(await api.getSession(server.session_id), notice);
}

async function onRequestCandidates(): Promise<void> {
  if (!server || !knobs || !canRequestCandidates(knobs)) return;
  try {
    show(await api.requestCandidates(server.session_id, 5, overridesFromKnobs(knobs, server.spec)));
  } catch (err) {
    if (err instanceof ApiError && err.code === "exhausted") {
      root().insertAdjacentHTML("beforeend", renderDiagnostics(err.details));
      return;
    }
    throw err;
  }
}

async function onAccept(candidateId: string): Promise<void> {
  if (!server) return;
  try {
    show(await api.acceptCandidate(server.session_id, candidateId));
  } catch (err) {
    if (err instanceof ApiError && err.code === "stale_candidate") {
      // another tab moved the session on: fall back to authoritative state
      await refresh("candidates were stale; the board has been refreshed");
      return;
    }
    throw err;
  }
}

async function onUndo(): Promise<void> {
  if (!server) return;
  try {
    show(await api.undo(server.session_id));
  } catch (err) {
    if (err instanceof ApiError && err.code === "nothing_to_undo") {
      await refresh("nothing to undo");
      return;
    }
    throw err;
  }
}

async function onExport(format: "text" | "markdown" | "json"): Promise<void> {
  if (!server) return;
  const body = await api.exportSession(server.session_id, format);
  const blob = new Blob([body], { type: "text/plain" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = `${server.title || "poem"}.${format === "markdown" ? "md" : format}`;
  link.click();
  URL.revokeObjectURL(link.href);
}

function readKnobs(form: HTMLFormElement): KnobState {
  const data = new FormData(form);
  const num = (name: string) => Number(data.get(name));
  return {
    meter: String(data.get("meter") ?? ""),
    rhymeScheme: String(data.get("rhymeScheme") ?? ""),
    lineCount: num("lineCount"),
    boostTerms: num("boostTerms"),
    boostTopics: num("boostTopics"),
    temperature: num("temperature"),
    beamWidth: num("beamWidth"),
    seed: num("seed"),
  };
}

function wire(): void {
  const el = root();
  el.querySelectorAll<HTMLButtonElement>("button.accept").forEach((button) => {
    button.addEventListener("click", () => void onAccept(button.dataset.id ?? ""));
  });
  el.querySelector<HTMLButtonElement>("button.undo")?.addEventListener("click", () => void onUndo());
  el.querySelector<HTMLButtonElement>("button.request")?.addEventListener("click", (ev) => {
    ev.preventDefault();
    void onRequestCandidates();
  });
  el.querySelectorAll<HTMLButtonElement>("button.export").forEach((button) => {
    button.addEventListener("click", () =>
      void onExport((button.dataset.format ?? "text") as "text" | "markdown" | "json"),
    );
  });
  const form = el.querySelector<HTMLFormElement>("form.knobs");
  form?.addEventListener("change", () => {
    knobs = readKnobs(form);
    if (server) {
      // re-render the panel with validation; accepted lines are untouched
      show(server, view?.notice ?? null);
    }
  });
}

async function start(): Promise<void> {
  const existing = window.location.hash.replace(/^#/, "");
  if (existing) {
    show(await api.getSession(existing));
    return;
  }
  const styles = await api.listStyles();
  const state = await api.createSession({
    title: "new poem",
    spec: styles.length ? { style_id: styles[0].id } : {},
  });
  show(state);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void start();
}
