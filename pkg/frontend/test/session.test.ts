// The scripted-session contract, driven against exchanges recorded from
// the real service: create, request five candidates, accept, request
// again, survive a stale accept, accept, export, undo. After every
// acknowledged action the rendered view must mirror the server state, and
// undo must restore the serialized view model byte for byte.

import { describe, expect, it } from "vitest";
import { ApiClient, ApiError } from "../src/api";
import { buildSessionView, serializeView } from "../src/state";
import { renderApp } from "../src/render";
import type { SessionSpec, SessionState } from "../src/types";
import { loadRecordedSession, StubServer } from "./stub";

function expectMirrors(state: SessionState): void {
  const view = buildSessionView(state);
  expect(view.poemLines.length).toBe(state.accepted_lines.length);
  expect(view.candidates.length).toBe(state.pending.length);
  view.poemLines.forEach((line, i) => {
    expect(line.text).toBe(state.accepted_lines[i].text);
    expect(line.rendering).toBe(state.accepted_lines[i].rendering);
  });
  view.candidates.forEach((cand, i) => {
    expect(cand.text).toBe(state.pending[i].text);
    expect(cand.score).toBe(state.pending[i].score);
    cand.syllables.forEach((s, j) => {
      expect(s.word).toBe(state.pending[i].words[j]);
      expect(s.stresses).toBe(state.pending[i].word_renderings[j]);
    });
  });
}

describe("scripted session against the recorded stub server", () => {
  it("mirrors server state at every step and undoes byte-identically", async () => {
    const recorded = loadRecordedSession();
    const stub = new StubServer(recorded.entries);
    const api = new ApiClient("", stub.fetch);
    const sid = recorded.session_id;

    // create
    const createBody = recorded.entries[0].body as { title: string; spec: Partial<SessionSpec> };
    let state = await api.createSession(createBody);
    expect(state.session_id).toBe(sid);
    expect(state.accepted_lines.length).toBe(0);
    expectMirrors(state);

    // request 5 candidates
    state = await api.requestCandidates(sid, 5);
    expect(state.pending.length).toBeGreaterThan(0);
    expect(state.pending.length).toBeLessThanOrEqual(5);
    expectMirrors(state);

    // accept the first candidate
    const firstId = (recorded.entries[2].body as { candidate_id: string }).candidate_id;
    state = await api.acceptCandidate(sid, firstId);
    expect(state.accepted_lines.length).toBe(1);
    expect(state.pending.length).toBe(0);
    expectMirrors(state);

    // request again; snapshot the view before the second accept
    state = await api.requestCandidates(sid, 5);
    expectMirrors(state);
    const snapshot = serializeView(buildSessionView(state));

    // a stale accept fails loudly; the board recovers by refetching
    let staleError: ApiError | null = null;
    try {
      await api.acceptCandidate(sid, "99-99");
    } catch (err) {
      staleError = err as ApiError;
    }
    expect(staleError?.code).toBe("stale_candidate");
    state = await api.getSession(sid);
    expectMirrors(state);

    // accept the second line; the couplet completes
    const secondId = (recorded.entries[6].body as { candidate_id: string }).candidate_id;
    state = await api.acceptCandidate(sid, secondId);
    expect(state.accepted_lines.length).toBe(2);
    expect(state.complete).toBe(true);
    expectMirrors(state);
    const completedLines = state.accepted_lines.map((l) => l.text);

    // rhyme bindings display the letter with an example end word
    const view = buildSessionView(state);
    expect(view.bindings.length).toBe(1);
    expect(view.bindings[0].letter).toBe("A");
    expect(view.bindings[0].exampleWord).toBe(state.accepted_lines[0].words.at(-1));

    // the completed board offers exports; text export carries the poem
    expect(renderApp(view)).toContain("export");
    const text = await api.exportSession(sid, "text");
    for (const line of completedLines) {
      expect(text).toContain(line);
    }
    const exportedJson = JSON.parse(await api.exportSession(sid, "json")) as SessionState;
    expect(exportedJson.accepted_lines.map((l) => l.text)).toEqual(completedLines);

    // undo restores the pre-accept view model byte for byte
    state = await api.undo(sid);
    expect(serializeView(buildSessionView(state))).toBe(snapshot);
    const refreshed = await api.getSession(sid);
    expect(serializeView(buildSessionView(refreshed))).toBe(snapshot);

    expect(stub.remaining).toBe(0);
  });

  it("renders line counts that track the server after every action", async () => {
    const recorded = loadRecordedSession();
    const stub = new StubServer(recorded.entries);
    const api = new ApiClient("", stub.fetch);
    const sid = recorded.session_id;
    const expectedCounts: number[] = [];
    const renderedCounts: number[] = [];

    const track = (state: SessionState) => {
      expectedCounts.push(state.accepted_lines.length);
      const html = renderApp(buildSessionView(state));
      renderedCounts.push((html.match(/class="poem-line"/g) ?? []).length);
      return state;
    };

    track(await api.createSession(recorded.entries[0].body as never));
    track(await api.requestCandidates(sid, 5));
    track(await api.acceptCandidate(sid, (recorded.entries[2].body as never as { candidate_id: string }).candidate_id));
    track(await api.requestCandidates(sid, 5));
    await api.acceptCandidate(sid, "99-99").catch(() => undefined);
    track(await api.getSession(sid));
    track(await api.acceptCandidate(sid, (recorded.entries[6].body as never as { candidate_id: string }).candidate_id));
    await api.exportSession(sid, "text");
    await api.exportSession(sid, "json");
    track(await api.undo(sid));
    track(await api.getSession(sid));

    expect(renderedCounts).toEqual(expectedCounts);
    expect(expectedCounts).toEqual([0, 0, 1, 1, 1, 2, 1, 1]);
  });
});
