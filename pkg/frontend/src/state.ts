// The view model: a serializable mirror of the server session state plus
// the client-local knob draft and a transient notice. Every poetry value
// (text, scores, scansion, rhyme bindings, warnings) is copied verbatim
// from server payloads; the client computes nothing of its own.

import type { Candidate, SessionSpec, SessionState } from "./types";

export interface KnobState {
  meter: string;
  rhymeScheme: string;
  lineCount: number;
  boostTerms: number;
  boostTopics: number;
  temperature: number;
  beamWidth: number;
  seed: number;
}

export interface SyllableView {
  word: string;
  stresses: string; // the server's stress string for this word, as sent
}

export interface CandidateView {
  id: string;
  text: string;
  score: number;
  boost: number;
  bar: number; // presentation width in (0, 1], relative to the best score
  syllables: SyllableView[];
  boostWords: string[];
}

export interface PoemLineView {
  index: number;
  text: string;
  provenance: string;
  rendering: string;
  warnings: string[];
}

export interface BindingView {
  letter: string;
  exampleWord: string;
}

export interface SessionView {
  sessionId: string;
  title: string;
  version: number;
  requestCounter: number;
  complete: boolean;
  poemLines: PoemLineView[];
  bindings: BindingView[];
  candidates: CandidateView[];
  knobs: KnobState;
  notice: string | null;
}

export function knobsFromSpec(spec: SessionSpec): KnobState {
  return {
    meter: spec.meter,
    rhymeScheme: spec.rhyme_scheme,
    lineCount: spec.line_count,
    boostTerms: spec.boost_terms,
    boostTopics: spec.boost_topics,
    temperature: spec.temperature,
    beamWidth: spec.beam_width,
    seed: spec.seed,
  };
}

function candidateView(candidate: Candidate, bestScore: number): CandidateView {
  const boostWords = new Set<string>();
  for (const [key] of candidate.boost_hits) {
    for (const word of key.split(" ")) {
      boostWords.add(word);
    }
  }
  return {
    id: candidate.id,
    text: candidate.text,
    score: candidate.score,
    boost: candidate.boost,
    bar: Math.exp(candidate.score - bestScore),
    syllables: candidate.words.map((word, i) => ({
      word,
      stresses: candidate.word_renderings[i] ?? "",
    })),
    boostWords: [...boostWords].sort(),
  };
}

export function buildSessionView(
  state: SessionState,
  knobs?: KnobState,
  notice: string | null = null,
): SessionView {
  const bestScore = state.pending.length
    ? Math.max(...state.pending.map((c) => c.score))
    : 0;
  return {
    sessionId: state.session_id,
    title: state.title,
    version: state.version,
    requestCounter: state.request_counter,
    complete: state.complete,
    poemLines: state.accepted_lines.map((line, index) => ({
      index,
      text: line.text,
      provenance: line.provenance,
      rendering: line.rendering,
      warnings: [...line.warnings],
    })),
    bindings: Object.keys(state.rhyme_bindings)
      .sort()
      .map((letter) => ({
        letter,
        exampleWord: state.rhyme_bindings[letter].words[0] ?? "",
      })),
    candidates: state.pending.map((c) => candidateView(c, bestScore)),
    knobs: knobs ?? knobsFromSpec(state.spec),
    notice,
  };
}

function sortKeysDeep(value: unknown): unknown {
  if (Array.isArray(value)) {
    return value.map(sortKeysDeep);
  }
  if (value !== null && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value as Record<string, unknown>).sort()) {
      out[key] = sortKeysDeep((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}

export function serializeView(view: SessionView): string {
  return JSON.stringify(sortKeysDeep(view));
}

export function validateKnobs(knobs: KnobState): string[] {
  const errors: string[] = [];
  if (knobs.rhymeScheme && !/^[A-Z]+$/.test(knobs.rhymeScheme)) {
    errors.push("rhyme scheme must be capital letters, e.g. ABAB");
  }
  if (knobs.rhymeScheme && knobs.rhymeScheme.length !== knobs.lineCount) {
    errors.push(
      `rhyme scheme ${knobs.rhymeScheme} must cover exactly ${knobs.lineCount} lines`,
    );
  }
  if (knobs.lineCount < 1) {
    errors.push("line count must be at least 1");
  }
  if (knobs.boostTerms < 0 || knobs.boostTopics < 0) {
    errors.push("boost strengths must be zero or positive");
  }
  if (knobs.temperature <= 0) {
    errors.push("temperature must be positive");
  }
  if (knobs.beamWidth < 1) {
    errors.push("beam width must be at least 1");
  }
  return errors;
}

export function canRequestCandidates(knobs: KnobState): boolean {
  return validateKnobs(knobs).length === 0;
}

// Only fields that differ from the server spec ride along with the next
// candidate request; an untouched panel sends nothing.
export function overridesFromKnobs(
  knobs: KnobState,
  serverSpec: SessionSpec,
): Record<string, unknown> {
  const out: Record<string, unknown> = {};
  if (knobs.meter !== serverSpec.meter) out.meter = knobs.meter;
  if (knobs.rhymeScheme !== serverSpec.rhyme_scheme) out.rhyme_scheme = knobs.rhymeScheme;
  if (knobs.lineCount !== serverSpec.line_count) out.line_count = knobs.lineCount;
  if (knobs.boostTerms !== serverSpec.boost_terms) out.boost_terms = knobs.boostTerms;
  if (knobs.boostTopics !== serverSpec.boost_topics) out.boost_topics = knobs.boostTopics;
  if (knobs.temperature !== serverSpec.temperature) out.temperature = knobs.temperature;
  if (knobs.beamWidth !== serverSpec.beam_width) out.beam_width = knobs.beamWidth;
  if (knobs.seed !== serverSpec.seed) out.seed = knobs.seed;
  return out;
}
