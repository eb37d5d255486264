// Server payload shapes, verbatim from the composition service. The view
// layer never invents values for any of these fields.

export interface SessionSpec {
  style_id: string | null;
  meter: string;
  rhyme_scheme: string;
  line_count: number;
  boost_terms: number;
  boost_topics: number;
  temperature: number;
  beam_width: number;
  branch: number;
  samples_per_line: number;
  max_expansions: number;
  seed: number;
}

export interface Candidate {
  id: string;
  text: string;
  score: number;
  logprob: number;
  boost: number;
  rendering: string;
  word_renderings: string[];
  words: string[];
  boost_hits: [string, number, string][];
}

export interface AcceptedLine {
  text: string;
  provenance: "generated" | "edited";
  candidate_id: string | null;
  rendering: string;
  word_renderings: string[];
  words: string[];
  warnings: string[];
}

export interface RhymeBinding {
  keys: string[][];
  words: string[];
}

export interface SessionState {
  session_id: string;
  title: string;
  spec: SessionSpec;
  accepted_lines: AcceptedLine[];
  rhyme_bindings: Record<string, RhymeBinding>;
  pending: Candidate[];
  request_counter: number;
  complete: boolean;
  created_at: number;
  updated_at: number;
  version: number;
}

export interface StyleSummary {
  id: string;
  author_id: string;
  high_entropy_terms: number;
  topic_words: number;
  expanded_terms: number;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details?: Record<string, unknown>;
}
