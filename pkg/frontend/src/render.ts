// HTML renderers: pure functions from the view model to markup strings,
// testable without a DOM. Stress glyphs sit under each word's syllables;
// boost-hit words are marked; scores and scansion appear exactly as the
// server sent them.

import type {
  BindingView,
  CandidateView,
  KnobState,
  PoemLineView,
  SessionView,
} from "./state";
import { validateKnobs } from "./state";

const STRESS_GLYPHS: Record<string, string> = { U: "˘", S: "ˈ" };

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function stressGlyphs(stresses: string): string {
  return [...stresses].map((c) => STRESS_GLYPHS[c] ?? c).join("");
}

export function renderPoemLine(line: PoemLineView): string {
  const badge = `<span class="badge badge-${line.provenance}">${line.provenance}</span>`;
  const warnings = line.warnings.length
    ? `<ul class="warnings">${line.warnings
        .map((w) => `<li>${escapeHtml(w)}</li>`)
        .join("")}</ul>`
    : "";
  return (
    `<li class="poem-line" data-index="${line.index}">` +
    `<span class="line-text">${escapeHtml(line.text)}</span>` +
    `<span class="line-scansion">${escapeHtml(stressGlyphs(line.rendering))}</span>` +
    `${badge}${warnings}</li>`
  );
}

export function renderPoem(lines: PoemLineView[]): string {
  if (!lines.length) {
    return `<p class="empty">No lines yet. Request candidates to begin.</p>`;
  }
  return `<ol class="poem">${lines.map(renderPoemLine).join("")}</ol>`;
}

export function renderBindings(bindings: BindingView[]): string {
  if (!bindings.length) {
    return "";
  }
  const items = bindings
    .map((b) => `<li><b>${escapeHtml(b.letter)}</b> rhymes like ${escapeHtml(b.exampleWord)}</li>`)
    .join("");
  return `<ul class="bindings">${items}</ul>`;
}

export function renderCandidate(candidate: CandidateView): string {
  const syllables = candidate.syllables
    .map((s) => {
      const marked = candidate.boostWords.includes(s.word)
        ? `<mark>${escapeHtml(s.word)}</mark>`
        : escapeHtml(s.word);
      return (
        `<span class="syll">${marked}` +
        `<span class="stress">${escapeHtml(stressGlyphs(s.stresses))}</span></span>`
      );
    })
    .join(" ");
  const width = Math.max(2, Math.round(candidate.bar * 100));
  return (
    `<li class="candidate" data-id="${escapeHtml(candidate.id)}">` +
    `<div class="cand-words">${syllables}</div>` +
    `<div class="score-bar" style="width:${width}%"></div>` +
    `<span class="score">${candidate.score.toFixed(3)}</span>` +
    `<button class="accept" data-id="${escapeHtml(candidate.id)}">accept</button>` +
    `</li>`
  );
}

export function renderCandidateBoard(view: SessionView): string {
  if (view.complete) {
    return (
      `<div class="done">Poem complete.` +
      `<button class="export" data-format="text">export text</button>` +
      `<button class="export" data-format="markdown">export markdown</button>` +
      `<button class="export" data-format="json">export json</button></div>`
    );
  }
  if (!view.candidates.length) {
    return `<p class="empty">No candidates. Use “request candidates”.</p>`;
  }
  return `<ul class="candidates">${view.candidates.map(renderCandidate).join("")}</ul>`;
}

export function renderKnobPanel(knobs: KnobState): string {
  const errors = validateKnobs(knobs);
  const blocked = errors.length > 0;
  const issue = errors.length
    ? `<ul class="knob-errors">${errors.map((e) => `<li>${escapeHtml(e)}</li>`).join("")}</ul>`
    : "";
  return (
    `<form class="knobs">` +
    `<label>meter <input name="meter" value="${escapeHtml(knobs.meter)}"></label>` +
    `<label>rhyme scheme <input name="rhymeScheme" value="${escapeHtml(knobs.rhymeScheme)}"></label>` +
    `<label>lines <input name="lineCount" type="number" value="${knobs.lineCount}"></label>` +
    `<label>term boost <input name="boostTerms" type="range" min="0" max="4" step="0.1" value="${knobs.boostTerms}"></label>` +
    `<label>topic boost <input name="boostTopics" type="range" min="0" max="4" step="0.1" value="${knobs.boostTopics}"></label>` +
    `<label>temperature <input name="temperature" type="number" step="0.05" value="${knobs.temperature}"></label>` +
    `<label>beam <input name="beamWidth" type="number" value="${knobs.beamWidth}"></label>` +
    `<label>seed <input name="seed" type="number" value="${knobs.seed}"></label>` +
    issue +
    `<button class="request" ${blocked ? "disabled" : ""}>request candidates</button>` +
    `</form>`
  );
}

export function renderDiagnostics(details: Record<string, unknown>): string {
  const prunes = (details.prune_counts ?? {}) as Record<string, number>;
  const rows = Object.keys(prunes)
    .sort()
    .map((k) => `<tr><td>${escapeHtml(k)}</td><td>${prunes[k]}</td></tr>`)
    .join("");
  const partial = details.best_partial
    ? `<p>best partial: <code>${escapeHtml(String(details.best_partial))}</code></p>`
    : "";
  return (
    `<div class="diagnostics"><h3>search exhausted</h3>` +
    `<table><tr><th>prune</th><th>count</th></tr>${rows}</table>${partial}</div>`
  );
}

export function renderNotice(notice: string | null): string {
  return notice ? `<div class="notice">${escapeHtml(notice)}</div>` : "";
}

export function renderApp(view: SessionView): string {
  return (
    `<section class="session" data-version="${view.version}">` +
    `<h1>${escapeHtml(view.title)}</h1>` +
    renderNotice(view.notice) +
    `<div class="columns"><div class="left">` +
    `<h2>poem</h2>` +
    renderPoem(view.poemLines) +
    renderBindings(view.bindings) +
    `<button class="undo">undo</button>` +
    `</div><div class="right">` +
    `<h2>candidates</h2>` +
    renderCandidateBoard(view) +
    renderKnobPanel(view.knobs) +
    `</div></div></section>`
  );
}
