"""Constrained verse generation.

A stochastic beam search runs over the character language model. The model
proposes characters (temperature-shaped, Gumbel-perturbed when the branch
factor is below the alphabet size); the form machinery disposes: each
completed word must be in the pronunciation lexicon and must keep at least
one meter position alive, and a line can only terminate when the full
pattern is consumed and any rhyme constraint is met.

Scores are exact by construction: cumulative temperature-shaped character
log-probability plus boost bonuses awarded when a completed word (or the
bigram it closes) belongs to the style model's term sets. The proposal
noise influences only which children exist, never their scores, so an
unlimited-width, unlimited-branch search degenerates to exhaustive
enumeration and its top result is the true argmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .charlm import DecoderState, LstmParams, _step
from .formshaper import (
    MeterPattern,
    PronLexicon,
    advance_positions,
    rhyme_keys,
    stress_renderings,
)
from .stylemodel import StyleModel


class GenerationError(Exception):
    pass


class GenerationExhausted(GenerationError):
    """Step budget ran out before any candidate line completed."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass
class GenerationSpec:
    lm: LstmParams
    lexicon: PronLexicon
    meter: list[MeterPattern]
    line_count: int
    rhyme_scheme: str = ""
    style: StyleModel | None = None
    boost_terms: float = 0.0
    boost_topics: float = 0.0
    temperature: float = 0.8
    beam_width: int | None = 16
    branch: int | None = 4
    samples_per_line: int = 8
    max_expansions: int = 2000
    max_line_chars: int = 80
    line_choice: str = "sample"  # accept lines by score-weighted draw, or "best"
    seed: int = 0

    def __post_init__(self):
        if self.rhyme_scheme and len(self.rhyme_scheme) != self.line_count:
            raise ValueError(
                f"rhyme scheme {self.rhyme_scheme!r} does not cover {self.line_count} lines"
            )
        if self.boost_terms < 0 or self.boost_topics < 0:
            raise ValueError("boost strengths must be >= 0")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.beam_width is not None and self.beam_width < 1:
            raise ValueError("beam width must be >= 1 (or None for unlimited)")
        if not self.meter:
            raise ValueError("at least one meter pattern is required")
        if self.line_choice not in ("sample", "best"):
            raise ValueError(f"line_choice must be 'sample' or 'best', got {self.line_choice!r}")

    def pattern_for_line(self, index: int) -> MeterPattern:
        return self.meter[index % len(self.meter)]

    def snapshot(self) -> dict:
        return {
            "meter": [p.template for p in self.meter],
            "meter_name": self.meter[0].name,
            "rhyme_scheme": self.rhyme_scheme,
            "line_count": self.line_count,
            "boost_terms": self.boost_terms,
            "boost_topics": self.boost_topics,
            "temperature": self.temperature,
            "beam_width": self.beam_width,
            "branch": self.branch,
            "samples_per_line": self.samples_per_line,
            "max_expansions": self.max_expansions,
            "seed": self.seed,
            "style": self.style.author_id if self.style else None,
        }


@dataclass
class RhymeConstraint:
    keys: frozenset
    forbidden: frozenset


def usable_lexicon_words(lm: LstmParams, lexicon: PronLexicon) -> list[str]:
    """Lexicon words whose every character the model can emit."""
    return [w for w in lexicon.words() if all(c in lm.vocab.ids for c in w)]


def rhymable_words(lexicon: PronLexicon, candidates: list[str]) -> frozenset:
    """Words with at least one distinct rhyme partner among `candidates`.

    A line that must later be rhymed with can only end on one of these;
    binding an unrhymable word would doom the partner line outright.
    """
    by_key: dict[tuple, set] = {}
    for word in candidates:
        for key in rhyme_keys(word, lexicon):
            by_key.setdefault(key, set()).add(word)
    good = set()
    for members in by_key.values():
        if len(members) > 1:
            good.update(members)
    return frozenset(good)


def boost_delta(style: StyleModel | None, prev_word: str | None, word: str,
                boost_terms: float, boost_topics: float):
    """Log-score bonus for completing `word`, plus the hits that earned it.

    The word-choice channel scores the better of the unigram and the bigram
    it closes; the topic channel scores the unigram.
    """
    if style is None or (boost_terms == 0.0 and boost_topics == 0.0):
        return 0.0, []
    hits = []
    delta = 0.0
    w_uni = style.term_weight(word)
    w_bi = style.term_weight(f"{prev_word} {word}") if prev_word else 0.0
    if boost_terms > 0.0 and max(w_uni, w_bi) > 0.0:
        if w_bi > w_uni:
            hits.append((f"{prev_word} {word}", w_bi, "terms"))
            delta += boost_terms * w_bi
        else:
            hits.append((word, w_uni, "terms"))
            delta += boost_terms * w_uni
    w_topic = style.topic_weight(word)
    if boost_topics > 0.0 and w_topic > 0.0:
        hits.append((word, w_topic, "topics"))
        delta += boost_topics * w_topic
    return delta, hits


@dataclass
class Hypothesis:
    chars: str
    state: DecoderState
    last_id: int
    logprob: float
    boost: float
    words: list[str]
    partial: str
    positions: frozenset
    hits: list

    @property
    def score(self) -> float:
        return self.logprob + self.boost


@dataclass
class LineCandidate:
    text: str
    score: float
    logprob: float
    boost: float
    words: list[str]
    rendering: str
    hits: list


@dataclass
class LineResult:
    candidates: list[LineCandidate]
    prune_counts: dict[str, int]
    expansions: int


def rendering_segments(words: list[str], lexicon: PronLexicon,
                       pattern: MeterPattern) -> list[str]:
    """Per-word stress renderings forming one exact match of the pattern."""

    def walk(i, pos):
        if i == len(words):
            return [] if pos == len(pattern) else None
        for r in sorted(stress_renderings(words[i], lexicon)):
            end = pos + len(r)
            if end <= len(pattern) and all(
                t == "*" or t == c for c, t in zip(r, pattern.template[pos:end])
            ):
                rest = walk(i + 1, end)
                if rest is not None:
                    return [r] + rest
        return None

    segments = walk(0, 0)
    if segments is None:
        raise GenerationError(f"no rendering of {words} matches {pattern.template}")
    return segments


def _chosen_rendering(words: list[str], lexicon: PronLexicon, pattern: MeterPattern) -> str:
    return "".join(rendering_segments(words, lexicon, pattern))


def _matches(rendering: str, template: str) -> bool:
    return all(t == "*" or t == c for c, t in zip(rendering, template))


def _position_feasibility(
    pattern: MeterPattern,
    all_renderings: set[str],
    closing_renderings: set[str],
) -> tuple[list[bool], list[bool]]:
    """Per pattern position: can any word sequence still close the line on a
    target word (feasible), and can any word continue without closing
    (can_continue)? Drives dead-end pruning and end-of-line funneling."""
    n = len(pattern)
    feasible = [False] * (n + 1)
    can_continue = [False] * (n + 1)
    for p in range(n - 1, -1, -1):
        for r in closing_renderings:
            if p + len(r) == n and _matches(r, pattern.template[p:]):
                feasible[p] = True
                break
        for r in all_renderings:
            end = p + len(r)
            if end < n and _matches(r, pattern.template[p:end]) and feasible[end]:
                can_continue[p] = True
                feasible[p] = True
                break
    return feasible, can_continue


def _context_state(spec: GenerationSpec, left_context: list[str]) -> tuple[DecoderState, int]:
    """LM state after the poem so far; generation is conditioned on the
    poem-end mark followed by the accepted lines."""
    vocab = spec.lm.vocab
    state = DecoderState.initial(spec.lm, 1)
    ids = [vocab.end_id]
    for line in left_context:
        ids.extend(int(i) for i in vocab.encode(line + "\n"))
    for cid in ids[:-1]:
        _, state = _step(spec.lm, state, np.array([cid], dtype=np.int64))
    return state, ids[-1]


def generate_line(
    spec: GenerationSpec,
    pattern: MeterPattern,
    left_context: list[str],
    constraint: RhymeConstraint | None = None,
    seed=0,
    trace: list | None = None,
    ending_whitelist: frozenset | None = None,
) -> LineResult:
    """Beam-search one line under meter, lexicon, and rhyme constraints.

    Returns up to samples_per_line candidates sorted by score. Raises
    GenerationExhausted when the expansion budget empties with no complete
    candidate.
    """
    lm = spec.lm
    vocab = lm.vocab
    lexicon = spec.lexicon
    rng = np.random.default_rng(seed)
    tau = spec.temperature

    usable_words = usable_lexicon_words(lm, lexicon)
    if not usable_words:
        raise GenerationError("no lexicon word is expressible in the model alphabet")
    prefixes = {w[:i] for w in usable_words for i in range(1, len(w) + 1)}
    word_char_ids = sorted({vocab.ids[c] for w in usable_words for c in w})
    space_id = vocab.ids.get(" ")
    newline_id = vocab.ids["\n"]
    if space_id is None:
        raise GenerationError("model alphabet has no space character")

    # line endings the search may aim for, and the per-position lookahead
    # that prunes paths which can no longer reach one
    if constraint is not None:
        targets = [
            w for w in usable_words
            if w not in constraint.forbidden and rhyme_keys(w, lexicon) & constraint.keys
        ]
    elif ending_whitelist is not None:
        targets = [w for w in usable_words if w in ending_whitelist]
    else:
        targets = usable_words
    all_renderings = {r for w in usable_words for r in stress_renderings(w, lexicon)}
    closing_renderings = {r for w in targets for r in stress_renderings(w, lexicon)}
    feasible, can_continue = _position_feasibility(pattern, all_renderings, closing_renderings)
    target_prefixes = {w[:i] for w in targets for i in range(1, len(w) + 1)}

    state0, last0 = _context_state(spec, left_context)
    root = Hypothesis(
        chars="",
        state=state0,
        last_id=last0,
        logprob=0.0,
        boost=0.0,
        words=[],
        partial="",
        positions=frozenset({0}),
        hits=[],
    )
    beam = [root]
    completed: dict[str, LineCandidate] = {}
    prunes = {
        "oov": 0, "meter": 0, "rhyme": 0, "repeat": 0, "length": 0, "unrhymable": 0,
    }
    expansions = 0

    def finish_word(hyp: Hypothesis, word: str):
        """Validate a completed word; returns (positions, delta, hits) or a
        prune reason."""
        if word not in lexicon:
            return "oov"
        positions = advance_positions(
            set(hyp.positions), stress_renderings(word, lexicon), pattern
        )
        if not positions:
            return "meter"
        prev = hyp.words[-1] if hyp.words else None
        delta, hits = boost_delta(spec.style, prev, word, spec.boost_terms, spec.boost_topics)
        return frozenset(positions), delta, hits

    while beam and expansions < spec.max_expansions:
        if trace is not None:
            trace.append([h.chars for h in beam])
        expansions += len(beam)
        stacked = DecoderState(
            np.concatenate([h.state.h for h in beam], axis=1),
            np.concatenate([h.state.c for h in beam], axis=1),
        )
        last_ids = np.array([h.last_id for h in beam], dtype=np.int64)
        logits, new_state = _step(lm, stacked, last_ids)
        shifted = logits / tau
        shifted -= shifted.max(axis=1, keepdims=True)
        logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))

        children: list[Hypothesis] = []
        for b, hyp in enumerate(beam):
            # structural filter: which symbols may follow. When no live
            # position can take a continuing word, the word being typed must
            # close the line, so only target-word prefixes remain open.
            must_close = not any(can_continue[p] for p in hyp.positions)
            live_prefixes = target_prefixes if must_close else prefixes
            allowed = []
            if len(hyp.chars) < spec.max_line_chars:
                for cid in word_char_ids:
                    if hyp.partial + vocab.chars[cid] in live_prefixes:
                        allowed.append(cid)
                    # a char breaking every live prefix could never complete
                    # an acceptable word; skipping it only prunes earlier
            if hyp.partial:
                allowed.append(space_id)
                allowed.append(newline_id)
            if not allowed:
                prunes["length"] += 1
                continue
            allowed = np.array(allowed, dtype=np.int64)
            scores = logp[b, allowed]
            if spec.branch is not None and spec.branch < len(allowed):
                gumbel = -np.log(-np.log(rng.random(len(allowed))))
                order = np.argsort(-(scores + gumbel), kind="stable")[: spec.branch]
            else:
                order = np.argsort(-scores, kind="stable")
            child_state = new_state.select([b])
            for j in order:
                cid = int(allowed[j])
                lp = float(logp[b, cid])
                ch = vocab.chars[cid]
                if cid == space_id or cid == newline_id:
                    outcome = finish_word(hyp, hyp.partial)
                    if isinstance(outcome, str):
                        prunes[outcome] += 1
                        continue
                    positions, delta, hits = outcome
                    words = hyp.words + [hyp.partial]
                    if cid == newline_id:
                        if len(pattern) not in positions:
                            prunes["meter"] += 1
                            continue
                        final_word = hyp.partial
                        if constraint is not None:
                            if final_word in constraint.forbidden:
                                prunes["repeat"] += 1
                                continue
                            if not (rhyme_keys(final_word, lexicon) & constraint.keys):
                                prunes["rhyme"] += 1
                                continue
                        if ending_whitelist is not None and final_word not in ending_whitelist:
                            prunes["unrhymable"] += 1
                            continue
                        cand = LineCandidate(
                            text=hyp.chars,
                            score=hyp.logprob + lp + hyp.boost + delta,
                            logprob=hyp.logprob + lp,
                            boost=hyp.boost + delta,
                            words=words,
                            rendering=_chosen_rendering(words, lexicon, pattern),
                            hits=hyp.hits + hits,
                        )
                        old = completed.get(cand.text)
                        if old is None or cand.score > old.score:
                            completed[cand.text] = cand
                        continue
                    # a space: the line continues; keep only positions from
                    # which some word sequence can still close on a target
                    live = frozenset(
                        p for p in positions if p < len(pattern) and feasible[p]
                    )
                    if not live:
                        prunes["meter"] += 1
                        continue
                    children.append(
                        Hypothesis(
                            chars=hyp.chars + ch,
                            state=child_state,
                            last_id=cid,
                            logprob=hyp.logprob + lp,
                            boost=hyp.boost + delta,
                            words=words,
                            partial="",
                            positions=live,
                            hits=hyp.hits + hits,
                        )
                    )
                else:
                    children.append(
                        Hypothesis(
                            chars=hyp.chars + ch,
                            state=child_state,
                            last_id=cid,
                            logprob=hyp.logprob + lp,
                            boost=hyp.boost,
                            words=list(hyp.words),
                            partial=hyp.partial + ch,
                            positions=hyp.positions,
                            hits=list(hyp.hits),
                        )
                    )
        children.sort(key=lambda h: -h.score)
        beam = children if spec.beam_width is None else children[: spec.beam_width]

    if not completed:
        best_partial = max(
            (h for h in beam), key=lambda h: h.score, default=None
        )
        raise GenerationExhausted(
            f"no line satisfied pattern {pattern.template!r} within "
            f"{spec.max_expansions} expansions",
            diagnostics={
                "prune_counts": prunes,
                "expansions": expansions,
                "pattern": pattern.template,
                "constraint": sorted(map(list, constraint.keys)) if constraint else None,
                "best_partial": best_partial.chars if best_partial else "",
            },
        )
    ranked = sorted(completed.values(), key=lambda c: (-c.score, c.text))
    return LineResult(
        candidates=ranked[: spec.samples_per_line],
        prune_counts=prunes,
        expansions=expansions,
    )


@dataclass
class PoemletLine:
    text: str
    rendering: str
    logprob: float
    boost: float
    score: float
    hits: list
    words: list[str]
    prune_counts: dict = field(default_factory=dict)
    expansions: int = 0


@dataclass
class Poemlet:
    lines: list[PoemletLine]
    spec_snapshot: dict
    seed: int

    @property
    def text(self) -> str:
        return "\n".join(line.text for line in self.lines)

    def boost_word_fraction(self) -> float:
        total = sum(len(line.words) for line in self.lines)
        if total == 0:
            return 0.0
        hit_words = sum(len({h[0] for h in line.hits}) for line in self.lines)
        return hit_words / total

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "spec": self.spec_snapshot,
            "lines": [
                {
                    "text": l.text,
                    "rendering": l.rendering,
                    "logprob": l.logprob,
                    "boost": l.boost,
                    "score": l.score,
                    "boost_hits": [list(h) for h in l.hits],
                }
                for l in self.lines
            ],
        }


def _choose_candidate(spec: GenerationSpec, candidates: list[LineCandidate], seed):
    """Pick the accepted line: the argmax, or a draw weighted by each
    candidate's probability mass exp(score)."""
    if spec.line_choice == "best" or len(candidates) == 1:
        return candidates[0]
    scores = np.array([c.score for c in candidates])
    weights = np.exp(scores - scores.max())
    cdf = np.cumsum(weights / weights.sum())
    rng = np.random.default_rng(seed)
    idx = int(np.searchsorted(cdf, rng.random(), side="right"))
    return candidates[min(idx, len(candidates) - 1)]


def generate_poemlet(spec: GenerationSpec, poem_index: int = 0) -> Poemlet:
    """Generate one poemlet line by line.

    The first line carrying each rhyme letter binds that letter to its end
    word's rhyme keys; later lines with the same letter must match one of
    those keys with a fresh word. Line seeds derive from (spec seed, poem
    index, line index), so poemlets in a batch are independent streams.
    """
    bound_keys: dict[str, frozenset] = {}
    used_words: dict[str, set] = {}
    lines: list[PoemletLine] = []
    accepted: list[str] = []
    recurring = {
        letter for letter in set(spec.rhyme_scheme) if spec.rhyme_scheme.count(letter) > 1
    }
    whitelist = (
        rhymable_words(spec.lexicon, usable_lexicon_words(spec.lm, spec.lexicon))
        if recurring
        else None
    )
    for i in range(spec.line_count):
        pattern = spec.pattern_for_line(i)
        letter = spec.rhyme_scheme[i] if spec.rhyme_scheme else None
        constraint = None
        ending_whitelist = None
        if letter is not None and letter in bound_keys:
            constraint = RhymeConstraint(
                keys=bound_keys[letter], forbidden=frozenset(used_words[letter])
            )
        elif letter in recurring:
            # first line of a letter that must be rhymed with later: end it
            # on a word that has at least one partner
            ending_whitelist = whitelist
        try:
            result = generate_line(
                spec, pattern, accepted, constraint,
                seed=(spec.seed, poem_index, i), ending_whitelist=ending_whitelist,
            )
        except GenerationExhausted as exc:
            raise GenerationExhausted(
                f"line {i + 1} ({letter or 'unconstrained'}): {exc}", exc.diagnostics
            ) from exc
        best = _choose_candidate(spec, result.candidates, (spec.seed, poem_index, i, 7))
        lines.append(
            PoemletLine(
                text=best.text,
                rendering=best.rendering,
                logprob=best.logprob,
                boost=best.boost,
                score=best.score,
                hits=best.hits,
                words=best.words,
                prune_counts=result.prune_counts,
                expansions=result.expansions,
            )
        )
        accepted.append(best.text)
        if letter is not None:
            end_word = best.words[-1]
            if letter not in bound_keys:
                bound_keys[letter] = frozenset(rhyme_keys(end_word, spec.lexicon))
                used_words[letter] = {end_word}
            else:
                used_words[letter].add(end_word)
    return Poemlet(lines=lines, spec_snapshot=spec.snapshot(), seed=poem_index)


@dataclass
class BatchReport:
    requested: int
    succeeded: int
    errors: list[tuple[int, str]]
    prune_counts: dict[str, int]
    boost_word_fractions: list[float]

    @property
    def mean_boost_word_fraction(self) -> float:
        if not self.boost_word_fractions:
            return 0.0
        return sum(self.boost_word_fractions) / len(self.boost_word_fractions)

    def to_dict(self) -> dict:
        return {
            "requested": self.requested,
            "succeeded": self.succeeded,
            "errors": [{"index": i, "message": m} for i, m in self.errors],
            "prune_counts": self.prune_counts,
            "mean_boost_word_fraction": self.mean_boost_word_fraction,
        }


def batch_generate(spec: GenerationSpec, count: int) -> tuple[list[Poemlet], BatchReport]:
    """Generate `count` poemlets on independent derived seeds; per-poemlet
    failures are collected in the report rather than raised."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    poemlets = []
    errors = []
    prunes: dict[str, int] = {}
    fractions = []

    def tally(counts: dict):
        for k, v in counts.items():
            prunes[k] = prunes.get(k, 0) + v

    for index in range(count):
        try:
            poemlet = generate_poemlet(spec, poem_index=index)
        except GenerationError as exc:
            errors.append((index, str(exc)))
            if isinstance(exc, GenerationExhausted):
                tally(exc.diagnostics.get("prune_counts", {}))
            continue
        poemlets.append(poemlet)
        for line in poemlet.lines:
            tally(line.prune_counts)
        fractions.append(poemlet.boost_word_fraction())
    report = BatchReport(
        requested=count,
        succeeded=len(poemlets),
        errors=errors,
        prune_counts=prunes,
        boost_word_fractions=fractions,
    )
    return poemlets, report
