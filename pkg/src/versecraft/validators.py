"""Independent validation of generated verse.

Everything here re-derives its answer from first principles rather than
reusing the generator's incremental bookkeeping: meter is checked by brute
force over the full cross-product of word renderings, rhyme by recomputing
keys from the lexicon, and scores by re-driving the language model over the
emitted characters. Tests hold the generator to these answers.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .charlm import DecoderState, LstmParams, forward_step
from .formshaper import MeterPattern, PronLexicon, rhyme_keys, stress_renderings
from .generator import GenerationSpec, Poemlet
from .stylemodel import StyleModel


def validate_meter(line_text: str, pattern: MeterPattern, lexicon: PronLexicon) -> bool:
    """Brute force: does any full combination of word renderings equal the
    pattern (wildcards matching either stress)?"""
    words = line_text.split()
    if not words:
        return False
    try:
        options = [sorted(stress_renderings(w, lexicon)) for w in words]
    except Exception:
        return False
    for combo in itertools.product(*options):
        rendered = "".join(combo)
        if len(rendered) == len(pattern) and all(
            t == "*" or t == c for c, t in zip(rendered, pattern.template)
        ):
            return True
    return False


def validate_rhyme_scheme(lines: list[str], scheme: str, lexicon: PronLexicon) -> bool:
    """Each rhyme letter's lines must end in distinct words sharing a rhyme
    key with the letter's first line."""
    if len(lines) != len(scheme):
        return False
    groups: dict[str, list[str]] = {}
    for line, letter in zip(lines, scheme):
        words = line.split()
        if not words:
            return False
        groups.setdefault(letter, []).append(words[-1])
    for enders in groups.values():
        bound = rhyme_keys(enders[0], lexicon)
        seen = {enders[0]}
        for word in enders[1:]:
            if word in seen:
                return False
            if not (rhyme_keys(word, lexicon) & bound):
                return False
            seen.add(word)
    return True


def validate_poemlet(poemlet: Poemlet, spec: GenerationSpec) -> list[str]:
    """All structural complaints about a poemlet; empty means clean."""
    problems = []
    if len(poemlet.lines) != spec.line_count:
        problems.append(f"expected {spec.line_count} lines, got {len(poemlet.lines)}")
    for i, line in enumerate(poemlet.lines):
        pattern = spec.pattern_for_line(i)
        if not validate_meter(line.text, pattern, spec.lexicon):
            problems.append(f"line {i + 1} breaks meter {pattern.template}: {line.text!r}")
    if spec.rhyme_scheme:
        texts = [line.text for line in poemlet.lines]
        if not validate_rhyme_scheme(texts, spec.rhyme_scheme, spec.lexicon):
            problems.append(f"rhyme scheme {spec.rhyme_scheme} violated")
    return problems


def temperature_log_prob(probs: np.ndarray, char_id: int, temperature: float) -> float:
    """log softmax(logits / tau) recovered from the unshaped distribution:
    shaping in log space then renormalizing is the same transform."""
    logs = np.log(probs) / temperature
    logs -= logs.max()
    return float(logs[char_id] - math.log(np.exp(logs).sum()))


def recompute_line_score(
    lm: LstmParams,
    style: StyleModel | None,
    line_text: str,
    left_context: list[str],
    temperature: float,
    boost_terms: float,
    boost_topics: float,
) -> tuple[float, float]:
    """Independent scorer: (character log-probability, boost bonus) of a
    line, driving the model through its public single-step interface."""
    from .generator import boost_delta

    vocab = lm.vocab
    state = DecoderState.initial(lm, 1)
    context = [vocab.end_id]
    for line in left_context:
        context.extend(int(i) for i in vocab.encode(line + "\n"))
    prev = context[0]
    for cid in context[1:]:
        _, state = forward_step(lm, state, prev)
        prev = cid
    logprob = 0.0
    for ch in line_text + "\n":
        probs, state = forward_step(lm, state, prev)
        cid = int(vocab.encode(ch)[0])
        logprob += temperature_log_prob(probs, cid, temperature)
        prev = cid

    boost = 0.0
    words = line_text.split()
    for i, word in enumerate(words):
        prev_word = words[i - 1] if i > 0 else None
        delta, _ = boost_delta(style, prev_word, word, boost_terms, boost_topics)
        boost += delta
    return logprob, boost
