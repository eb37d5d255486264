"""Finite-state form machinery over the tropical (min, +) semiring.

Transducers here are deliberately plain: dense integer states, arcs held
per state, symbol id 0 reserved for epsilon. Lexicon transducers are built
epsilon-free (the word symbol rides the first arc, later arcs consume a
padding symbol), so composition never needs an epsilon filter; composing
two machines that both carry epsilons on the matched tapes is rejected.

Also here: pronunciation lexicon parsing (CMU-style), stress scansion,
meter templates over {U, S, *}, and end-rhyme keys.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path

EPSILON = "<eps>"
PAD = "<pad>"

VOWELS = {
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY",
    "IH", "IY", "OW", "OY", "UH", "UW",
}


class FstError(Exception):
    pass


class LexiconError(Exception):
    pass


class SymbolTable:
    def __init__(self):
        self.symbols = [EPSILON]
        self.ids = {EPSILON: 0}

    def add(self, sym: str) -> int:
        if sym not in self.ids:
            self.ids[sym] = len(self.symbols)
            self.symbols.append(sym)
        return self.ids[sym]

    def name(self, sym_id: int) -> str:
        return self.symbols[sym_id]

    def alphabet(self) -> set[str]:
        return set(self.symbols[1:])


@dataclass
class Arc:
    ilabel: int
    olabel: int
    weight: float
    dst: int


class Wfst:
    """Weighted transducer; weights are finite non-negative tropical costs."""

    def __init__(self):
        self.isyms = SymbolTable()
        self.osyms = SymbolTable()
        self.start = 0
        self.finals: dict[int, float] = {}
        self.arcs: list[list[Arc]] = []

    def add_state(self) -> int:
        self.arcs.append([])
        return len(self.arcs) - 1

    @property
    def num_states(self) -> int:
        return len(self.arcs)

    def add_arc(self, src: int, in_sym: str, out_sym: str, weight: float, dst: int) -> None:
        if not (0 <= src < self.num_states and 0 <= dst < self.num_states):
            raise FstError(f"arc references unknown state: {src} -> {dst}")
        if weight < 0 or weight != weight:
            raise FstError(f"weights must be finite and non-negative, got {weight}")
        self.arcs[src].append(Arc(self.isyms.add(in_sym), self.osyms.add(out_sym), weight, dst))

    def set_final(self, state: int, weight: float = 0.0) -> None:
        if not 0 <= state < self.num_states:
            raise FstError(f"unknown state: {state}")
        self.finals[state] = weight

    def declare_input_symbol(self, sym: str) -> None:
        """Extend the input alphabet without adding an arc (alphabets must
        match exactly for composition)."""
        self.isyms.add(sym)

    def declare_output_symbol(self, sym: str) -> None:
        self.osyms.add(sym)

    def has_output_epsilons(self) -> bool:
        return any(arc.olabel == 0 for row in self.arcs for arc in row)

    def has_input_epsilons(self) -> bool:
        return any(arc.ilabel == 0 for row in self.arcs for arc in row)

    def dump_text(self) -> str:
        """Debug/oracle format: `src dst in out weight` per arc, then one
        `state weight` line per final state."""
        lines = [f"start {self.start}"]
        for src, row in enumerate(self.arcs):
            for arc in row:
                lines.append(
                    f"{src} {arc.dst} {self.isyms.name(arc.ilabel)} "
                    f"{self.osyms.name(arc.olabel)} {arc.weight:g}"
                )
        for state in sorted(self.finals):
            lines.append(f"final {state} {self.finals[state]:g}")
        return "\n".join(lines) + "\n"


def linear_acceptor(symbols: list[str], weight: float = 0.0) -> Wfst:
    """A chain accepting exactly one string, total cost `weight` up front."""
    fst = Wfst()
    prev = fst.add_state()
    fst.start = prev
    for i, sym in enumerate(symbols):
        nxt = fst.add_state()
        fst.add_arc(prev, sym, sym, weight if i == 0 else 0.0, nxt)
        prev = nxt
    if not symbols:
        fst.set_final(prev, weight)
    else:
        fst.set_final(prev, 0.0)
    return fst


def identity_acceptor(alphabet: set[str]) -> Wfst:
    """Single-state acceptor of every string over the alphabet, cost 0."""
    fst = Wfst()
    s = fst.add_state()
    fst.start = s
    fst.set_final(s, 0.0)
    for sym in sorted(alphabet):
        fst.add_arc(s, sym, sym, 0.0, s)
    return fst


def _reachable(fst: Wfst) -> set[int]:
    seen = {fst.start}
    stack = [fst.start]
    while stack:
        s = stack.pop()
        for arc in fst.arcs[s]:
            if arc.dst not in seen:
                seen.add(arc.dst)
                stack.append(arc.dst)
    return seen


def _coreachable(fst: Wfst) -> set[int]:
    back: list[list[int]] = [[] for _ in range(fst.num_states)]
    for src, row in enumerate(fst.arcs):
        for arc in row:
            back[arc.dst].append(src)
    seen = set(fst.finals)
    stack = list(fst.finals)
    while stack:
        s = stack.pop()
        for prev in back[s]:
            if prev not in seen:
                seen.add(prev)
                stack.append(prev)
    return seen


def trim(fst: Wfst) -> Wfst:
    """Keep only states on some start-to-final path."""
    alive = _reachable(fst) & _coreachable(fst)
    out = Wfst()
    if fst.start not in alive:
        out.start = out.add_state()
        # preserve alphabets even when the language is empty
        for sym in fst.isyms.symbols[1:]:
            out.isyms.add(sym)
        for sym in fst.osyms.symbols[1:]:
            out.osyms.add(sym)
        return out
    remap = {}
    for state in sorted(alive):
        remap[state] = out.add_state()
    out.start = remap[fst.start]
    for src in sorted(alive):
        for arc in fst.arcs[src]:
            if arc.dst in alive:
                out.add_arc(
                    remap[src],
                    fst.isyms.name(arc.ilabel),
                    fst.osyms.name(arc.olabel),
                    arc.weight,
                    remap[arc.dst],
                )
    for state, w in fst.finals.items():
        if state in alive:
            out.set_final(remap[state], w)
    for sym in fst.isyms.symbols[1:]:
        out.isyms.add(sym)
    for sym in fst.osyms.symbols[1:]:
        out.osyms.add(sym)
    return out


def compose(a: Wfst, b: Wfst) -> Wfst:
    """Product construction; tropical weights add along matched arcs.

    Requires a's output alphabet to equal b's input alphabet, and at most
    one of those tapes to carry epsilons (the one-sided case needs no
    epsilon filter; the two-sided case is rejected by design).
    """
    if a.osyms.alphabet() != b.isyms.alphabet():
        raise FstError(
            f"alphabet mismatch: {sorted(a.osyms.alphabet())} vs {sorted(b.isyms.alphabet())}"
        )
    if a.has_output_epsilons() and b.has_input_epsilons():
        raise FstError("both matched tapes carry epsilons; unsupported by design")

    b_by_in: list[dict[str, list[Arc]]] = []
    for row in b.arcs:
        index: dict[str, list[Arc]] = {}
        for arc in row:
            index.setdefault(b.isyms.name(arc.ilabel), []).append(arc)
        b_by_in.append(index)

    out = Wfst()
    state_map: dict[tuple[int, int], int] = {}

    def get_state(pair):
        if pair not in state_map:
            state_map[pair] = out.add_state()
            wa = a.finals.get(pair[0])
            wb = b.finals.get(pair[1])
            if wa is not None and wb is not None:
                out.set_final(state_map[pair], wa + wb)
        return state_map[pair]

    start_pair = (a.start, b.start)
    out.start = get_state(start_pair)
    queue = [start_pair]
    seen = {start_pair}
    while queue:
        sa, sb = queue.pop()
        src = get_state((sa, sb))
        for arc_a in a.arcs[sa]:
            in_name = a.isyms.name(arc_a.ilabel)
            out_name = a.osyms.name(arc_a.olabel)
            if arc_a.olabel == 0:
                pair = (arc_a.dst, sb)
                out.add_arc(src, in_name, EPSILON, arc_a.weight, get_state(pair))
                if pair not in seen:
                    seen.add(pair)
                    queue.append(pair)
            else:
                for arc_b in b_by_in[sb].get(out_name, []):
                    pair = (arc_a.dst, arc_b.dst)
                    out.add_arc(
                        src,
                        in_name,
                        b.osyms.name(arc_b.olabel),
                        arc_a.weight + arc_b.weight,
                        get_state(pair),
                    )
                    if pair not in seen:
                        seen.add(pair)
                        queue.append(pair)
        for arc_b in b_by_in[sb].get(EPSILON, []):
            pair = (sa, arc_b.dst)
            out.add_arc(src, EPSILON, b.osyms.name(arc_b.olabel), arc_b.weight, get_state(pair))
            if pair not in seen:
                seen.add(pair)
                queue.append(pair)
    for sym in a.isyms.symbols[1:]:
        out.isyms.add(sym)
    for sym in b.osyms.symbols[1:]:
        out.osyms.add(sym)
    return trim(out)


def shortest_path(fst: Wfst) -> tuple[float, list[str], list[str]] | None:
    """Cheapest accepting path by Dijkstra, final weights included.

    Returns (weight, input labels, output labels) with epsilons dropped, or
    None when the machine accepts nothing. Ties break toward the earlier
    (state id, arc index) discovery.
    """
    if fst.num_states == 0:
        return None
    dist = {fst.start: 0.0}
    parent: dict[int, tuple[int, Arc]] = {}
    heap = [(0.0, fst.start)]
    done = set()
    while heap:
        d, state = heapq.heappop(heap)
        if state in done:
            continue
        done.add(state)
        for arc in fst.arcs[state]:
            nd = d + arc.weight
            if arc.dst not in dist or nd < dist[arc.dst]:
                dist[arc.dst] = nd
                parent[arc.dst] = (state, arc)
                heapq.heappush(heap, (nd, arc.dst))
    best = None
    for state in sorted(fst.finals):
        if state in dist:
            total = dist[state] + fst.finals[state]
            if best is None or total < best[0]:
                best = (total, state)
    if best is None:
        return None
    total, state = best
    ins: list[str] = []
    outs: list[str] = []
    # only the start state lacks a parent: non-negative weights keep it
    # from ever being relaxed into
    while state in parent:
        prev, arc = parent[state]
        if arc.ilabel != 0:
            ins.append(fst.isyms.name(arc.ilabel))
        if arc.olabel != 0:
            outs.append(fst.osyms.name(arc.olabel))
        state = prev
    ins.reverse()
    outs.reverse()
    return total, ins, outs


# ---------------------------------------------------------------------------
# Pronunciation lexicon


class PronLexicon:
    """word -> pronunciations, each a phoneme list with stress digits on
    vowels. Accepts CMU-dictionary formatting: `;;;` comments and `WORD(2)`
    variant entries."""

    def __init__(self, entries: dict[str, list[list[str]]]):
        self.entries = entries
        for word, prons in entries.items():
            for pron in prons:
                if not pron:
                    raise LexiconError(f"empty pronunciation for {word!r}")
                for phone in pron:
                    base = phone.rstrip("012")
                    if phone != base and base not in VOWELS:
                        raise LexiconError(f"stress digit on non-vowel {phone!r} in {word!r}")

    @classmethod
    def parse(cls, text: str) -> "PronLexicon":
        entries: dict[str, list[list[str]]] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith(";;;"):
                continue
            fields = line.split()
            word = fields[0].lower()
            if "(" in word:
                word = word[: word.index("(")]
            entries.setdefault(word, []).append(fields[1:])
        return cls(entries)

    @classmethod
    def load(cls, path: str | Path) -> "PronLexicon":
        return cls.parse(Path(path).read_text("utf-8"))

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def pronunciations(self, word: str) -> list[list[str]]:
        try:
            return self.entries[word.lower()]
        except KeyError:
            raise LexiconError(f"word not in lexicon: {word!r}") from None

    def words(self) -> list[str]:
        return sorted(self.entries)


def stress_of(pron: list[str]) -> str:
    """Stress string of one pronunciation: digits 1/2 -> S, 0 -> U."""
    out = []
    for phone in pron:
        if phone[-1] in "012":
            out.append("U" if phone[-1] == "0" else "S")
    return "".join(out)


def stress_renderings(word: str, lexicon: PronLexicon) -> set[str]:
    """All stress strings a word can scan as. Monosyllables are metrically
    flexible and render as both U and S."""
    renderings = set()
    for pron in lexicon.pronunciations(word):
        s = stress_of(pron)
        if len(s) == 1:
            renderings.update({"U", "S"})
        elif s:
            renderings.add(s)
    return renderings


def scansion(tokens: list[str], lexicon: PronLexicon) -> set[str]:
    """Every stress string a line can scan as: the cross-product of the
    per-word renderings."""
    results = {""}
    for token in tokens:
        if token not in lexicon:
            raise LexiconError(f"word not in lexicon: {token!r}")
        renderings = stress_renderings(token, lexicon)
        results = {prefix + r for prefix in results for r in renderings}
    return results


# ---------------------------------------------------------------------------
# Meter patterns


NAMED_METERS = {
    "iambic-pentameter": ["USUSUSUSUS"],
    "iambic-tetrameter": ["USUSUSUS"],
    "iambic-trimeter": ["USUSUS"],
    "iambic-dimeter": ["USUS"],
    "common-meter": ["USUSUSUS", "USUSUS"],
}


@dataclass(frozen=True)
class MeterPattern:
    template: str
    name: str = ""

    def __post_init__(self):
        if not self.template or any(c not in "US*" for c in self.template):
            raise ValueError(f"meter template must be non-empty over U/S/*: {self.template!r}")

    def __len__(self):
        return len(self.template)


def meter_cycle(spec: str) -> list[MeterPattern]:
    """Resolve a meter name or a literal {U,S,*} template (use `/` to give a
    repeating multi-line cycle, e.g. 'USUS/US')."""
    if spec in NAMED_METERS:
        return [MeterPattern(t, spec) for t in NAMED_METERS[spec]]
    return [MeterPattern(part) for part in spec.split("/")]


def _matches(rendering: str, template: str) -> bool:
    return len(rendering) == len(template) and all(
        t == "*" or t == r for r, t in zip(rendering, template)
    )


def meter_conformance(stress_set: set[str], pattern: MeterPattern) -> bool:
    return any(_matches(s, pattern.template) for s in stress_set)


def advance_positions(
    positions: set[int], renderings: set[str], pattern: MeterPattern
) -> set[int]:
    """Incremental conformance: pattern positions reachable after one more
    word. Empty means no rendering can still fit and the caller should
    prune."""
    template = pattern.template
    out = set()
    for pos in positions:
        for r in renderings:
            end = pos + len(r)
            if end <= len(template) and _matches(r, template[pos:end]):
                out.add(end)
    return out


def line_conforms(tokens: list[str], lexicon: PronLexicon, pattern: MeterPattern) -> bool:
    """Full-line check via the incremental machinery."""
    positions = {0}
    for token in tokens:
        positions = advance_positions(positions, stress_renderings(token, lexicon), pattern)
        if not positions:
            return False
    return len(pattern) in positions


# ---------------------------------------------------------------------------
# Rhyme


def rhyme_keys(word: str, lexicon: PronLexicon) -> set[tuple[str, ...]]:
    """End-rhyme keys: phoneme suffix from the last stressed vowel (fallback
    last vowel) to word end, stress digits stripped; one key per
    pronunciation."""
    keys = set()
    for pron in lexicon.pronunciations(word):
        stressed = None
        any_vowel = None
        for i, phone in enumerate(pron):
            if phone[-1] in "012":
                any_vowel = i
                if phone[-1] in "12":
                    stressed = i
        pivot = stressed if stressed is not None else any_vowel
        if pivot is None:
            continue
        keys.add(tuple(p.rstrip("012") for p in pron[pivot:]))
    return keys


def rhyme_check(a: str, b: str, lexicon: PronLexicon) -> bool:
    """End rhyme between two distinct words: identical words never rhyme."""
    if a.lower() == b.lower():
        return False
    return bool(rhyme_keys(a, lexicon) & rhyme_keys(b, lexicon))


# ---------------------------------------------------------------------------
# Line acceptor


def build_line_acceptor(pattern: MeterPattern, lexicon: PronLexicon,
                        vocabulary: list[str]) -> Wfst:
    """Transducer from word sequences to stress strings scanning as the
    pattern. Word inputs ride the first arc of each word; later syllables
    consume the padding symbol, keeping the machine epsilon-free.

    Accepted input strings therefore read `word <pad>*` per word, with the
    pad count one less than the word's syllable count.
    """
    usable = sorted({w.lower() for w in vocabulary} & set(lexicon.entries))
    if not usable:
        raise FstError("no vocabulary word is covered by the lexicon")

    words_to_stress = Wfst()
    hub = words_to_stress.add_state()
    words_to_stress.start = hub
    words_to_stress.set_final(hub, 0.0)
    for word in usable:
        for rendering in sorted(stress_renderings(word, lexicon)):
            prev = hub
            for i, stress in enumerate(rendering):
                dst = hub if i == len(rendering) - 1 else words_to_stress.add_state()
                words_to_stress.add_arc(prev, word if i == 0 else PAD, stress, 0.0, dst)
                prev = dst

    pattern_acceptor = Wfst()
    states = [pattern_acceptor.add_state() for _ in range(len(pattern) + 1)]
    pattern_acceptor.start = states[0]
    pattern_acceptor.set_final(states[-1], 0.0)
    for i, ch in enumerate(pattern.template):
        for stress in ("U", "S") if ch == "*" else (ch,):
            pattern_acceptor.add_arc(states[i], stress, stress, 0.0, states[i + 1])
    # the stress alphabets must line up even if one letter never occurs
    for stress in ("U", "S"):
        words_to_stress.osyms.add(stress)
        pattern_acceptor.isyms.add(stress)
        pattern_acceptor.osyms.add(stress)

    return compose(words_to_stress, pattern_acceptor)


def words_to_acceptor_input(tokens: list[str], lexicon: PronLexicon,
                            rendering_lengths: list[int]) -> list[str]:
    """Input tape encoding of a word sequence for a line acceptor: each word
    followed by (syllables - 1) pads for the given rendering lengths."""
    out = []
    for token, n in zip(tokens, rendering_lengths):
        out.append(token.lower())
        out.extend([PAD] * (n - 1))
    return out
