import itertools
from pathlib import Path

import pytest

from versecraft.formshaper import (
    EPSILON,
    PAD,
    FstError,
    LexiconError,
    MeterPattern,
    PronLexicon,
    Wfst,
    advance_positions,
    build_line_acceptor,
    compose,
    identity_acceptor,
    line_conforms,
    linear_acceptor,
    meter_conformance,
    meter_cycle,
    rhyme_check,
    rhyme_keys,
    scansion,
    shortest_path,
    stress_renderings,
    trim,
)

LEXICON = PronLexicon.load(Path(__file__).parent / "data" / "lexicon.txt")


# ---------------------------------------------------------------------------
# Path-enumeration oracle


def enumerate_paths(fst, max_arcs):
    """Oracle: every accepting path with at most max_arcs arcs."""
    results = []

    def dfs(state, weight, ins, outs, depth):
        if state in fst.finals:
            results.append((weight + fst.finals[state], tuple(ins), tuple(outs)))
        if depth == max_arcs:
            return
        for arc in fst.arcs[state]:
            dfs(
                arc.dst,
                weight + arc.weight,
                ins + ([fst.isyms.name(arc.ilabel)] if arc.ilabel else []),
                outs + ([fst.osyms.name(arc.olabel)] if arc.olabel else []),
                depth + 1,
            )

    dfs(fst.start, 0.0, [], [], 0)
    return results


def language(fst, max_arcs):
    """Oracle: best (tropical) weight per accepted (input, output) pair."""
    best = {}
    for w, ins, outs in enumerate_paths(fst, max_arcs):
        key = (ins, outs)
        if key not in best or w < best[key]:
            best[key] = w
    return {k: round(v, 9) for k, v in best.items()}


def brute_force_compose(a, b, max_arcs):
    """Oracle: join enumerated paths of a and b on the matched tape."""
    best = {}
    for wa, ins_a, outs_a in enumerate_paths(a, max_arcs):
        for wb, ins_b, outs_b in enumerate_paths(b, max_arcs):
            if outs_a != ins_b:
                continue
            key = (ins_a, outs_b)
            w = wa + wb
            if key not in best or w < best[key]:
                best[key] = w
    return {k: round(v, 9) for k, v in best.items()}


def machine_a():
    f = Wfst()
    s0, s1, s2 = f.add_state(), f.add_state(), f.add_state()
    f.start = s0
    f.add_arc(s0, "a", "x", 0.3, s1)
    f.add_arc(s1, "a", "x", 0.1, s1)
    f.add_arc(s1, "b", "y", 0.4, s2)
    f.set_final(s2, 0.2)
    return f


def machine_b():
    f = Wfst()
    s0, s1 = f.add_state(), f.add_state()
    f.start = s0
    f.add_arc(s0, "x", "p", 0.2, s1)
    f.add_arc(s1, "y", "q", 0.5, s0)
    f.add_arc(s1, "x", "p", 0.05, s1)
    f.set_final(s0, 0.0)
    return f


def test_compose_matches_enumeration():
    a, b = machine_a(), machine_b()
    composed = compose(a, b)
    assert language(composed, 6) == brute_force_compose(a, b, 6)


def test_compose_identity_preserves_language():
    a = machine_a()
    ident = identity_acceptor(a.osyms.alphabet())
    composed = compose(a, ident)
    assert language(composed, 6) == language(a, 6)


def test_compose_empty_annihilates():
    a = machine_a()
    empty = Wfst()
    s = empty.add_state()
    empty.start = s
    empty.add_arc(s, "x", "x", 0.0, s)
    empty.add_arc(s, "y", "y", 0.0, s)  # no finals: empty language
    composed = compose(a, empty)
    assert language(composed, 8) == {}


def test_compose_alphabet_mismatch():
    a = machine_a()
    other = Wfst()
    s = other.add_state()
    other.start = s
    other.add_arc(s, "z", "z", 0.0, s)
    other.set_final(s)
    with pytest.raises(FstError, match="alphabet"):
        compose(a, other)


def test_compose_double_epsilon_rejected():
    a = Wfst()
    s0, s1 = a.add_state(), a.add_state()
    a.start = s0
    a.add_arc(s0, "a", EPSILON, 0.1, s1)
    a.add_arc(s0, "a", "x", 0.1, s1)
    a.set_final(s1)
    b = Wfst()
    t0, t1 = b.add_state(), b.add_state()
    b.start = t0
    b.add_arc(t0, EPSILON, "p", 0.1, t1)
    b.add_arc(t0, "x", "p", 0.1, t1)
    b.set_final(t1)
    with pytest.raises(FstError, match="epsilon"):
        compose(a, b)


def test_compose_one_sided_epsilon_ok():
    a = Wfst()
    s0, s1, s2 = a.add_state(), a.add_state(), a.add_state()
    a.start = s0
    a.add_arc(s0, "a", "x", 0.25, s1)
    a.add_arc(s1, "b", EPSILON, 0.5, s2)
    a.set_final(s2)
    b = Wfst()
    t0, t1 = b.add_state(), b.add_state()
    b.start = t0
    b.add_arc(t0, "x", "p", 0.125, t1)
    b.set_final(t1)
    composed = compose(a, b)
    assert language(composed, 4) == {(("a", "b"), ("p",)): 0.875}


def test_compose_associative_on_suite():
    a, b = machine_a(), machine_b()
    c = Wfst()
    u0, u1 = c.add_state(), c.add_state()
    c.start = u0
    c.add_arc(u0, "p", "1", 0.05, u1)
    c.add_arc(u1, "q", "2", 0.15, u0)
    c.add_arc(u1, "p", "1", 0.25, u1)
    c.set_final(u0, 0.0)
    c.set_final(u1, 0.1)
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    assert language(left, 7) == language(right, 7)


def test_shortest_path_single_arc():
    f = Wfst()
    s0, s1 = f.add_state(), f.add_state()
    f.start = s0
    f.add_arc(s0, "in", "out", 0.5, s1)
    f.set_final(s1, 0.0)
    assert shortest_path(f) == (0.5, ["in"], ["out"])


def test_shortest_path_diamond():
    f = Wfst()
    s = [f.add_state() for _ in range(4)]
    f.start = s[0]
    f.add_arc(s[0], "a", "a", 0.3, s[1])
    f.add_arc(s[1], "b", "b", 0.4, s[3])
    f.add_arc(s[0], "c", "c", 0.2, s[2])
    f.add_arc(s[2], "d", "d", 0.6, s[3])
    f.set_final(s[3], 0.0)
    weight, ins, _ = shortest_path(f)
    assert weight == pytest.approx(0.7)
    assert ins == ["a", "b"]


def test_shortest_path_unreachable_final():
    f = Wfst()
    s0, s1 = f.add_state(), f.add_state()
    f.start = s0
    f.add_arc(s1, "a", "a", 0.1, s1)
    f.set_final(s1)
    assert shortest_path(trim(f)) is None


def test_shortest_path_not_above_any_enumerated(
):
    a, b = machine_a(), machine_b()
    for machine in (a, b, compose(a, b)):
        best = shortest_path(machine)
        paths = enumerate_paths(machine, 6)
        if paths:
            assert best is not None
            assert best[0] <= min(w for w, _, _ in paths) + 1e-12
        # enumeration is depth-limited so it can only confirm, not refute


def test_negative_weight_rejected():
    f = Wfst()
    s0, s1 = f.add_state(), f.add_state()
    f.start = s0
    with pytest.raises(FstError):
        f.add_arc(s0, "a", "a", -0.5, s1)


def test_dump_text_format():
    f = Wfst()
    s0, s1 = f.add_state(), f.add_state()
    f.start = s0
    f.add_arc(s0, "a", "x", 0.5, s1)
    f.set_final(s1, 0.25)
    dump = f.dump_text()
    assert "start 0" in dump
    assert "0 1 a x 0.5" in dump
    assert "final 1 0.25" in dump


# ---------------------------------------------------------------------------
# Lexicon and scansion


def test_lexicon_variants_and_comments():
    assert "the" in LEXICON
    assert len(LEXICON.pronunciations("the")) == 2
    assert LEXICON.pronunciations("stars") == [["S", "T", "AA1", "R", "Z"]]


def test_lexicon_rejects_bad_stress():
    with pytest.raises(LexiconError):
        PronLexicon({"x": [["K1"]]})


def test_scansion_remember():
    assert scansion(["remember"], LEXICON) == {"USU"}


def test_scansion_monosyllable_wildcard():
    assert stress_renderings("the", LEXICON) == {"U", "S"}
    assert scansion(["the"], LEXICON) == {"U", "S"}


def test_scansion_cross_product_cardinality():
    # both words have 2 renderings: monosyllable wildcards
    result = scansion(["the", "sun"], LEXICON)
    assert result == {"UU", "US", "SU", "SS"}
    assert len(result) == 4


def test_scansion_oov_names_token():
    with pytest.raises(LexiconError, match="xylophone"):
        scansion(["the", "xylophone"], LEXICON)


def test_scansion_cardinality_property():
    for tokens in (["silver", "the"], ["before", "remember"], ["sun", "sea", "gold"]):
        per_word = [len(stress_renderings(t, LEXICON)) for t in tokens]
        expected = 1
        for n in per_word:
            expected *= n
        # set collapses duplicates; equality holds when renderings differ
        assert len(scansion(tokens, LEXICON)) <= expected


# ---------------------------------------------------------------------------
# Meter


def test_meter_conformance_exact():
    assert meter_conformance({"USU"}, MeterPattern("USU"))
    assert not meter_conformance({"USU"}, MeterPattern("USUS"))


def test_meter_incremental_prefix():
    positions = advance_positions({0}, {"USU"}, MeterPattern("USUS"))
    assert positions == {3}
    assert advance_positions(positions, {"S"}, MeterPattern("USUS")) == {4}
    assert advance_positions({3}, {"U"}, MeterPattern("USUS")) == set()


def test_meter_wildcard():
    assert meter_conformance({"US"}, MeterPattern("*S"))
    assert meter_conformance({"SS"}, MeterPattern("*S"))
    assert not meter_conformance({"SU"}, MeterPattern("*S"))


def test_meter_four_word_line_vs_brute_force():
    tokens = ["the", "golden", "stars", "remember"]
    pattern = MeterPattern("USUSUSUS", "iambic-tetrameter")
    renderings = [sorted(stress_renderings(t, LEXICON)) for t in tokens]
    brute = any(
        "".join(combo) == pattern.template
        or ("*" not in pattern.template and "".join(combo) == pattern.template)
        for combo in itertools.product(*renderings)
    )
    assert line_conforms(tokens, LEXICON, pattern) == brute
    assert meter_conformance(scansion(tokens, LEXICON), pattern) == brute


def test_meter_cycle_named_and_literal():
    assert [p.template for p in meter_cycle("iambic-tetrameter")] == ["USUSUSUS"]
    assert [p.template for p in meter_cycle("common-meter")] == ["USUSUSUS", "USUSUS"]
    assert [p.template for p in meter_cycle("US/USU")] == ["US", "USU"]
    with pytest.raises(ValueError):
        meter_cycle("UX")


# ---------------------------------------------------------------------------
# Rhyme


def test_rhyme_key_stars():
    assert rhyme_keys("stars", LEXICON) == {("AA", "R", "Z")}
    assert rhyme_keys("bars", LEXICON) == {("AA", "R", "Z")}


def test_rhyme_check_pair():
    assert rhyme_check("stars", "bars", LEXICON)
    assert rhyme_check("bright", "night", LEXICON)
    assert not rhyme_check("stars", "moon", LEXICON)


def test_rhyme_irreflexive():
    assert not rhyme_check("stars", "stars", LEXICON)


def test_rhyme_symmetric():
    words = ["stars", "bars", "bright", "night", "sea", "free", "moon"]
    for a in words:
        for b in words:
            assert rhyme_check(a, b, LEXICON) == rhyme_check(b, a, LEXICON)


def test_rhyme_key_unstressed_fallback():
    # "a" AH0 has no stressed vowel: falls back to the last vowel
    assert rhyme_keys("a", LEXICON) == {("AH",)}


# ---------------------------------------------------------------------------
# Line acceptor


def accepted_word_sequences(acceptor, max_arcs):
    """Input strings of the acceptor with pads removed."""
    seqs = set()
    for _, ins, _ in enumerate_paths(acceptor, max_arcs):
        seqs.add(tuple(s for s in ins if s != PAD))
    return seqs


def test_line_acceptor_matches_brute_force():
    vocab = ["before", "the"]
    pattern = MeterPattern("US")
    acceptor = build_line_acceptor(pattern, LEXICON, vocab)
    accepted = accepted_word_sequences(acceptor, 6)
    brute = set()
    for n in (1, 2):
        for combo in itertools.product(vocab, repeat=n):
            if line_conforms(list(combo), LEXICON, pattern):
                brute.add(combo)
    assert accepted == brute
    assert ("before",) in accepted
    assert ("the", "the") in accepted


def test_line_acceptor_wildcard_accepts_all_monosyllables():
    vocab = ["sun", "moon", "sea"]
    acceptor = build_line_acceptor(MeterPattern("*"), LEXICON, vocab)
    assert accepted_word_sequences(acceptor, 2) == {("sun",), ("moon",), ("sea",)}


def test_line_acceptor_excludes_unusable_word():
    # remember (USU) cannot fit anywhere in "US"
    acceptor = build_line_acceptor(MeterPattern("US"), LEXICON, ["remember", "the"])
    for seq in accepted_word_sequences(acceptor, 8):
        assert "remember" not in seq


def test_line_acceptor_empty_vocab():
    with pytest.raises(FstError):
        build_line_acceptor(MeterPattern("US"), LEXICON, ["xylophone"])


def test_conformance_agrees_with_wfst_route():
    vocab = ["the", "golden", "stars", "remember", "sun", "silver"]
    pattern = MeterPattern("USUS")
    acceptor = build_line_acceptor(pattern, LEXICON, vocab)
    lines = [
        ["the", "golden"],
        ["remember", "the"],
        ["the", "sun", "the", "sun"],
        ["silver", "stars"],
        ["golden", "stars"],
    ]
    for tokens in lines:
        chain = Wfst()
        prev = chain.add_state()
        chain.start = prev
        chain.set_final(prev) if not tokens else None
        for token in tokens:
            nxt = chain.add_state()
            chain.add_arc(prev, token, token, 0.0, nxt)
            chain.add_arc(nxt, PAD, PAD, 0.0, nxt)
            prev = nxt
        chain.set_final(prev, 0.0)
        for sym in acceptor.isyms.alphabet():
            chain.declare_input_symbol(sym)
            chain.declare_output_symbol(sym)
        composed = compose(chain, acceptor)
        wfst_says = shortest_path(composed) is not None
        assert wfst_says == line_conforms(tokens, LEXICON, pattern)
