import re
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from versecraft.corpus import (
    Corpus,
    CorpusError,
    Document,
    detokenize,
    ingest_directory,
    merge_corpora,
    tokenize,
    tokenize_line,
)

TINY = Path(__file__).parent / "data" / "tiny"


def independent_word_count(path: Path) -> int:
    """Oracle: count words with a regex, skipping the title line."""
    body = path.read_text("utf-8").split("\n", 1)[1].lower()
    return len(re.findall(r"[a-z][a-z']*|'[a-z]+", body))


def test_tokenize_empty():
    assert tokenize("") == ([], [])
    assert tokenize_line("") == []


def test_tokenize_sample_line():
    assert tokenize_line("Praise life, it deserves praise,") == [
        "praise",
        "life",
        "it",
        "deserves",
        "praise",
    ]


def test_tokenize_structure():
    lines, breaks = tokenize("don't Stop\n\nGo")
    assert lines == [["don't", "stop"], ["go"]]
    assert breaks == [1]


def test_tokenize_edge_punctuation_and_dashes():
    assert tokenize_line("'tis the wind--nothing more!") == [
        "tis",
        "the",
        "wind",
        "nothing",
        "more",
    ]
    assert tokenize_line("sun-flower! weary of time;") == ["sun-flower", "weary", "of", "time"]


def test_tokenize_leading_blank_lines_not_breaks():
    lines, breaks = tokenize("\n\nfirst line\nsecond line")
    assert len(lines) == 2
    assert breaks == []


@given(st.lists(st.lists(st.sampled_from(["sea", "don't", "o'er", "sky-lark", "a"]), min_size=1), min_size=1))
def test_tokenize_idempotent_on_detokenized(lines):
    text = detokenize(lines, [])
    retok, _ = tokenize(text)
    assert retok == lines


def test_ingest_fixture_counts():
    corpus = ingest_directory(TINY)
    assert len(corpus.documents) == 3
    # hand count: 34 (sick_rose) + 39 (the_eagle) + 19 (a_word)
    assert corpus.total_tokens == 92
    oracle = sum(independent_word_count(p) for p in TINY.glob("*.txt"))
    assert corpus.total_tokens == oracle


def test_ingest_titles_excluded():
    corpus = ingest_directory(TINY)
    by_id = {d.id: d for d in corpus.documents}
    assert by_id["sick_rose"].title == "The Sick Rose"
    assert "rose" in corpus.vocabulary
    # "Sick Rose" appears only in the title of its own poem and the first line
    assert by_id["sick_rose"].lines[0][0] == "o"


def test_ingest_stanza_structure():
    corpus = ingest_directory(TINY)
    by_id = {d.id: d for d in corpus.documents}
    assert by_id["sick_rose"].stanza_breaks == [4]
    assert by_id["the_eagle"].stanza_breaks == [3]
    assert len(by_id["the_eagle"].lines) == 6


def test_ingest_missing_directory():
    with pytest.raises(CorpusError, match="missing directory"):
        ingest_directory(TINY / "nope")


def test_ingest_empty_directory(tmp_path):
    with pytest.raises(CorpusError, match="no documents"):
        ingest_directory(tmp_path)


def test_ingest_undecodable_file(tmp_path):
    (tmp_path / "bad.txt").write_bytes(b"\xff\xfe\x00bad")
    with pytest.raises(CorpusError, match="bad.txt"):
        ingest_directory(tmp_path)


def test_single_word_corpus(tmp_path):
    (tmp_path / "one.txt").write_text("Title\nsea\n", "utf-8")
    corpus = ingest_directory(tmp_path)
    assert corpus.total_tokens == 1
    assert corpus.vocabulary == {"sea": 0}
    assert corpus.doc_freq == {"sea": 1}
    assert corpus.stats()["words"] == 1


def test_invariants_hold_on_fixture():
    corpus = ingest_directory(TINY)
    corpus.check_invariants()
    assert sum(corpus.doc_freq.values()) <= len(corpus.documents) * len(corpus.vocabulary)
    assert sum(corpus.term_counts.values()) == corpus.total_tokens


def test_ingest_deterministic():
    a = ingest_directory(TINY)
    b = ingest_directory(TINY)
    assert a.to_dict() == b.to_dict()


def test_stats_match_counts():
    corpus = ingest_directory(TINY)
    stats = corpus.stats()
    assert stats["documents"] == 3
    assert stats["words"] == corpus.total_tokens
    assert stats["characters"] == corpus.total_chars
    assert stats["vocabulary"] == len(corpus.vocabulary)


def test_roundtrip_json(tmp_path):
    corpus = ingest_directory(TINY)
    corpus.save(tmp_path / "c.json")
    again = Corpus.load(tmp_path / "c.json")
    assert again.to_dict() == corpus.to_dict()


def _corpus_from_texts(corpus_id, texts):
    docs = [Document.from_text(f"d{i}", f"t\n{t}") for i, t in enumerate(texts)]
    return Corpus.from_documents(corpus_id, docs)


def test_merge_boundaries():
    a = _corpus_from_texts("a", ["sea sky", "road home", "dark night"])
    b = _corpus_from_texts("b", ["one two", "three four", "five six", "seven eight"])
    only_a = merge_corpora(a, b, 1.0, seed=7)
    assert len(only_a.documents) == 3
    assert all(d.id.startswith("a/") for d in only_a.documents)
    only_b = merge_corpora(a, b, 0.0, seed=7)
    assert len(only_b.documents) == 4
    assert all(d.id.startswith("b/") for d in only_b.documents)


def test_merge_half_and_recount():
    a = _corpus_from_texts("a", ["sea sky", "road home", "dark night"])
    b = _corpus_from_texts("b", ["one two", "three four", "five six", "seven eight"])
    merged = merge_corpora(a, b, 0.5, seed=7)
    # ceil(0.5*3)=2 from a, ceil(0.5*4)=2 from b
    assert len(merged.documents) == 4
    assert sum(d.id.startswith("a/") for d in merged.documents) == 2
    # brute-force recount of doc_freq from the merged documents
    recount = {}
    for doc in merged.documents:
        for t in set(doc.tokens()):
            recount[t] = recount.get(t, 0) + 1
    assert recount == merged.doc_freq


def test_merge_deterministic():
    a = _corpus_from_texts("a", ["sea sky", "road home", "dark night"])
    b = _corpus_from_texts("b", ["one two", "three four", "five six", "seven eight"])
    m1 = merge_corpora(a, b, 0.5, seed=7)
    m2 = merge_corpora(a, b, 0.5, seed=7)
    assert m1.to_dict() == m2.to_dict()


def test_merge_bad_ratio():
    a = _corpus_from_texts("a", ["sea"])
    b = _corpus_from_texts("b", ["sky"])
    with pytest.raises(ValueError):
        merge_corpora(a, b, 1.5)


def test_merged_stats_additive():
    a = _corpus_from_texts("a", ["sea sky", "road home"])
    b = _corpus_from_texts("b", ["one two three"])
    merged = merge_corpora(a, b, 1.0, seed=1)
    assert merged.total_tokens == a.total_tokens
    both = merge_corpora(a, b, 1.0, seed=1).total_tokens + merge_corpora(a, b, 0.0, seed=1).total_tokens
    assert both == a.total_tokens + b.total_tokens
