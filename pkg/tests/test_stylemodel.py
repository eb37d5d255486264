import itertools
import math
from math import lgamma
from pathlib import Path

import numpy as np
import pytest

from versecraft.corpus import Corpus, Document, ingest_directory
from versecraft.stylemodel import (
    EmbeddingSpace,
    GibbsLda,
    StyleConfig,
    StyleError,
    StyleModel,
    build_embeddings,
    build_style_model,
    build_tfidf,
    cooccurrence_counts,
    expand_semantic_network,
    ppmi_matrix,
    select_high_entropy,
    top_topics,
    train_lda,
)

TINY = Path(__file__).parent / "data" / "tiny"


def corpus_of(corpus_id, texts):
    docs = [Document.from_text(f"d{i}", f"t\n{t}") for i, t in enumerate(texts)]
    return Corpus.from_documents(corpus_id, docs)


# ---------------------------------------------------------------------------
# TF-IDF


def test_tfidf_hand_computation():
    author = corpus_of("a", ["sea sea hawk"])
    background = corpus_of("b", ["sea sky", "sky road"])
    model = build_tfidf(author, background)
    assert model.scores["sea"] == pytest.approx((1 + math.log(2)) * math.log(3 / 2), abs=1e-12)
    assert model.scores["hawk"] == pytest.approx(math.log(3), abs=1e-12)


def test_tfidf_saturation_zero():
    author = corpus_of("a", ["sea"])
    background = corpus_of("b", ["sea x", "sea y", "sea z", "sea w"])
    model = build_tfidf(author, background)
    # term in all 4 background docs: idf = ln(5/5) = 0
    assert model.scores["sea"] == 0.0


def test_tfidf_boundary_positive():
    author = corpus_of("a", ["sea"])
    background = corpus_of("b", ["sea x", "sea y", "sea z", "road w"])
    model = build_tfidf(author, background)
    assert model.scores["sea"] == pytest.approx(math.log(5 / 4), abs=1e-12)
    assert model.scores["sea"] > 0


def test_tfidf_monotonicity_grid():
    def score(tf, df, n_bg):
        return (1 + math.log(tf)) * math.log((n_bg + 1) / (df + 1))

    n_bg = 10
    for df in range(0, n_bg):
        col = [score(tf, df, n_bg) for tf in range(1, 8)]
        assert all(b >= a for a, b in zip(col, col[1:]))
    for tf in range(1, 8):
        row = [score(tf, df, n_bg) for df in range(0, n_bg + 1)]
        assert all(b < a for a, b in zip(row, row[1:]))


def test_tfidf_empty_author():
    author = Corpus(corpus_id="a", documents=[])
    background = corpus_of("b", ["sea"])
    with pytest.raises(StyleError):
        build_tfidf(author, background)


def test_select_full_percent():
    author = corpus_of("a", ["sea sky road"])
    background = corpus_of("b", ["dust"])
    model = build_tfidf(author, background)
    selected = select_high_entropy(model, 100.0)
    assert set(selected) == {"sea", "sky", "road"}
    assert max(selected.values()) == 1.0


def test_select_ceiling_cardinality():
    scores = {f"t{i:02d}": float(i) for i in range(10)}
    from versecraft.stylemodel import TfIdfModel

    model = TfIdfModel(scores, 1, {}, {})
    selected = select_high_entropy(model, 25.0)
    assert len(selected) == 3  # ceil(2.5)
    full = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    assert set(selected) == {t for t, _ in full[:3]}


def test_select_tie_breaks_lexicographic():
    from versecraft.stylemodel import TfIdfModel

    model = TfIdfModel({"zeta": 1.0, "alpha": 1.0, "mid": 1.0}, 1, {}, {})
    selected = select_high_entropy(model, 34.0)  # ceil(1.02) = 2
    assert set(selected) == {"alpha", "mid"}


def test_select_bad_percent():
    from versecraft.stylemodel import TfIdfModel

    model = TfIdfModel({"a": 1.0}, 1, {}, {})
    for bad in (0.0, -5.0, 101.0):
        with pytest.raises(ValueError):
            select_high_entropy(model, bad)


# ---------------------------------------------------------------------------
# LDA


def lda_log_joint(docs, z_flat, n_terms, n_topics, alpha, beta):
    """Oracle: collapsed joint of one assignment vector, token-major order."""
    n_dk = [[0] * n_topics for _ in docs]
    n_kw = [[0] * n_terms for _ in range(n_topics)]
    n_k = [0] * n_topics
    idx = 0
    for d, doc in enumerate(docs):
        for w in doc:
            k = z_flat[idx]
            idx += 1
            n_dk[d][k] += 1
            n_kw[k][w] += 1
            n_k[k] += 1
    lp = 0.0
    for d, doc in enumerate(docs):
        lp += lgamma(n_topics * alpha) - lgamma(len(doc) + n_topics * alpha)
        for k in range(n_topics):
            lp += lgamma(n_dk[d][k] + alpha) - lgamma(alpha)
    for k in range(n_topics):
        lp += lgamma(n_terms * beta) - lgamma(n_k[k] + n_terms * beta)
        for w in range(n_terms):
            lp += lgamma(n_kw[k][w] + beta) - lgamma(beta)
    return lp


def lda_enumerate_moment(docs, n_terms, n_topics, alpha, beta, event):
    """Oracle: exact posterior probability of `event` by full enumeration."""
    n_tokens = sum(len(d) for d in docs)
    num, den = [], []
    for z in itertools.product(range(n_topics), repeat=n_tokens):
        lp = lda_log_joint(docs, z, n_terms, n_topics, alpha, beta)
        den.append(lp)
        if event(z):
            num.append(lp)
    m = max(den)
    return sum(math.exp(v - m) for v in num) / sum(math.exp(v - m) for v in den)


def test_lda_single_topic_analytic():
    corpus = corpus_of("a", ["sea sea sky", "road sea"])
    beta = 0.01
    model = train_lda(corpus, 1, alpha=1.0, beta=beta, iterations=3, seed=0)
    n = corpus.total_tokens
    v = len(corpus.vocabulary)
    for term, idx in corpus.vocabulary.items():
        expected = (corpus.term_counts[term] + beta) / (n + v * beta)
        assert model.phi[0][idx] == pytest.approx(expected, abs=1e-12)
    assert np.allclose(model.theta, 1.0, atol=1e-12)


def test_lda_gibbs_matches_enumeration():
    # 2 docs x 3 tokens over 4 terms: exact posterior over all 64 assignments
    docs = [[0, 1, 0], [2, 3, 2]]
    alpha, beta = 0.5, 0.5
    exact = lda_enumerate_moment(docs, 4, 2, alpha, beta, lambda z: z[0] == z[1])
    estimates = []
    for seed in range(20):
        sampler = GibbsLda(docs, 4, 2, alpha, beta, seed)
        hits = total = 0
        for it in range(2000):
            sampler.sweep()
            if it >= 200:
                hits += int(sampler.z[0][0] == sampler.z[0][1])
                total += 1
        estimates.append(hits / total)
    assert abs(float(np.mean(estimates)) - exact) < 0.05


def test_lda_disjoint_vocabularies_separate():
    corpus = corpus_of("toy", ["a b a b a b", "c d c d c d"])
    # enumeration oracle: posterior concentrates on separating assignments
    docs = [[0, 1, 0, 1, 0, 1], [2, 3, 2, 3, 2, 3]]

    def separating(z):
        d0, d1 = z[:6], z[6:]
        return len(set(d0)) == 1 and len(set(d1)) == 1 and d0[0] != d1[0]

    assert lda_enumerate_moment(docs, 4, 2, 0.5, 0.1, separating) > 0.9

    model = train_lda(corpus, 2, alpha=0.5, beta=0.1, iterations=300, seed=1)
    id_to_term = {i: t for t, i in model.vocabulary.items()}
    vocab_groups = [{"a", "b"}, {"c", "d"}]
    for k in range(2):
        top2 = {id_to_term[w] for w in np.argsort(-model.phi[k])[:2]}
        assert top2 in vocab_groups


def test_lda_mass_conservation_and_row_sums():
    corpus = ingest_directory(TINY)
    model = train_lda(corpus, 3, alpha=0.5, beta=0.01, iterations=20, seed=5)
    assert int(model.topic_mass.sum()) == corpus.total_tokens
    assert np.allclose(model.phi.sum(axis=1), 1.0, atol=1e-9)
    assert np.allclose(model.theta.sum(axis=1), 1.0, atol=1e-9)
    assert len(model.assignments) == corpus.total_tokens


def test_lda_deterministic_given_seed():
    corpus = corpus_of("a", ["sea sky sea", "road dust road"])
    m1 = train_lda(corpus, 2, 0.5, 0.1, 50, seed=9)
    m2 = train_lda(corpus, 2, 0.5, 0.1, 50, seed=9)
    assert m1.assignments == m2.assignments
    assert np.array_equal(m1.phi, m2.phi)


def test_lda_errors():
    corpus = corpus_of("a", ["sea sky"])
    with pytest.raises(ValueError):
        train_lda(corpus, 0, 0.5, 0.1, 10)
    with pytest.raises(ValueError):
        train_lda(corpus, 2, 0.5, 0.1, 0)


def test_top_topics_full_selection():
    corpus = corpus_of("a", ["sea sky road", "dust sky sea"])
    model = train_lda(corpus, 2, 0.5, 0.1, 30, seed=2)
    words = top_topics(model, 2, len(model.vocabulary))
    assert set(words) == set(corpus.vocabulary)


def test_top_topics_mass_ranking():
    corpus = corpus_of("toy", ["a b a b a b", "c d c d c d"])
    model = train_lda(corpus, 2, alpha=0.5, beta=0.1, iterations=300, seed=1)
    heavier = int(np.argmax(model.topic_mass))
    id_to_term = {i: t for t, i in model.vocabulary.items()}
    expected = {id_to_term[w] for w in np.argsort(-model.phi[heavier])[:2]}
    assert set(top_topics(model, 1, 2)) == expected


def test_top_topics_subset_property():
    corpus = ingest_directory(TINY)
    model = train_lda(corpus, 3, 0.5, 0.01, 30, seed=4)

    def topic_set(m_sel):
        order = sorted(range(model.n_topics), key=lambda k: (-int(model.topic_mass[k]), k))
        return set(order[:m_sel])

    for m1 in range(1, 4):
        for m2 in range(m1, 4):
            assert topic_set(m1) <= topic_set(m2)


def test_top_topics_errors():
    corpus = corpus_of("a", ["sea sky"])
    model = train_lda(corpus, 2, 0.5, 0.1, 10, seed=0)
    with pytest.raises(ValueError):
        top_topics(model, 3, 2)


# ---------------------------------------------------------------------------
# Embeddings


def test_ppmi_hand_counts():
    corpus = corpus_of("a", ["a b a b a b"])
    counts, vocab = cooccurrence_counts(corpus, window=1)
    a, b = vocab["a"], vocab["b"]
    # adjacency pairs: 5 of (a,b), counted symmetrically
    assert counts[a][b] == 5 and counts[b][a] == 5
    assert counts[a][a] == 0 and counts[b][b] == 0
    ppmi = ppmi_matrix(counts)
    assert ppmi[a][b] == pytest.approx(math.log(2), abs=1e-12)
    assert ppmi[a][a] == 0.0


def test_embeddings_single_token_degenerate():
    corpus = corpus_of("a", ["sea"])
    space = build_embeddings(corpus, 4, window=2)
    assert np.linalg.norm(space.vectors["sea"]) == 0.0
    assert space.neighbors("sea", 3) == []


def test_embeddings_cosine_self():
    corpus = corpus_of("a", ["a b a b a b c a"])
    space = build_embeddings(corpus, 3, window=2)
    for term, vec in space.vectors.items():
        if np.linalg.norm(vec) > 0:
            assert space.cosine(term, term) == pytest.approx(1.0, abs=1e-9)


def test_embeddings_dim_capped_at_rank():
    corpus = corpus_of("a", ["a b a b"])
    space = build_embeddings(corpus, 16, window=1)
    assert space.dim <= 2


def test_embeddings_bad_dim():
    corpus = corpus_of("a", ["a b"])
    with pytest.raises(ValueError):
        build_embeddings(corpus, 0)


def test_neighbor_lists_scale_invariant():
    corpus = ingest_directory(TINY)
    space = build_embeddings(corpus, 8, window=3)
    scaled = EmbeddingSpace(
        vectors={t: 7.5 * v for t, v in space.vectors.items()},
        dim=space.dim,
        window=space.window,
    )
    for term in ["the", "sea", "night"]:
        assert [t for t, _ in space.neighbors(term, 5)] == [
            t for t, _ in scaled.neighbors(term, 5)
        ]


# ---------------------------------------------------------------------------
# Semantic-network expansion


def hand_space():
    return EmbeddingSpace(
        vectors={
            "sea": np.array([1.0, 0.0]),
            "ocean": np.array([0.8, 0.6]),
            "road": np.array([0.0, 1.0]),
        },
        dim=2,
        window=1,
    )


def test_expand_identity_at_k0():
    terms = {"sea": 1.0}
    expanded, skipped = expand_semantic_network(terms, hand_space(), 0, 0.5)
    assert expanded == terms
    assert skipped == []


def test_expand_hand_computation():
    expanded, _ = expand_semantic_network({"sea": 1.0}, hand_space(), 1, 0.5)
    # cosine(sea, ocean) = 0.8 exactly, so ocean enters at 0.5 * 1.0 * 0.8
    assert expanded["ocean"] == pytest.approx(0.4, abs=1e-12)
    assert expanded["sea"] == 1.0


def test_expand_max_rule():
    expanded, _ = expand_semantic_network({"sea": 1.0, "ocean": 0.9}, hand_space(), 2, 0.5)
    assert expanded["ocean"] == 0.9


def test_expand_skips_oov_seeds():
    expanded, skipped = expand_semantic_network({"sea": 1.0, "zzz": 0.8}, hand_space(), 1, 0.5)
    assert skipped == ["zzz"]
    assert expanded["zzz"] == 0.8  # seed kept, just not expanded


# ---------------------------------------------------------------------------
# Composed style model


def small_config(**overrides):
    defaults = dict(
        top_percent=25.0,
        num_topics=3,
        select_topics=2,
        words_per_topic=5,
        alpha=0.5,
        beta=0.01,
        lda_iterations=30,
        embed_dim=8,
        embed_window=3,
        neighbor_k=2,
        neighbor_decay=0.5,
        seed=11,
    )
    defaults.update(overrides)
    return StyleConfig(**defaults)


def test_style_model_roundtrip(tmp_path):
    author = ingest_directory(TINY)
    background = corpus_of("bg", ["dust and ash on the road", "a lantern in the dark"])
    model = build_style_model(author, background, small_config())
    model.save(tmp_path / "style.json")
    again = StyleModel.load(tmp_path / "style.json")
    assert again == model


def test_style_model_cardinalities():
    author = ingest_directory(TINY)
    background = corpus_of("bg", ["dust and ash on the road"])
    v = len(author.vocabulary)
    for pct in (1.0, 5.0, 25.0, 100.0):
        model = build_style_model(author, background, small_config(top_percent=pct))
        assert len(model.high_entropy_terms) == math.ceil(pct / 100.0 * v)


def test_style_model_full_selection_covers_vocab():
    author = ingest_directory(TINY)
    background = corpus_of("bg", ["dust"])
    cfg = small_config(top_percent=100.0, num_topics=3, select_topics=3)
    model = build_style_model(author, background, cfg)
    assert set(model.high_entropy_terms) >= set(author.vocabulary)


def test_style_model_weights_in_unit_interval():
    author = ingest_directory(TINY)
    background = corpus_of("bg", ["dust and ash", "a lantern"])
    model = build_style_model(author, background, small_config())
    for group in (model.high_entropy_terms, model.topic_words, model.expanded_terms):
        for w in group.values():
            assert 0.0 < w <= 1.0


def test_style_model_topics_clipped_to_doc_count():
    author = ingest_directory(TINY)  # 3 documents
    background = corpus_of("bg", ["dust"])
    model = build_style_model(author, background, small_config(num_topics=20, alpha=None))
    assert model.config.num_topics == 3
    assert model.config.alpha == pytest.approx(50.0 / 3)
