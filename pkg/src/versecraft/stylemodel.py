"""Author style fingerprinting.

Three probabilistic views of an author corpus are combined into one style
model used to steer generation:

* distinctive word choices, scored by TF-IDF against a background corpus
  and thresholded to the strongest few percent of the vocabulary;
* latent themes, from a collapsed Gibbs sampler for latent Dirichlet
  allocation, keeping the heaviest topics;
* semantic neighbors of the distinctive words, found in a PPMI + truncated
  SVD embedding of the corpus, added at decayed weight.

All term weights are max-normalized into (0, 1] so downstream boost
strengths act as the single magnitude knob.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import Corpus

STYLE_FORMAT_VERSION = 1


class StyleError(Exception):
    pass


# ---------------------------------------------------------------------------
# TF-IDF


@dataclass
class TfIdfModel:
    scores: dict[str, float]
    background_doc_count: int
    background_doc_freq: dict[str, int]
    author_term_freq: dict[str, int]


def build_tfidf(author: Corpus, background: Corpus) -> TfIdfModel:
    """Score every author term: (1 + ln tf) * ln((N + 1) / (df + 1)).

    tf counts occurrences in the author corpus, df counts background
    documents containing the term. The add-one idf smoothing keeps terms
    unseen in the background finite, and sends terms present in every
    background document to exactly zero.
    """
    if not author.vocabulary:
        raise StyleError("author corpus has an empty vocabulary")
    n_bg = len(background.documents)
    scores = {}
    for term, tf in author.term_counts.items():
        df = background.doc_freq.get(term, 0)
        scores[term] = (1.0 + math.log(tf)) * math.log((n_bg + 1) / (df + 1))
    return TfIdfModel(
        scores=scores,
        background_doc_count=n_bg,
        background_doc_freq=dict(background.doc_freq),
        author_term_freq=dict(author.term_counts),
    )


def select_high_entropy(model: TfIdfModel, top_percent: float) -> dict[str, float]:
    """Keep the top ceil(top_percent% of |V|) terms by score, max-normalized.

    Ties break toward the lexicographically smaller term so selection is
    deterministic.
    """
    if not 0.0 < top_percent <= 100.0:
        raise ValueError(f"top_percent must be in (0, 100], got {top_percent}")
    n = math.ceil(top_percent / 100.0 * len(model.scores))
    ranked = sorted(model.scores.items(), key=lambda kv: (-kv[1], kv[0]))[:n]
    top = max((s for _, s in ranked), default=0.0)
    if top <= 0.0:
        return {t: 1.0 for t, _ in ranked}
    return {t: s / top for t, s in ranked}


# ---------------------------------------------------------------------------
# Latent Dirichlet allocation, collapsed Gibbs


@dataclass
class TopicModel:
    n_topics: int
    alpha: float
    beta: float
    phi: np.ndarray  # (K, V) topic-word probabilities
    theta: np.ndarray  # (D, K) document-topic probabilities
    assignments: list[int]  # per token, document-major order
    topic_mass: np.ndarray  # (K,) tokens currently assigned per topic
    vocabulary: dict[str, int]
    seed: int


class GibbsLda:
    """Collapsed Gibbs sampler over token-topic assignments.

    Documents are lists of term ids. One sweep resamples every token from
    p(z=k) proportional to (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta),
    with the token's own assignment excluded from all counts.
    """

    def __init__(self, docs: list[list[int]], n_terms: int, n_topics: int,
                 alpha: float, beta: float, seed: int = 0):
        if n_topics < 1:
            raise ValueError(f"need at least one topic, got {n_topics}")
        self.docs = docs
        self.V = n_terms
        self.K = n_topics
        self.alpha = alpha
        self.beta = beta
        self.rng = np.random.default_rng(seed)
        self.n_dk = np.zeros((len(docs), n_topics), dtype=np.int64)
        self.n_kw = np.zeros((n_topics, n_terms), dtype=np.int64)
        self.n_k = np.zeros(n_topics, dtype=np.int64)
        self.z = [np.zeros(len(doc), dtype=np.int64) for doc in docs]
        self.total_tokens = sum(len(doc) for doc in docs)
        for d, doc in enumerate(docs):
            for i, w in enumerate(doc):
                k = int(self.rng.integers(n_topics))
                self.z[d][i] = k
                self.n_dk[d, k] += 1
                self.n_kw[k, w] += 1
                self.n_k[k] += 1

    def sweep(self) -> None:
        for d, doc in enumerate(self.docs):
            zd = self.z[d]
            for i, w in enumerate(doc):
                k = zd[i]
                self.n_dk[d, k] -= 1
                self.n_kw[k, w] -= 1
                self.n_k[k] -= 1
                p = (self.n_dk[d] + self.alpha) * (self.n_kw[:, w] + self.beta) / (
                    self.n_k + self.V * self.beta
                )
                cdf = np.cumsum(p)
                k = int(np.searchsorted(cdf, self.rng.random() * cdf[-1], side="right"))
                k = min(k, self.K - 1)
                zd[i] = k
                self.n_dk[d, k] += 1
                self.n_kw[k, w] += 1
                self.n_k[k] += 1
        assert int(self.n_k.sum()) == self.total_tokens

    def run(self, iterations: int) -> None:
        if iterations < 1:
            raise ValueError(f"need at least one iteration, got {iterations}")
        for _ in range(iterations):
            self.sweep()

    def phi(self) -> np.ndarray:
        return (self.n_kw + self.beta) / (self.n_k[:, None] + self.V * self.beta)

    def theta(self) -> np.ndarray:
        doc_len = self.n_dk.sum(axis=1, keepdims=True)
        return (self.n_dk + self.alpha) / (doc_len + self.K * self.alpha)


def train_lda(corpus: Corpus, n_topics: int, alpha: float, beta: float,
              iterations: int, seed: int = 0) -> TopicModel:
    if not corpus.documents or corpus.total_tokens == 0:
        raise StyleError("cannot train a topic model on an empty corpus")
    vocab = corpus.vocabulary
    docs = [[vocab[t] for t in doc.tokens()] for doc in corpus.documents]
    sampler = GibbsLda(docs, len(vocab), n_topics, alpha, beta, seed)
    sampler.run(iterations)
    assignments = [int(k) for zd in sampler.z for k in zd]
    return TopicModel(
        n_topics=n_topics,
        alpha=alpha,
        beta=beta,
        phi=sampler.phi(),
        theta=sampler.theta(),
        assignments=assignments,
        topic_mass=sampler.n_k.copy(),
        vocabulary=dict(vocab),
        seed=seed,
    )


def top_topics(model: TopicModel, n_select: int, words_per_topic: int) -> dict[str, float]:
    """Words of the heaviest topics, weighted by phi and max-normalized.

    Topics rank by assigned token mass (ties to the lower topic id); a word
    reached through several topics keeps its largest weight.
    """
    if not 1 <= n_select <= model.n_topics:
        raise ValueError(
            f"can select between 1 and {model.n_topics} topics, got {n_select}"
        )
    order = sorted(range(model.n_topics), key=lambda k: (-int(model.topic_mass[k]), k))
    id_to_term = {i: t for t, i in model.vocabulary.items()}
    raw: dict[str, float] = {}
    for k in order[:n_select]:
        row = model.phi[k]
        by_phi = sorted(range(len(row)), key=lambda w: (-row[w], id_to_term[w]))
        for w in by_phi[:words_per_topic]:
            term = id_to_term[w]
            raw[term] = max(raw.get(term, 0.0), float(row[w]))
    top = max(raw.values(), default=0.0)
    if top <= 0.0:
        return {}
    return {t: v / top for t, v in raw.items()}


# ---------------------------------------------------------------------------
# Word embeddings: PPMI co-occurrence factored by truncated SVD


@dataclass
class EmbeddingSpace:
    vectors: dict[str, np.ndarray]
    dim: int
    window: int

    def cosine(self, a: str, b: str) -> float:
        va, vb = self.vectors.get(a), self.vectors.get(b)
        if va is None or vb is None:
            return 0.0
        na, nb = np.linalg.norm(va), np.linalg.norm(vb)
        if na == 0.0 or nb == 0.0:
            return 0.0
        return float(np.dot(va, vb) / (na * nb))

    def neighbors(self, term: str, k: int) -> list[tuple[str, float]]:
        """k nearest in-vocabulary terms by cosine, positive similarity only."""
        if term not in self.vectors or k <= 0:
            return []
        sims = []
        for other in self.vectors:
            if other == term:
                continue
            s = self.cosine(term, other)
            if s > 0.0:
                sims.append((other, s))
        sims.sort(key=lambda ts: (-ts[1], ts[0]))
        return sims[:k]


def cooccurrence_counts(corpus: Corpus, window: int) -> tuple[np.ndarray, dict[str, int]]:
    """Symmetric within-document co-occurrence counts over a token window."""
    vocab = corpus.vocabulary
    counts = np.zeros((len(vocab), len(vocab)), dtype=np.float64)
    for doc in corpus.documents:
        stream = [vocab[t] for t in doc.tokens()]
        for i, w in enumerate(stream):
            for j in range(max(0, i - window), i):
                counts[w, stream[j]] += 1.0
                counts[stream[j], w] += 1.0
    return counts, vocab


def ppmi_matrix(counts: np.ndarray) -> np.ndarray:
    total = counts.sum()
    if total == 0.0:
        return np.zeros_like(counts)
    row = counts.sum(axis=1, keepdims=True)
    col = counts.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        pmi = np.log(counts * total / (row * col))
    pmi[~np.isfinite(pmi)] = 0.0
    return np.maximum(pmi, 0.0)


def build_embeddings(corpus: Corpus, dim: int, window: int = 4) -> EmbeddingSpace:
    """Factor the PPMI matrix to `dim` dimensions (capped at matrix rank)."""
    if dim < 1:
        raise ValueError(f"embedding dimension must be >= 1, got {dim}")
    if not corpus.vocabulary:
        raise StyleError("cannot embed an empty vocabulary")
    counts, vocab = cooccurrence_counts(corpus, window)
    ppmi = ppmi_matrix(counts)
    u, s, _ = np.linalg.svd(ppmi, full_matrices=False)
    rank = int((s > s[0] * 1e-12).sum()) if s.size and s[0] > 0.0 else 0
    k = min(dim, rank)
    mat = u[:, :k] * np.sqrt(s[:k]) if k else np.zeros((len(vocab), 0))
    vectors = {t: mat[i].copy() for t, i in vocab.items()}
    return EmbeddingSpace(vectors=vectors, dim=k, window=window)


def expand_semantic_network(
    terms: dict[str, float],
    space: EmbeddingSpace,
    k: int,
    decay: float,
) -> tuple[dict[str, float], list[str]]:
    """Grow a weighted term set with embedding neighbors of each seed.

    A neighbor enters at decay * seed weight * cosine similarity; terms
    already present keep their larger weight and seeds are never
    down-weighted. Returns the grown set plus any seeds that were skipped
    for being out of vocabulary.
    """
    if k < 0:
        raise ValueError(f"neighbor count must be >= 0, got {k}")
    expanded = dict(terms)
    skipped = []
    for seed, weight in sorted(terms.items(), key=lambda kv: (-kv[1], kv[0])):
        if seed not in space.vectors:
            skipped.append(seed)
            continue
        for neighbor, sim in space.neighbors(seed, k):
            w = decay * weight * sim
            if w > expanded.get(neighbor, 0.0):
                expanded[neighbor] = w
    return expanded, skipped


# ---------------------------------------------------------------------------
# Composed style model


@dataclass
class StyleConfig:
    top_percent: float = 5.0
    num_topics: int = 20
    select_topics: int = 5
    words_per_topic: int = 10
    alpha: float | None = None  # defaults to 50 / num_topics
    beta: float = 0.01
    lda_iterations: int = 2000
    embed_dim: int = 32
    embed_window: int = 4
    neighbor_k: int = 5
    neighbor_decay: float = 0.5
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "top_percent": self.top_percent,
            "num_topics": self.num_topics,
            "select_topics": self.select_topics,
            "words_per_topic": self.words_per_topic,
            "alpha": self.alpha,
            "beta": self.beta,
            "lda_iterations": self.lda_iterations,
            "embed_dim": self.embed_dim,
            "embed_window": self.embed_window,
            "neighbor_k": self.neighbor_k,
            "neighbor_decay": self.neighbor_decay,
            "seed": self.seed,
        }


@dataclass
class StyleModel:
    """Serializable author fingerprint: three weighted term sets plus the
    configuration that produced them."""

    author_id: str
    high_entropy_terms: dict[str, float]
    topic_words: dict[str, float]
    expanded_terms: dict[str, float]
    config: StyleConfig
    format_version: int = STYLE_FORMAT_VERSION

    def term_weight(self, key: str) -> float:
        """Weight of a word (or space-joined bigram) in the word-choice
        channel: distinctive terms plus their semantic expansions."""
        return max(self.high_entropy_terms.get(key, 0.0), self.expanded_terms.get(key, 0.0))

    def topic_weight(self, word: str) -> float:
        return self.topic_words.get(word, 0.0)

    def to_dict(self) -> dict:
        # weights as decimal strings: repr round-trips float64 exactly
        def encode(d: dict[str, float]) -> dict[str, str]:
            return {t: repr(w) for t, w in sorted(d.items())}

        return {
            "format_version": self.format_version,
            "author_id": self.author_id,
            "config": self.config.to_dict(),
            "high_entropy_terms": encode(self.high_entropy_terms),
            "topic_words": encode(self.topic_words),
            "expanded_terms": encode(self.expanded_terms),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StyleModel":
        if d.get("format_version") != STYLE_FORMAT_VERSION:
            raise StyleError(f"unsupported style format version: {d.get('format_version')}")

        def decode(enc: dict[str, str]) -> dict[str, float]:
            return {t: float(w) for t, w in enc.items()}

        return cls(
            author_id=d["author_id"],
            high_entropy_terms=decode(d["high_entropy_terms"]),
            topic_words=decode(d["topic_words"]),
            expanded_terms=decode(d["expanded_terms"]),
            config=StyleConfig(**d["config"]),
            format_version=d["format_version"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=2),
            "utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "StyleModel":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def build_style_model(author: Corpus, background: Corpus, config: StyleConfig) -> StyleModel:
    """Run the full fingerprinting pipeline over an author corpus."""
    n_topics = max(1, min(config.num_topics, len(author.documents)))
    n_select = max(1, min(config.select_topics, n_topics))
    alpha = config.alpha if config.alpha is not None else 50.0 / n_topics
    config = replace(config, num_topics=n_topics, select_topics=n_select, alpha=alpha)

    tfidf = build_tfidf(author, background)
    high_entropy = select_high_entropy(tfidf, config.top_percent)
    lda = train_lda(author, n_topics, alpha, config.beta, config.lda_iterations, config.seed)
    topics = top_topics(lda, n_select, config.words_per_topic)
    space = build_embeddings(author, config.embed_dim, config.embed_window)
    grown, _skipped = expand_semantic_network(
        high_entropy, space, config.neighbor_k, config.neighbor_decay
    )
    additions = {t: w for t, w in grown.items() if t not in high_entropy}
    return StyleModel(
        author_id=author.corpus_id,
        high_entropy_terms=high_entropy,
        topic_words=topics,
        expanded_terms=additions,
        config=config,
    )
