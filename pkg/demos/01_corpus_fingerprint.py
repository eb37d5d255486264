#!/usr/bin/env python3
# Build an author fingerprint from the bundled fixture corpus: distinctive
# words by TF-IDF against a background corpus, latent themes by LDA, and
# embedding neighbors of the distinctive words.

from versecraft.cli import bundled_data_path
from versecraft.corpus import ingest_directory
from versecraft.stylemodel import StyleConfig, build_embeddings, build_style_model

author = ingest_directory(bundled_data_path("poems/author"), "author")
background = ingest_directory(bundled_data_path("poems/background"), "background")

print("author corpus:    ", author.stats())
print("background corpus:", background.stats())

config = StyleConfig(
    top_percent=10.0,
    num_topics=5,
    select_topics=3,
    words_per_topic=8,
    lda_iterations=500,
    embed_dim=16,
    neighbor_k=3,
    neighbor_decay=0.5,
    seed=11,
)
style = build_style_model(author, background, config)

print("\ndistinctive terms (TF-IDF against the background):")
for term, weight in sorted(style.high_entropy_terms.items(), key=lambda kv: -kv[1]):
    print(f"  {term:>16s}  {weight:.3f}")

print("\ntheme words (heaviest LDA topics):")
top = sorted(style.topic_words.items(), key=lambda kv: -kv[1])[:12]
print("  " + ", ".join(f"{t} ({w:.2f})" for t, w in top))

print("\nsemantic expansions of the distinctive terms:")
grown = sorted(style.expanded_terms.items(), key=lambda kv: -kv[1])[:8]
print("  " + ", ".join(f"{t} ({w:.2f})" for t, w in grown))

# the embedding space itself answers nearest-neighbor queries
space = build_embeddings(author, dim=16, window=4)
for probe in ("night", "hand", "fire"):
    neighbors = ", ".join(f"{t} {s:.2f}" for t, s in space.neighbors(probe, 4))
    print(f"\nneighbors of {probe!r}: {neighbors}")
