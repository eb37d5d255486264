"""versecraft: author-style verse generation.

Learns a lexical fingerprint of a poet from a small corpus, trains a
character-level LSTM on the same text, and generates short metered, rhymed
verse by running constrained beam search against finite-state scansion
machinery, with style terms boosted during decoding.
"""

__version__ = "0.1.0"
