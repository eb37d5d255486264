from pathlib import Path

import pytest

from versecraft.charlm import TrainConfig, train_on_text
from versecraft.formshaper import PronLexicon
from versecraft.stylemodel import StyleConfig, StyleModel

DATA = Path(__file__).parent / "data"

TOY_WORDS = ["sun", "moon", "sea", "sky", "bright", "night", "far", "star"]


def toy_training_text() -> str:
    """Lines of two to four toy words, grouped into short poems, so the
    model has no fixed idea of where a line ends."""
    poems = []
    for start in range(len(TOY_WORDS)):
        lines = []
        for i in range(12):
            n = 2 + (start + i) % 3
            words = [TOY_WORDS[(start + i + j * 3) % len(TOY_WORDS)] for j in range(n)]
            lines.append(" ".join(words))
        poems.append("\n".join(lines) + "\n\x03")
    return "".join(poems)


@pytest.fixture(scope="session")
def toy_lm():
    cfg = TrainConfig(layers=1, hidden=24, embed=12, bptt_len=32, lr=5e-3,
                      steps=400, batch=8, seed=3)
    params, _ = train_on_text(toy_training_text(), cfg)
    return params


@pytest.fixture(scope="session")
def lexicon():
    return PronLexicon.load(DATA / "lexicon.txt")


@pytest.fixture(scope="session")
def toy_style():
    return StyleModel(
        author_id="toy",
        high_entropy_terms={"bright": 1.0, "night": 0.8, "star": 0.6, "sea": 0.5},
        topic_words={"moon": 1.0, "sky": 0.7},
        expanded_terms={"far star": 0.9},
        config=StyleConfig(),
    )
