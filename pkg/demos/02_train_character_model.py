#!/usr/bin/env python3
# Train the character-level LSTM on the fixture corpus, watch the loss
# fall, then sample free text and measure perplexity. Training is small
# here to stay quick; the CLI defaults train a stronger model.

from versecraft.charlm import TrainConfig, gradient_check, perplexity, sample, train_lm
from versecraft.cli import bundled_data_path
from versecraft.corpus import ingest_directory

corpus = ingest_directory(bundled_data_path("poems/author"), "author")
print(f"training on {corpus.total_chars} characters of verse")

cfg = TrainConfig(layers=2, hidden=48, embed=24, bptt_len=48, lr=3e-3,
                  steps=600, batch=12, seed=7)
params, trace = train_lm(corpus, cfg)
for step in (0, 99, 299, len(trace) - 1):
    print(f"  step {step + 1:4d}: {trace[step]:.3f} nats/char")

print("\nfree sample at temperature 0.7:")
print("  " + sample(params, prefix="the ", temperature=0.7, seed=5, max_chars=120).replace("\n", "\n  "))

nats, ppl = perplexity(params, "tyger tyger burning bright")
print(f"\nperplexity of a corpus line: {ppl:.2f} ({nats:.3f} nats/char)")
nats, ppl = perplexity(params, "zxq vw jj kqx")
print(f"perplexity of alphabet soup: {ppl:.2f} ({nats:.3f} nats/char)")

# the backpropagation is hand-rolled; verify it against finite differences
# at toy dimensions (the full check lives in the test suite)
from versecraft.charlm import CharVocab, LstmParams
import numpy as np

vocab = CharVocab.from_text("abcd")
small = LstmParams.init(vocab, layers=2, hidden=6, embed=4, seed=5)
rng = np.random.default_rng(5)
for _, arr in small.named_arrays():
    arr[...] = rng.uniform(-1.0, 1.0, size=arr.shape)
err = gradient_check(small, "abcdabcdabcd")
print(f"\ngradient check, analytic vs finite differences: max rel err {err:.2e}")
