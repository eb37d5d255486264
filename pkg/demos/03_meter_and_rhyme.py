#!/usr/bin/env python3
# The form machinery: scansion from a pronunciation lexicon, meter
# templates, rhyme keys, and the weighted transducer route to the same
# answers.

from versecraft.cli import bundled_data_path
from versecraft.formshaper import (
    MeterPattern,
    PronLexicon,
    build_line_acceptor,
    compose,
    line_conforms,
    linear_acceptor,
    meter_conformance,
    rhyme_check,
    rhyme_keys,
    scansion,
    shortest_path,
)

lexicon = PronLexicon.load(bundled_data_path("lexicon.txt"))
print(f"lexicon: {len(lexicon.entries)} words")

line = ["tyger", "tyger", "burning", "bright"]
print(f"\nscansion of {' '.join(line)!r}:")
for rendering in sorted(scansion(line, lexicon)):
    print("  " + rendering)

# this verse is trochaic tetrameter with a clipped final syllable: seven
# positions, stressed first. The iambic template correctly rejects it.
trochaic = MeterPattern("SUSUSUS", "trochaic-catalectic")
iambic = MeterPattern("USUSUSUS", "iambic-tetrameter")
print(f"\nconforms to {trochaic.name}? ",
      meter_conformance(scansion(line, lexicon), trochaic))
print(f"conforms to {iambic.name}? ",
      meter_conformance(scansion(line, lexicon), iambic))
print("'in the forests of the night' (7 syllables, trochaic)? ",
      line_conforms(["in", "the", "forests", "of", "the", "night"], lexicon, trochaic))

print("\nrhyme keys:")
for word in ("bright", "night", "symmetry", "eye"):
    keys = ", ".join("-".join(k) for k in rhyme_keys(word, lexicon))
    print(f"  {word:>9s}: {keys}")
print("bright / night rhyme?", rhyme_check("bright", "night", lexicon))
print("bright / bright rhyme?", rhyme_check("bright", "bright", lexicon))

# the same meter question, answered by transducer composition: build an
# acceptor of word sequences scanning as the pattern, compose it with the
# line, and ask for any accepting path
vocab = ["in", "the", "forests", "of", "night", "bright", "burning"]
acceptor = build_line_acceptor(trochaic, lexicon, vocab)
print(f"\nline acceptor: {acceptor.num_states} states")

from versecraft.formshaper import PAD, Wfst

tokens = ["in", "the", "forests", "of", "the", "night"]
chain = Wfst()
prev = chain.add_state()
chain.start = prev
for token in tokens:
    nxt = chain.add_state()
    chain.add_arc(prev, token, token, 0.0, nxt)
    chain.add_arc(nxt, PAD, PAD, 0.0, nxt)
    prev = nxt
chain.set_final(prev)
for sym in acceptor.isyms.alphabet():
    chain.declare_input_symbol(sym)
    chain.declare_output_symbol(sym)
best = shortest_path(compose(chain, acceptor))
print("transducer route agrees:", best is not None)
if best:
    print("  stress tape:", "".join(best[2]))
