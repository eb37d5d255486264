"""Command-line entry points for the full pipeline.

    versecraft ingest --corpus poems/ --out corpus.json
    versecraft style build --corpus a.json --background b.json --out style.json
    versecraft lm train --corpus corpus.json --steps 800 --out lm.bin
    versecraft lm check --model lm.bin
    versecraft generate --style style.json --lm lm.bin --meter iambic-tetrameter \
        --rhyme ABAB --lines 4 --count 12 --out poems-out/
    versecraft eval survey --in results.csv
    versecraft eval bleu --candidate poem.txt --refs gold/
    versecraft serve --port 8080 --models models/
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .charlm import LstmParams, TrainConfig, gradient_check, train_lm
from .corpus import Corpus, ingest_directory, merge_corpora
from .evalharness import (
    bleu,
    chi_square_test,
    contingency_table,
    failure_ratios,
    rating_summary,
    read_survey_csv,
)
from .formshaper import PronLexicon, meter_cycle
from .generator import GenerationSpec, batch_generate
from .stylemodel import StyleConfig, StyleModel, build_style_model


def bundled_data_path(name: str) -> Path:
    """Path of a bundled data file (fixture poems, lexicon)."""
    return Path(str(resources.files("versecraft") / "data" / name))


def cmd_ingest(args) -> int:
    corpus = ingest_directory(args.corpus, args.id)
    if args.merge:
        other = Corpus.load(args.merge)
        corpus = merge_corpora(corpus, other, args.ratio, args.seed)
    corpus.save(args.out)
    stats = corpus.stats()
    print(
        f"{corpus.corpus_id}: {stats['documents']} works, {stats['words']} words, "
        f"{stats['characters']} characters, {stats['vocabulary']} distinct terms"
    )
    return 0


def cmd_stats(args) -> int:
    corpus = Corpus.load(args.corpus)
    print(json.dumps(corpus.stats(), indent=2))
    return 0


def cmd_style_build(args) -> int:
    author = Corpus.load(args.corpus)
    background = Corpus.load(args.background)
    config = StyleConfig(
        top_percent=args.top_percent,
        num_topics=args.topics,
        select_topics=args.select_topics,
        words_per_topic=args.words_per_topic,
        alpha=args.alpha,
        beta=args.beta,
        lda_iterations=args.lda_iterations,
        embed_dim=args.embed_dim,
        embed_window=args.embed_window,
        neighbor_k=args.neighbors,
        neighbor_decay=args.decay,
        seed=args.seed,
    )
    model = build_style_model(author, background, config)
    model.save(args.out)
    print(
        f"style model for {model.author_id}: {len(model.high_entropy_terms)} "
        f"distinctive terms, {len(model.topic_words)} topic words, "
        f"{len(model.expanded_terms)} expansions -> {args.out}"
    )
    return 0


def cmd_lm_train(args) -> int:
    corpus = Corpus.load(args.corpus)
    cfg = TrainConfig(
        layers=args.layers,
        hidden=args.hidden,
        embed=args.embed,
        bptt_len=args.bptt,
        lr=args.lr,
        steps=args.steps,
        batch=args.batch,
        seed=args.seed,
    )
    params, trace = train_lm(corpus, cfg)
    params.save(args.out)
    print(
        f"trained {cfg.layers}x{cfg.hidden} model on {corpus.corpus_id}: "
        f"loss {trace[0]:.3f} -> {trace[-1]:.3f} nats/char over {cfg.steps} steps"
    )
    return 0


def cmd_lm_check(args) -> int:
    import numpy as np

    from .charlm import CharVocab

    LstmParams.load(args.model)  # validates the file itself
    # the check exercises the BPTT code, not the trained weights: a small
    # fixed alphabet and healthy random weights keep every finite-difference
    # comparison above float64 roundoff
    vocab = CharVocab.from_text("abcd")
    rng = np.random.default_rng(args.seed)
    small = LstmParams.init(vocab, layers=2, hidden=args.hidden, embed=4, seed=args.seed)
    for _, arr in small.named_arrays():
        arr[...] = rng.uniform(-1.0, 1.0, size=arr.shape)
    window = ("abcd" * args.window_chars)[: args.window_chars]
    err = gradient_check(small, window)
    print(f"max relative gradient error at hidden={args.hidden}: {err:.3e}")
    if err >= 1e-4:
        print("FAIL: analytic gradients disagree with finite differences")
        return 1
    return 0


def cmd_generate(args) -> int:
    lm = LstmParams.load(args.lm)
    lexicon = PronLexicon.load(args.lexicon or bundled_data_path("lexicon.txt"))
    style = StyleModel.load(args.style) if args.style else None
    meters = meter_cycle(args.meter)
    spec = GenerationSpec(
        lm=lm,
        lexicon=lexicon,
        meter=meters,
        line_count=args.lines,
        rhyme_scheme=args.rhyme or "",
        style=style,
        boost_terms=args.boost_terms,
        boost_topics=args.boost_topics,
        temperature=args.temp,
        beam_width=args.beam,
        branch=args.branch,
        samples_per_line=args.samples,
        max_expansions=args.expansions,
        seed=args.seed,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    poemlets, report = batch_generate(spec, args.count)
    entries = []
    for i, poemlet in enumerate(poemlets, start=1):
        path = out_dir / f"poemlet_{i:02d}.txt"
        path.write_text(poemlet.text + "\n", "utf-8")
        entries.append(poemlet.to_dict())
    (out_dir / "report.json").write_text(
        json.dumps({"poemlets": entries, **report.to_dict()}, indent=2), "utf-8"
    )
    print(
        f"{report.succeeded}/{report.requested} poemlets -> {out_dir} "
        f"(boost-word share {report.mean_boost_word_fraction:.2f})"
    )
    for index, message in report.errors:
        print(f"  poemlet {index}: {message}", file=sys.stderr)
    return 0 if report.succeeded == report.requested else 1


def cmd_eval_survey(args) -> int:
    records = read_survey_csv(args.infile)
    human_fail, machine_fail = failure_ratios(records)
    table = contingency_table(records)
    stat, dof, p = chi_square_test(table)
    print(f"judgments: {len(records)} (treated as independent)")
    print(f"failure ratio, human-written poems:   {human_fail:.2f}")
    print(f"failure ratio, machine-written poems: {machine_fail:.2f}")
    print(f"contingency table [identified, missed]: {table}")
    print(f"chi-square = {stat:.3f}, dof = {dof}, p = {p:.3f}")
    verdict = "no" if p > 0.05 else "a"
    print(f"-> {verdict} statistically significant difference at p = 0.05")
    print("ratings (mean +/- sd):")
    for source, measures in rating_summary(records).items():
        row = ", ".join(f"{m} {v[0]:.2f}+/-{v[1]:.2f}" for m, v in measures.items())
        print(f"  {source}: {row}")
    return 0


def cmd_eval_bleu(args) -> int:
    candidate = Path(args.candidate).read_text("utf-8")
    refs_dir = Path(args.refs)
    references = [p.read_text("utf-8") for p in sorted(refs_dir.glob("*.txt"))]
    score = bleu(candidate, references, max_n=args.max_n)
    print(f"bleu = {score:.4f} against {len(references)} references")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(Path(args.models))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="versecraft", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read a directory of .txt poems into corpus.json")
    p.add_argument("--corpus", required=True, help="directory of UTF-8 .txt files")
    p.add_argument("--out", required=True)
    p.add_argument("--id", default=None, help="corpus id (default: directory name)")
    p.add_argument("--merge", default=None, help="blend with another corpus.json")
    p.add_argument("--ratio", type=float, default=0.5, help="share taken from --corpus")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="print corpus statistics")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_stats)

    style = sub.add_parser("style", help="style model commands").add_subparsers(
        dest="style_command", required=True
    )
    p = style.add_parser("build", help="fingerprint an author against a background corpus")
    p.add_argument("--corpus", required=True, help="author corpus.json")
    p.add_argument("--background", required=True, help="background corpus.json")
    p.add_argument("--top-percent", type=float, default=5.0)
    p.add_argument("--topics", type=int, default=20)
    p.add_argument("--select-topics", type=int, default=5)
    p.add_argument("--words-per-topic", type=int, default=10)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--lda-iterations", type=int, default=2000)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--embed-window", type=int, default=4)
    p.add_argument("--neighbors", type=int, default=5)
    p.add_argument("--decay", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_style_build)

    lm = sub.add_parser("lm", help="language model commands").add_subparsers(
        dest="lm_command", required=True
    )
    p = lm.add_parser("train", help="train the character model on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--embed", type=int, default=32)
    p.add_argument("--bptt", type=int, default=64)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lm_train)
    p = lm.add_parser("check", help="verify gradients at reduced dimensions")
    p.add_argument("--model", required=True)
    p.add_argument("--hidden", type=int, default=6)
    p.add_argument("--window-chars", type=int, default=12)
    p.add_argument("--seed", type=int, default=2)
    p.set_defaults(func=cmd_lm_check)

    p = sub.add_parser("generate", help="generate metered, rhymed poemlets")
    p.add_argument("--lm", required=True)
    p.add_argument("--style", default=None)
    p.add_argument("--lexicon", default=None, help="CMU-style dictionary (default: bundled)")
    p.add_argument("--meter", default="iambic-tetrameter",
                   help="named meter, or literal U/S/spec ('USUS'), '/' for a cycle")
    p.add_argument("--rhyme", default="", help="rhyme scheme letters, e.g. ABAB")
    p.add_argument("--lines", type=int, default=4)
    p.add_argument("--boost-terms", type=float, default=1.0)
    p.add_argument("--boost-topics", type=float, default=0.5)
    p.add_argument("--temp", type=float, default=0.8)
    p.add_argument("--beam", type=int, default=16)
    p.add_argument("--branch", type=int, default=5)
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--expansions", type=int, default=4000)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    ev = sub.add_parser("eval", help="evaluation commands").add_subparsers(
        dest="eval_command", required=True
    )
    p = ev.add_parser("survey", help="score an indistinguishability survey CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_eval_survey)
    p = ev.add_parser("bleu", help="n-gram overlap against reference texts")
    p.add_argument("--candidate", required=True)
    p.add_argument("--refs", required=True, help="directory of reference .txt files")
    p.add_argument("--max-n", type=int, default=4)
    p.set_defaults(func=cmd_eval_bleu)

    p = sub.add_parser("serve", help="run the composition HTTP service")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--models", required=True, help="directory of style/lm/lexicon files")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
