"""Poem corpus ingestion and statistics.

A corpus is a set of documents (one poem each) tokenized into lines, with
stanza structure preserved and aggregate vocabulary statistics maintained.
Corpora serialize to a versioned JSON document so downstream models can be
rebuilt from the exact same token stream.
"""

from __future__ import annotations

import json
import math
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CORPUS_FORMAT_VERSION = 1

# Dashes that join words without surrounding whitespace; treated as spaces
# so "mind--no" splits. ASCII hyphen stays word-internal.
_DASHES = re.compile(r"[‒–—―⸺⸻]|--+")


class CorpusError(Exception):
    """Raised for unreadable input directories or malformed corpus files."""


def _strip_token(chunk: str) -> str:
    """Strip leading/trailing punctuation from a whitespace-delimited chunk."""
    start, end = 0, len(chunk)
    while start < end and not (chunk[start].isalnum() or chunk[start] == "_"):
        start += 1
    while end > start and not (chunk[end - 1].isalnum() or chunk[end - 1] == "_"):
        end -= 1
    return chunk[start:end]


def tokenize_line(line: str) -> list[str]:
    """Tokenize one line: NFC-normalize, lowercase, split on whitespace,
    strip edge punctuation. Word-internal apostrophes and hyphens survive."""
    line = unicodedata.normalize("NFC", line).lower()
    line = _DASHES.sub(" ", line)
    tokens = []
    for chunk in line.split():
        token = _strip_token(chunk)
        if token:
            tokens.append(token)
    return tokens


def tokenize(text: str) -> tuple[list[list[str]], list[int]]:
    """Tokenize multi-line text into per-line token lists plus stanza starts.

    Blank lines separate stanzas and do not produce token lines. Returns
    (lines, stanza_breaks) where each stanza break is the index of the first
    line of a new stanza (never 0).
    """
    lines: list[list[str]] = []
    stanza_breaks: list[int] = []
    pending_break = False
    for raw_line in text.splitlines():
        tokens = tokenize_line(raw_line)
        if not tokens:
            pending_break = bool(lines)
            continue
        if pending_break:
            stanza_breaks.append(len(lines))
            pending_break = False
        lines.append(tokens)
    return lines, stanza_breaks


def detokenize(lines: list[list[str]], stanza_breaks: list[int]) -> str:
    """Render token lines back to text, blank line at each stanza break."""
    breaks = set(stanza_breaks)
    out = []
    for i, line in enumerate(lines):
        if i in breaks:
            out.append("")
        out.append(" ".join(line))
    return "\n".join(out)


@dataclass
class Document:
    """One poem: id, title, normalized body text, and tokenized structure."""

    id: str
    title: str
    text: str
    lines: list[list[str]]
    stanza_breaks: list[int]

    def tokens(self):
        for line in self.lines:
            yield from line

    @property
    def token_count(self) -> int:
        return sum(len(line) for line in self.lines)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "text": self.text,
            "lines": self.lines,
            "stanza_breaks": self.stanza_breaks,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Document":
        return cls(d["id"], d["title"], d["text"], d["lines"], d["stanza_breaks"])

    @classmethod
    def from_text(cls, doc_id: str, raw: str, title: str | None = None) -> "Document":
        """Build a document from raw text. When no explicit title is given the
        first non-blank line is the title and is excluded from the body."""
        raw = unicodedata.normalize("NFC", raw)
        body_lines = raw.splitlines()
        if title is None:
            title = ""
            for i, line in enumerate(body_lines):
                if line.strip():
                    title = line.strip()
                    body_lines = body_lines[i + 1 :]
                    break
        text = "\n".join(body_lines).strip("\n")
        lines, stanza_breaks = tokenize(text)
        return cls(doc_id, title, text, lines, stanza_breaks)


@dataclass
class Corpus:
    """An immutable document collection with vocabulary statistics."""

    corpus_id: str
    documents: list[Document]
    vocabulary: dict[str, int] = field(default_factory=dict)
    term_counts: dict[str, int] = field(default_factory=dict)
    doc_freq: dict[str, int] = field(default_factory=dict)
    total_tokens: int = 0
    total_chars: int = 0

    @classmethod
    def from_documents(cls, corpus_id: str, documents: list[Document]) -> "Corpus":
        documents = sorted(documents, key=lambda d: d.id)
        term_counts: dict[str, int] = {}
        doc_freq: dict[str, int] = {}
        total_tokens = 0
        total_chars = 0
        for doc in documents:
            seen = set()
            for tok in doc.tokens():
                term_counts[tok] = term_counts.get(tok, 0) + 1
                total_tokens += 1
                seen.add(tok)
            for tok in seen:
                doc_freq[tok] = doc_freq.get(tok, 0) + 1
            total_chars += len(doc.text)
        vocabulary = {t: i for i, t in enumerate(sorted(term_counts))}
        corpus = cls(
            corpus_id=corpus_id,
            documents=documents,
            vocabulary=vocabulary,
            term_counts=term_counts,
            doc_freq=doc_freq,
            total_tokens=total_tokens,
            total_chars=total_chars,
        )
        corpus.check_invariants()
        return corpus

    def check_invariants(self) -> None:
        n_docs = len(self.documents)
        for term, df in self.doc_freq.items():
            if not (1 <= df <= n_docs):
                raise CorpusError(f"doc_freq out of range for {term!r}: {df}")
            if df > self.term_counts[term]:
                raise CorpusError(f"doc_freq exceeds term count for {term!r}")
        if sum(self.term_counts.values()) != self.total_tokens:
            raise CorpusError("term counts do not sum to total_tokens")
        ids = sorted(self.vocabulary.values())
        if ids != list(range(len(self.vocabulary))):
            raise CorpusError("vocabulary ids are not dense")

    def stats(self) -> dict:
        """Summary in the familiar reporting shape: works, words, characters,
        distinct terms."""
        return {
            "documents": len(self.documents),
            "words": self.total_tokens,
            "characters": self.total_chars,
            "vocabulary": len(self.vocabulary),
        }

    def char_text(self) -> str:
        """The corpus as one normalized character stream for language-model
        training: document bodies joined by blank lines."""
        return "\n\n".join(detokenize(d.lines, d.stanza_breaks) for d in self.documents)

    def to_dict(self) -> dict:
        return {
            "version": CORPUS_FORMAT_VERSION,
            "corpus_id": self.corpus_id,
            "documents": [d.to_dict() for d in self.documents],
            "vocabulary": self.vocabulary,
            "term_counts": self.term_counts,
            "doc_freq": self.doc_freq,
            "total_tokens": self.total_tokens,
            "total_chars": self.total_chars,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Corpus":
        if d.get("version") != CORPUS_FORMAT_VERSION:
            raise CorpusError(f"unsupported corpus format version: {d.get('version')}")
        corpus = cls(
            corpus_id=d["corpus_id"],
            documents=[Document.from_dict(x) for x in d["documents"]],
            vocabulary=d["vocabulary"],
            term_counts=d["term_counts"],
            doc_freq=d["doc_freq"],
            total_tokens=d["total_tokens"],
            total_chars=d["total_chars"],
        )
        corpus.check_invariants()
        return corpus

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True), "utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "Corpus":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def ingest_directory(path: str | Path, corpus_id: str | None = None) -> Corpus:
    """Read every .txt file in a directory into a corpus.

    File name (without extension) becomes the document id and the first
    non-blank line the title. Files are processed in sorted name order so
    ingestion is independent of filesystem enumeration order.
    """
    path = Path(path)
    if not path.is_dir():
        raise CorpusError(f"missing directory: {path}")
    documents = []
    for file in sorted(path.glob("*.txt")):
        try:
            raw = file.read_text("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusError(f"cannot decode {file.name} as UTF-8") from exc
        documents.append(Document.from_text(file.stem, raw))
    if not documents:
        raise CorpusError(f"no documents found in {path}")
    return Corpus.from_documents(corpus_id or path.name, documents)


def merge_corpora(a: Corpus, b: Corpus, ratio: float, seed: int = 0) -> Corpus:
    """Blend two corpora by document-level subsampling without replacement.

    Takes ceil(ratio * |a|) documents from a and ceil((1 - ratio) * |b|)
    from b, chosen deterministically from the seed. Document ids are
    prefixed with the source corpus id so the merge stays collision-free.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    rng = np.random.default_rng(seed)
    n_a = math.ceil(ratio * len(a.documents))
    n_b = math.ceil((1.0 - ratio) * len(b.documents))
    pick_a = sorted(rng.choice(len(a.documents), size=n_a, replace=False))
    pick_b = sorted(rng.choice(len(b.documents), size=n_b, replace=False))
    documents = []
    for i in pick_a:
        doc = a.documents[i]
        documents.append(
            Document(f"{a.corpus_id}/{doc.id}", doc.title, doc.text, doc.lines, doc.stanza_breaks)
        )
    for i in pick_b:
        doc = b.documents[i]
        documents.append(
            Document(f"{b.corpus_id}/{doc.id}", doc.title, doc.text, doc.lines, doc.stanza_breaks)
        )
    return Corpus.from_documents(f"{a.corpus_id}+{b.corpus_id}", documents)
