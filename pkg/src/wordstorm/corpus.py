"""Corpus ingestion: tokenization, term statistics, and document grouping.

Documents come from a directory of UTF-8 ``.txt`` files (id = filename
stem) or a JSON-lines file with ``id``, ``text`` and optional ``label``
and ``group`` fields. Tokenization lowercases, splits on anything that is
not a letter or digit, and drops stop words and single characters. All
functions here are pure and deterministic.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
MIN_TOKEN_LENGTH = 2

PER_DOCUMENT = "per-document"
BY_GROUP = "by-group"
GROUP_MODES = (PER_DOCUMENT, BY_GROUP)


class EmptyDocument(ValueError):
    """No tokens survive tokenization for a document."""


class MissingGroupKey(ValueError):
    """A document lacks the group key required by by-group mode."""


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    label: str | None = None
    group: str | None = None


@dataclass(frozen=True)
class DocumentVector:
    """Term counts for one document; zero-count words are absent."""

    doc_id: str
    counts: dict[str, int]


@dataclass(frozen=True)
class VocabularyStats:
    """Document frequencies and idf(w) = ln(N / doc_freq(w)) over a corpus."""

    doc_count: int
    doc_freq: dict[str, int]
    idf: dict[str, float]

    @property
    def idf_max(self) -> float:
        return max(self.idf.values(), default=0.0)


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Stop word set from a one-word-per-line file, or the bundled English list."""
    if path is None:
        text = resources.files("wordstorm.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def tokenize(text: str, stoplist: frozenset[str] | set[str] = frozenset()) -> list[str]:
    """Lowercased alphanumeric tokens, minus stop words and 1-char tokens."""
    return [
        t for t in _TOKEN_RE.findall(text.lower())
        if len(t) >= MIN_TOKEN_LENGTH and t not in stoplist
    ]


def build_vector(doc: Document, stoplist: frozenset[str] | set[str] = frozenset()) -> DocumentVector:
    tokens = tokenize(doc.text, stoplist)
    if not tokens:
        raise EmptyDocument(f"document {doc.id!r} has no tokens after filtering")
    return DocumentVector(doc_id=doc.id, counts=dict(Counter(tokens)))


def group_corpus(docs: list[Document], mode: str = PER_DOCUMENT) -> list[Document]:
    """Materialize one document per cloud.

    Per-document mode returns the input unchanged. By-group mode merges
    each distinct group (in order of first appearance) into one document
    whose text is the concatenation of member texts and whose label is the
    majority label of the members (ties broken lexicographically).
    """
    if mode not in GROUP_MODES:
        raise ValueError(f"unknown grouping mode {mode!r}")
    if mode == PER_DOCUMENT:
        return list(docs)
    groups: dict[str, list[Document]] = {}
    for doc in docs:
        if doc.group is None:
            raise MissingGroupKey(f"document {doc.id!r} has no group key")
        groups.setdefault(doc.group, []).append(doc)
    merged = []
    for key, members in groups.items():
        labels = Counter(d.label for d in members if d.label is not None)
        label = min(labels, key=lambda lb: (-labels[lb], lb)) if labels else None
        merged.append(Document(
            id=key,
            text="\n".join(d.text for d in members),
            label=label,
            group=key,
        ))
    return merged


def compute_stats(vectors: list[DocumentVector]) -> VocabularyStats:
    if not vectors:
        raise ValueError("at least one document vector required")
    n = len(vectors)
    doc_freq: Counter[str] = Counter()
    for vec in vectors:
        doc_freq.update(vec.counts.keys())
    idf = {w: math.log(n / df) for w, df in doc_freq.items()}
    return VocabularyStats(doc_count=n, doc_freq=dict(doc_freq), idf=idf)


def select_words(vector: DocumentVector, m: int,
                 idf: dict[str, float] | None = None) -> list[tuple[str, float]]:
    """Top m words by weight, descending; ties broken lexicographically.

    Weight is the raw term count, or count * idf(w) when an idf table is
    supplied.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if idf is None:
        weighted = {w: float(c) for w, c in vector.counts.items()}
    else:
        weighted = {w: c * idf.get(w, 0.0) for w, c in vector.counts.items()}
    ranked = sorted(weighted.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:m]


def load_corpus(path: str | Path) -> list[Document]:
    """Read documents from a .txt directory or a JSON-lines file."""
    p = Path(path)
    if p.is_dir():
        docs = []
        for f in sorted(p.glob("*.txt")):
            docs.append(Document(id=f.stem, text=f.read_text("utf-8")))
        if not docs:
            raise FileNotFoundError(f"no .txt files in directory {p}")
        return docs
    if not p.is_file():
        raise FileNotFoundError(f"corpus path {p} does not exist")
    docs = []
    for lineno, line in enumerate(p.read_text("utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{p}:{lineno}: invalid JSON line: {exc}") from exc
        if "id" not in rec or "text" not in rec:
            raise ValueError(f"{p}:{lineno}: record needs 'id' and 'text' fields")
        if not str(rec["text"]).strip():
            raise ValueError(f"{p}:{lineno}: document {rec['id']!r} has empty text")
        docs.append(Document(
            id=str(rec["id"]),
            text=str(rec["text"]),
            label=None if rec.get("label") is None else str(rec["label"]),
            group=None if rec.get("group") is None else str(rec["group"]),
        ))
    if not docs:
        raise ValueError(f"no documents in {p}")
    ids = [d.id for d in docs]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate document ids: {dupes}")
    return docs
