"""Sparse retrieval: tokenization, stemming and BM25+ scoring.

The ranking function is BM25 with a lower-bound shift (the BM25+ delta)
so that a long document containing a query term never scores below an
arbitrary document without it. Query and documents share one
tokenize-and-stem pipeline. Indexes are immutable once built and safe to
score from concurrently.
"""

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .errors import DuplicateDocKey, UnknownDocKey
from .terms import term_key

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize_stem(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, stem each token."""
    from .stemmer import stem

    return [stem(token) for token in _TOKEN_RE.findall(text.lower())]


@dataclass(frozen=True)
class Bm25Params:
    """k1 saturates term frequency, b scales length normalization,
    delta is the lower-bound shift applied to every matched term."""

    k1: float = 1.5
    b: float = 0.75
    delta: float = 1.0

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError("k1 must be >= 0")
        if not 0 <= self.b <= 1:
            raise ValueError("b must be in [0, 1]")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")


@dataclass(frozen=True)
class ScoredHit:
    doc_key: object
    score: float


@dataclass
class Bm25Index:
    params: Bm25Params
    postings: dict = field(default_factory=dict)  # token -> {doc_key: tf}
    doc_len: dict = field(default_factory=dict)  # doc_key -> token count
    avgdl: float = 0.0

    @property
    def size(self) -> int:
        return len(self.doc_len)


def build_index(docs, params: Bm25Params | None = None) -> Bm25Index:
    """Index a collection of ``(doc_key, text)`` pairs; keys must be distinct."""
    index = Bm25Index(params=params or Bm25Params())
    for doc_key, text in docs:
        if doc_key in index.doc_len:
            raise DuplicateDocKey(f"duplicate document key {doc_key!r}")
        tokens = tokenize_stem(text)
        index.doc_len[doc_key] = len(tokens)
        for token, tf in Counter(tokens).items():
            index.postings.setdefault(token, {})[doc_key] = tf
    if index.doc_len:
        index.avgdl = sum(index.doc_len.values()) / len(index.doc_len)
    return index


def _idf(index: Bm25Index, token: str) -> float:
    df = len(index.postings.get(token, ()))
    return math.log(1.0 + (index.size - df + 0.5) / (df + 0.5))


def score(index: Bm25Index, query_tokens: list[str], doc_key) -> float:
    """Score one document against pre-tokenized query terms.

    Each matched term contributes ``idf * (delta + saturated_tf)``; terms
    absent from the document contribute nothing.
    """
    if doc_key not in index.doc_len:
        raise UnknownDocKey(f"unknown document key {doc_key!r}")
    p = index.params
    length = index.doc_len[doc_key]
    norm = p.k1 * (1.0 - p.b + p.b * length / index.avgdl) if index.avgdl else p.k1
    total = 0.0
    for token in query_tokens:
        tf = index.postings.get(token, {}).get(doc_key, 0)
        if tf == 0:
            continue
        saturated = tf * (p.k1 + 1.0) / (tf + norm)
        total += _idf(index, token) * (p.delta + saturated)
    return total


def top_k(index: Bm25Index, query_text: str, k: int) -> list[ScoredHit]:
    """Distinct positive-score documents, best first, truncated to k.

    Ordering is total: descending score, then ascending doc key, so equal
    inputs always rank identically.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query_tokens = tokenize_stem(query_text)
    candidates: set = set()
    for token in set(query_tokens):
        candidates.update(index.postings.get(token, ()))
    hits = [ScoredHit(doc_key, score(index, query_tokens, doc_key))
            for doc_key in candidates]
    hits = [h for h in hits if h.score > 0.0]
    hits.sort(key=lambda h: (-h.score, term_key(h.doc_key)))
    return hits[:k]
