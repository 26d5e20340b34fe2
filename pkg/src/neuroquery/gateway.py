"""Inference gateway: dense retrieval, span extraction and translation.

Two interchangeable backends sit behind one contract. The fallback backend
is deterministic, needs no network and no model files; its scorers are
deliberately simple (hashed bag-of-words cosine, stemmed-overlap windows)
because their job is to make the engine's plumbing testable, not to
approximate a real retriever or reader. The remote backend speaks the
sidecar wire protocol over HTTP:

    POST /v1/embed     {"texts": [...], "kind": "query"|"passage"}
                       -> {"vectors": [[float, ...], ...]}
    POST /v1/extract   {"question": ..., "contexts": [{"id", "text"}], "top_k": n}
                       -> {"answers": [{"id", "text", "start", "end", "score"}]}
    POST /v1/translate {"question": ...} -> {"query": ...}

Errors arrive as non-2xx with a JSON {"error": ...} body. Connection
failures and timeouts raise GatewayUnavailable (one retry on connection
errors only); malformed responses raise GatewayProtocolError.
"""

import hashlib
import math
from dataclasses import dataclass

import requests

from .bm25 import tokenize_stem
from .errors import (GatewayProtocolError, GatewayUnavailable, ParseError,
                     TranslationUnparsable)
from .terms import term_key

_DIM = 1024
_MAX_WINDOW = 15


@dataclass(frozen=True)
class ScoredHit:
    doc_key: object
    score: float


@dataclass(frozen=True)
class AnswerSpan:
    doc_key: object
    text: str
    start: int  # character offsets into the document text
    end: int
    score: float


@dataclass(frozen=True)
class GatewayConfig:
    backend: str = "fallback"  # fallback | remote
    endpoint: str | None = None
    timeout_ms: int = 30_000
    batch_size: int = 16
    max_in_flight: int = 4

    def __post_init__(self):
        if self.backend not in ("fallback", "remote"):
            raise ValueError(f"unknown gateway backend {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ValueError("remote gateway needs an endpoint")


def make_gateway(config: GatewayConfig):
    if config.backend == "remote":
        return RemoteGateway(config)
    return FallbackGateway()


def _sorted_hits(hits: list) -> list:
    hits.sort(key=lambda h: (-h.score, term_key(h.doc_key)))
    return hits


class FallbackGateway:
    """Hermetic deterministic backend used for tests and offline runs."""

    def retrieve(self, question: str, docs: list, k: int) -> list:
        """Cosine similarity between hashed bag-of-words vectors.

        Tokens are stemmed, hashed into 1024 dimensions with a stable
        digest, weighted by term frequency and L2-normalized, so scores
        are reproducible across processes.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if not docs:
            raise ValueError("docs must be non-empty")
        query_vec = _hash_vector(question)
        hits = [ScoredHit(doc_key, _cosine(query_vec, _hash_vector(text)))
                for doc_key, text in docs]
        return _sorted_hits(hits)[:k]

    def extract(self, question: str, docs: list, k: int) -> list:
        """Best contiguous window of at most 15 tokens per document.

        A window scores by how many of its tokens share a stem with the
        question; documents with no overlap yield no span. At most k spans
        are returned globally, best first.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        question_stems = set(tokenize_stem(question))
        spans = []
        for doc_key, text in docs:
            span = _best_window(doc_key, text, question_stems)
            if span is not None:
                spans.append(span)
        spans.sort(key=lambda s: (-s.score, term_key(s.doc_key), s.start))
        return spans[:k]

    def translate(self, question: str) -> str:
        raise GatewayUnavailable("the fallback backend has no translator")


def _hash_vector(text: str) -> dict:
    vec: dict[int, float] = {}
    for token in tokenize_stem(text):
        digest = hashlib.md5(token.encode("utf-8")).digest()
        slot = int.from_bytes(digest[:4], "big") % _DIM
        vec[slot] = vec.get(slot, 0.0) + 1.0
    norm = math.sqrt(sum(v * v for v in vec.values()))
    if norm > 0:
        vec = {slot: v / norm for slot, v in vec.items()}
    return vec


def _cosine(a: dict, b: dict) -> float:
    if len(b) < len(a):
        a, b = b, a
    return sum(v * b.get(slot, 0.0) for slot, v in a.items())


def _best_window(doc_key, text: str, question_stems: set):
    import re

    tokens = [(m.start(), m.end(), m.group().lower())
              for m in re.finditer(r"[A-Za-z0-9]+", text)]
    if not tokens:
        return None
    from .stemmer import stem

    matches = [1 if stem(tok) in question_stems else 0 for _, _, tok in tokens]
    best = None  # (overlap, -length, start index)
    for i in range(len(tokens)):
        overlap = 0
        for j in range(i, min(i + _MAX_WINDOW, len(tokens))):
            overlap += matches[j]
            if overlap == 0:
                continue
            candidate = (overlap, -(j - i + 1), -i)
            if best is None or candidate > best[0]:
                best = (candidate, i, j)
    if best is None:
        return None
    _, i, j = best
    start, end = tokens[i][0], tokens[j][1]
    return AnswerSpan(doc_key=doc_key, text=text[start:end], start=start, end=end,
                      score=float(best[0][0]))


class RemoteGateway:
    """Client for the sidecar wire protocol."""

    def __init__(self, config: GatewayConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()

    # -- wire plumbing -----------------------------------------------------

    def _post(self, path: str, payload: dict) -> dict:
        url = self.config.endpoint.rstrip("/") + path
        timeout = self.config.timeout_ms / 1000.0
        for attempt in (0, 1):  # one retry on connection errors only
            try:
                response = self.session.post(url, json=payload, timeout=timeout)
                break
            except (requests.ConnectionError, requests.Timeout) as exc:
                if attempt == 1:
                    raise GatewayUnavailable(f"{url}: {exc}") from exc
        if not response.ok:
            try:
                error = response.json().get("error", response.text)
            except ValueError:
                error = response.text
            raise GatewayProtocolError(f"{url}: {response.status_code}: {error}")
        try:
            body = response.json()
        except ValueError as exc:
            raise GatewayProtocolError(f"{url}: response is not JSON") from exc
        if not isinstance(body, dict):
            raise GatewayProtocolError(f"{url}: response is not an object")
        return body

    def _embed(self, texts: list, kind: str) -> list:
        batches = [texts[i:i + self.config.batch_size]
                   for i in range(0, len(texts), self.config.batch_size)]

        def fetch(batch: list) -> list:
            body = self._post("/v1/embed", {"texts": batch, "kind": kind})
            got = body.get("vectors")
            if not isinstance(got, list) or len(got) != len(batch):
                raise GatewayProtocolError("embed returned a wrong-size vector list")
            return got

        workers = min(self.config.max_in_flight, len(batches))
        if workers <= 1:
            results = [fetch(batch) for batch in batches]
        else:
            from concurrent.futures import ThreadPoolExecutor

            # bounded in-flight requests; map preserves batch order
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(fetch, batches))
        vectors = []
        for got in results:
            vectors.extend(got)
        return vectors

    # -- contract ------------------------------------------------------------

    def retrieve(self, question: str, docs: list, k: int) -> list:
        """Dense scores: dot product of sidecar query and passage embeddings."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if not docs:
            raise ValueError("docs must be non-empty")
        query_vec = self._embed([question], kind="query")[0]
        doc_vecs = self._embed([text for _, text in docs], kind="passage")
        hits = []
        for (doc_key, _), vec in zip(docs, doc_vecs):
            if len(vec) != len(query_vec):
                raise GatewayProtocolError("embedding dimensions differ")
            hits.append(ScoredHit(doc_key, float(sum(q * d for q, d in zip(query_vec, vec)))))
        return _sorted_hits(hits)[:k]

    def extract(self, question: str, docs: list, k: int) -> list:
        if k < 1:
            raise ValueError("k must be >= 1")
        if not docs:
            return []
        by_id = {str(i): (doc_key, text) for i, (doc_key, text) in enumerate(docs)}
        contexts = [{"id": doc_id, "text": text}
                    for doc_id, (_, text) in by_id.items()]
        body = self._post("/v1/extract",
                          {"question": question, "contexts": contexts, "top_k": k})
        answers = body.get("answers")
        if not isinstance(answers, list):
            raise GatewayProtocolError("extract returned no answer list")
        spans = []
        for answer in answers:
            span = self._validate_span(answer, by_id)
            spans.append(span)
        spans.sort(key=lambda s: (-s.score, term_key(s.doc_key), s.start))
        return spans[:k]

    @staticmethod
    def _validate_span(answer, by_id: dict) -> AnswerSpan:
        try:
            doc_key, text = by_id[answer["id"]]
            start, end = int(answer["start"]), int(answer["end"])
            span_text, score = answer["text"], float(answer["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise GatewayProtocolError(f"malformed answer {answer!r}") from exc
        if not (0 <= start < end <= len(text)) or text[start:end] != span_text:
            raise GatewayProtocolError(
                f"answer offsets [{start}:{end}] do not match their context")
        return AnswerSpan(doc_key=doc_key, text=span_text, start=start, end=end,
                          score=score)

    def translate(self, question: str) -> str:
        body = self._post("/v1/translate", {"question": question})
        query = body.get("query")
        if not isinstance(query, str):
            raise GatewayProtocolError("translate returned no query text")
        return query


def translate_and_parse(gateway, question: str):
    """Translate a question and round-trip the result through the parser.

    Returns ``(query_text, program)``; raises TranslationUnparsable with
    the raw candidate text when the translation does not parse.
    """
    from .parser import parse_program

    query_text = gateway.translate(question)
    try:
        program = parse_program(query_text)
    except ParseError as exc:
        raise TranslationUnparsable(query_text, exc) from exc
    return query_text, program
