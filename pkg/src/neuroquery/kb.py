"""In-memory n-tuple knowledge base with CSV ingestion.

Facts are ground tuples stored in insertion order and deduplicated with set
semantics; re-asserting an existing fact is a no-op. Enumeration against a
pattern always yields matches in insertion order, accelerated by positional
indexes on the first two elements. The store is append-only: concurrent
reads are safe, and a loaded store must not be mutated while a query over
it is being evaluated.
"""

import csv
from typing import Iterator, Optional

from .errors import MalformedRow, NonGroundFact
from .terms import Ident, Term, is_ground, parse_value
from .unify import Frame, substitute, unify

CSV_KINDS = ("properties", "reviews", "questions")

# predicate -> how to parse the object column, per file kind
_REVIEW_COLUMNS = {"review": "ident", "text": "text"}
_QUESTION_COLUMNS = {
    "question": "ident",
    "text": "text",
    "query": "text",
    "answer": "text",
    "review": "ident",
}


class KnowledgeBase:
    """Insertion-ordered, deduplicated store of ground fact tuples."""

    def __init__(self):
        self._facts: list[tuple] = []
        self._seen: set[tuple] = set()
        # (arity, position, element) -> fact positions, for position 0 and 1
        self._index: dict[tuple, list[int]] = {}

    def __len__(self) -> int:
        return len(self._facts)

    @property
    def facts(self) -> tuple:
        return tuple(self._facts)

    def assert_fact(self, fact: tuple) -> None:
        """Add a ground fact; duplicates leave the store unchanged."""
        if not isinstance(fact, tuple) or len(fact) < 1:
            raise NonGroundFact(f"a fact must be a tuple of arity >= 1, got {fact!r}")
        if not is_ground(fact):
            raise NonGroundFact(f"fact contains variables: {fact!r}")
        if fact in self._seen:
            return
        position = len(self._facts)
        self._facts.append(fact)
        self._seen.add(fact)
        arity = len(fact)
        self._index.setdefault((arity, 0, fact[0]), []).append(position)
        if arity >= 2:
            self._index.setdefault((arity, 1, fact[1]), []).append(position)

    def load_csv(self, path, kind: str) -> int:
        """Load one CSV file of the given kind; returns facts actually added.

        Row schemas (UTF-8, comma separated, no header):
          properties  ``<asin>,<property>,<value>`` with the value parsed by
                      the integer/float/identifier/text precedence rule
          reviews     ``<asin>,review,<review_id>`` and
                      ``<review_id>,text,<free text>``
          questions   ``<asin>,question,<qid>``, ``<qid>,text,...``,
                      ``<qid>,query,...``, ``<qid>,answer,...`` and the
                      optional ``<qid>,review,<review_id>`` gold marker
        """
        if kind not in CSV_KINDS:
            raise ValueError(f"unknown csv kind {kind!r}, expected one of {CSV_KINDS}")
        added = 0
        with open(path, newline="", encoding="utf-8") as handle:
            for lineno, row in enumerate(csv.reader(handle), start=1):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 3:
                    raise MalformedRow(lineno, f"expected 3 columns, got {len(row)}")
                subject, predicate, obj = row[0].strip(), row[1].strip(), row[2]
                if not subject or not predicate:
                    raise MalformedRow(lineno, "empty subject or predicate column")
                fact = self._parse_row(kind, subject, predicate, obj, lineno)
                before = len(self._facts)
                self.assert_fact(fact)
                if len(self._facts) > before:
                    added += 1
        return added

    def _parse_row(self, kind: str, subject: str, predicate: str, obj: str, lineno: int) -> tuple:
        subj = Ident(subject)
        pred = Ident(predicate)
        if kind == "properties":
            return (subj, pred, parse_value(obj.strip()))
        columns = _REVIEW_COLUMNS if kind == "reviews" else _QUESTION_COLUMNS
        how = columns.get(predicate)
        if how is None:
            raise MalformedRow(
                lineno, f"predicate {predicate!r} not allowed in a {kind} file")
        value: Term = Ident(obj.strip()) if how == "ident" else obj
        return (subj, pred, value)

    def facts_matching(self, pattern: tuple, frame: Frame) -> Iterator[tuple]:
        """Yield facts that unify with the pattern under the frame.

        Exactly the facts a full scan with :func:`unify` would accept, in
        insertion order. When the substituted pattern has a ground first or
        second element the positional index prunes the candidates.
        """
        resolved = substitute(pattern, frame)
        candidates = self._candidate_positions(resolved)
        if candidates is None:
            for fact in self._facts:
                if unify(resolved, fact, frame) is not None:
                    yield fact
        else:
            for position in candidates:
                fact = self._facts[position]
                if unify(resolved, fact, frame) is not None:
                    yield fact

    def _candidate_positions(self, pattern: tuple) -> Optional[list]:
        if not isinstance(pattern, tuple) or not pattern:
            return []
        arity = len(pattern)
        for position in (0, 1):
            if position >= arity:
                break
            element = pattern[position]
            if is_ground(element):
                return self._index.get((arity, position, element), [])
        return None
