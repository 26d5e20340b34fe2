"""Query evaluation: search conjunctions as frame-stream transformers.

A search folds its clauses left to right over a stream of frames, starting
from the single empty frame. Pattern clauses extend frames against the
knowledge base first and registered rules second; filter clauses drop
frames; the scored clauses (bm25, neural match, neural extract) collect
candidate documents from their sub-pattern, rank them, and keep only the
frames whose document survived, reordering survivors best-first.

Top-k for every scored clause counts distinct documents, not frames, and
ranking ties break by ascending document key, so results are deterministic
byte for byte. One query evaluates sequentially; many queries may share an
immutable knowledge base concurrently.
"""

from dataclasses import dataclass, field

from . import bm25
from .errors import (GatewayUnavailable, InvalidRule, RuleDepthExceeded,
                     VariableAlreadyBound)
from .filters import eval_filter_expr
from .kb import KnowledgeBase
from .nodes import (Bm25Clause, FactStmt, FilterClause, NeuralExtractClause,
                    NeuralMatchClause, PatternClause, Program, Rule, RuleStmt,
                    SearchStmt)
from .terms import Var, is_ground, term_key, text_of, variables_in
from .unify import EMPTY_FRAME, Frame, FreshNames, standardize_apart, substitute, unify


@dataclass
class RuleStore:
    """Registered rules in definition order, indexed by head shape."""

    rules: list = field(default_factory=list)

    def add(self, rule: Rule) -> None:
        """Register a rule; duplicates are kept. Empty bodies are invalid."""
        if not rule.body:
            raise InvalidRule("a rule needs at least one body clause")
        if not isinstance(rule.head, tuple) or not rule.head:
            raise InvalidRule("a rule head must be a tuple pattern")
        self.rules.append(rule)

    def candidates(self, pattern: tuple):
        """Rules whose head could match the pattern, in definition order."""
        arity = len(pattern)
        second = pattern[1] if arity >= 2 else None
        for rule in self.rules:
            if len(rule.head) != arity:
                continue
            if arity >= 2 and is_ground(second) and is_ground(rule.head[1]) \
                    and unify(second, rule.head[1], EMPTY_FRAME) is None:
                continue
            yield rule

    def __len__(self) -> int:
        return len(self.rules)


class QueryResult:
    """Ordered result frames of one search."""

    def __init__(self, frames: list):
        self.frames = frames

    def records(self) -> list:
        """One dict per frame, ``?name`` keys in first-binding order."""
        out = []
        for frame in self.frames:
            record = {}
            for var in frame:
                if "#" in var.name:  # rule-internal variable
                    continue
                record[f"?{var.name}"] = substitute(var, frame)
            out.append(record)
        return out

    def __len__(self) -> int:
        return len(self.frames)


class Engine:
    def __init__(self, kb: KnowledgeBase, gateway=None, rules: RuleStore | None = None,
                 config=None):
        from .config import EngineConfig

        self.kb = kb
        self.gateway = gateway
        self.rules = rules if rules is not None else RuleStore()
        self.config = config if config is not None else EngineConfig()
        self._fresh = FreshNames()

    # -- public entry points ------------------------------------------------

    def search(self, clauses) -> QueryResult:
        if not clauses:
            raise ValueError("a search needs at least one clause")
        frames = [EMPTY_FRAME]
        for clause in clauses:
            frames = self._eval_clause(clause, frames, depth=0)
        return QueryResult(frames)

    def define_rule(self, head: tuple, body) -> None:
        self.rules.add(Rule(head=head, body=tuple(body)))

    def run_program(self, program: Program) -> list:
        """Execute statements in order; returns one QueryResult per search."""
        results = []
        for statement in program.statements:
            if isinstance(statement, FactStmt):
                self.kb.assert_fact(statement.fact)
            elif isinstance(statement, RuleStmt):
                self.rules.add(statement.rule)
            elif isinstance(statement, SearchStmt):
                results.append(self.search(statement.clauses))
            else:
                raise TypeError(f"not a statement: {statement!r}")
        return results

    # -- clause dispatch ------------------------------------------------------

    def _eval_clause(self, clause, frames: list, depth: int) -> list:
        if isinstance(clause, PatternClause):
            return list(self._eval_pattern(clause.pattern, frames, depth))
        if isinstance(clause, FilterClause):
            return [f for f in frames if eval_filter_expr(clause.expr, f)]
        if isinstance(clause, Bm25Clause):
            return self._eval_bm25(clause, frames, depth)
        if isinstance(clause, NeuralMatchClause):
            return self._eval_neural_match(clause, frames, depth)
        if isinstance(clause, NeuralExtractClause):
            return self._eval_neural_extract(clause, frames, depth)
        raise TypeError(f"not a clause: {clause!r}")

    # -- pattern and rules ----------------------------------------------------

    def _eval_pattern(self, pattern: tuple, frames: list, depth: int):
        for frame in frames:
            for fact in self.kb.facts_matching(pattern, frame):
                extended = unify(pattern, fact, frame)
                if extended is not None:
                    yield extended
            yield from self._resolve_rules(pattern, frame, depth)

    def _resolve_rules(self, pattern: tuple, frame: Frame, depth: int):
        if not self.rules.rules:
            return
        resolved = substitute(pattern, frame)
        for rule in self.rules.candidates(resolved):
            renamed = standardize_apart(rule, self._fresh)
            unified = unify(resolved, renamed.head, frame)
            if unified is None:
                continue
            # raise only when a matching rule would actually be truncated;
            # fact-only derivations at the limit stay sound
            if depth + 1 > self.config.max_rule_depth:
                raise RuleDepthExceeded(self.config.max_rule_depth)
            body_frames = [unified]
            for clause in renamed.body:
                body_frames = self._eval_clause(clause, body_frames, depth + 1)
            for result in body_frames:
                yield self._restrict(frame, resolved, result)

    def _restrict(self, caller: Frame, pattern: tuple, result: Frame) -> Frame:
        # keep the caller's bindings plus whatever the rule gave the
        # pattern's own variables; rule-internal variables stay behind
        out = caller
        for var in dict.fromkeys(variables_in(pattern)):
            if var in out:
                continue
            value = substitute(var, result)
            if isinstance(value, Var):
                continue
            out = out.bind(var, value)
        return out

    # -- scored clauses ---------------------------------------------------------

    def _collect_documents(self, pattern: tuple, frames: list, depth: int):
        """Evaluate a scored clause's sub-pattern and gather candidates.

        Returns the extended frames, each tagged with its document pair,
        plus the distinct (doc key, text) pairs in first-seen order. The
        pair, not the key alone, is the scoring unit; a key's rank is its
        best pair.
        """
        tagged = []
        pairs: dict = {}
        for frame in self._eval_pattern(pattern, frames, depth):
            key = substitute(pattern[0], frame)
            text_term = substitute(pattern[2], frame)
            pair = (key, text_of(text_term))
            pairs.setdefault(pair, None)
            tagged.append((frame, pair))
        return tagged, list(pairs)

    @staticmethod
    def _keys_best_first(scored_pairs) -> list:
        """Collapse scored (key, text) pairs to distinct keys, best first.

        ``scored_pairs`` is already ordered by descending score with ties
        broken by ascending pair key.
        """
        seen = {}
        for pair, score in scored_pairs:
            if pair[0] not in seen:
                seen[pair[0]] = score
        return list(seen.items())

    def _keep_frames(self, tagged, kept_scores: dict) -> list:
        survivors = [(frame, pair) for frame, pair in tagged if pair[0] in kept_scores]
        survivors.sort(key=lambda item: (-kept_scores[item[1][0]], term_key(item[1][0])))
        return survivors

    def _eval_bm25(self, clause: Bm25Clause, frames: list, depth: int) -> list:
        tagged, pairs = self._collect_documents(clause.pattern, frames, depth)
        if not pairs:
            return []
        index = bm25.build_index(((pair, pair[1]) for pair in pairs), self.config.bm25)
        hits = bm25.top_k(index, clause.query, k=len(pairs))
        ranked = self._keys_best_first((hit.doc_key, hit.score) for hit in hits)
        kept = dict(ranked[: clause.k])
        return [frame for frame, _ in self._keep_frames(tagged, kept)]

    def _require_gateway(self):
        if self.gateway is None:
            raise GatewayUnavailable("no inference gateway configured")
        return self.gateway

    def _eval_neural_match(self, clause: NeuralMatchClause, frames: list,
                           depth: int) -> list:
        gateway = self._require_gateway()
        tagged, pairs = self._collect_documents(clause.pattern, frames, depth)
        if not pairs:
            return []
        hits = gateway.retrieve(clause.query, [(pair, pair[1]) for pair in pairs],
                                k=len(pairs))
        ranked = self._keys_best_first((hit.doc_key, hit.score) for hit in hits)
        kept = dict(ranked[: clause.k])
        return [frame for frame, _ in self._keep_frames(tagged, kept)]

    def _eval_neural_extract(self, clause: NeuralExtractClause, frames: list,
                             depth: int) -> list:
        gateway = self._require_gateway()
        tagged, pairs = self._collect_documents(clause.pattern, frames, depth)
        if not pairs:
            return []
        spans = gateway.extract(clause.query, [(pair, pair[1]) for pair in pairs],
                                k=clause.k)
        out = []
        answered = set()
        for span in spans:
            record = (span.text, span.score, span.start, span.end, span.doc_key[0])
            answered.add(span.doc_key)
            for frame, pair in tagged:
                if pair != span.doc_key:
                    continue
                if clause.answer_var in frame:
                    raise VariableAlreadyBound(clause.answer_var.name)
                out.append(frame.bind(clause.answer_var, record))
        if self.config.keep_unanswered:
            out.extend(frame for frame, pair in tagged if pair not in answered)
        return out


def search(clauses, kb: KnowledgeBase, gateway=None, rules: RuleStore | None = None,
           config=None) -> QueryResult:
    """Evaluate one conjunction of clauses against a knowledge base."""
    return Engine(kb, gateway=gateway, rules=rules, config=config).search(clauses)
