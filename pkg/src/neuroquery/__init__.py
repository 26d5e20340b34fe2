"""Neuro-symbolic query engine over an in-memory n-tuple knowledge base.

Logical unification drives pattern clauses; bm25_match, neural_match and
neural_extract clauses extend the same frame-stream model with sparse and
neural retrieval; a textual query language and a pluggable inference
gateway tie the pieces together.
"""

from .bm25 import Bm25Params, build_index, tokenize_stem, top_k
from .config import EngineConfig, load_config
from .engine import Engine, QueryResult, RuleStore, search
from .errors import NeuroQueryError
from .gateway import (AnswerSpan, FallbackGateway, GatewayConfig, RemoteGateway,
                      ScoredHit, make_gateway, translate_and_parse)
from .harness import (DatasetBundle, QAExample, TranslationPair, load_dataset,
                      load_retrieval_dump, run_query_task, run_translation_task,
                      split_of)
from .kb import KnowledgeBase
from .metrics import (MetricReport, bleu_corpus, em_score, f1_score,
                      normalize_answer, recall_at_k)
from .nodes import (Bm25Clause, FilterClause, NeuralExtractClause,
                    NeuralMatchClause, PatternClause, Program, Rule, SearchStmt)
from .parser import parse_filter_expr, parse_program, render, render_record
from .terms import Ident, Var
from .unify import EMPTY_FRAME, Frame, resolve, standardize_apart, substitute, unify

__version__ = "0.1.0"

__all__ = [
    "AnswerSpan", "Bm25Clause", "Bm25Params", "DatasetBundle", "EMPTY_FRAME",
    "Engine", "EngineConfig", "FallbackGateway", "FilterClause", "Frame",
    "GatewayConfig", "Ident", "KnowledgeBase", "MetricReport",
    "NeuralExtractClause", "NeuralMatchClause", "NeuroQueryError",
    "PatternClause", "Program", "QAExample", "QueryResult", "RemoteGateway",
    "Rule", "RuleStore", "ScoredHit", "SearchStmt", "TranslationPair", "Var",
    "bleu_corpus", "build_index", "em_score", "f1_score", "load_config",
    "load_dataset", "load_retrieval_dump", "make_gateway", "normalize_answer",
    "parse_filter_expr",
    "parse_program", "recall_at_k", "render", "render_record", "resolve",
    "run_query_task", "run_translation_task", "search", "split_of",
    "standardize_apart", "substitute", "tokenize_stem", "top_k",
    "translate_and_parse", "unify",
]
