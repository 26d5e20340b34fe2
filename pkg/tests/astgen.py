"""Random AST generator for render/parse round-trip properties.

Generates programs out of the same constructors the parser produces, which
keeps every generated tree representable in the surface syntax (the syntax
distinguishes value kinds lexically, so e.g. an identifier spelled like a
number cannot be written down and is never generated).
"""

import random

from neuroquery.nodes import (Abs, And, Arith, Bm25Clause, Compare, FactStmt,
                              FilterClause, Lit, Neg, NeuralExtractClause,
                              NeuralMatchClause, Not, Or, PatternClause, Program,
                              Rule, RuleStmt, SearchStmt, VarRef)
from neuroquery.terms import Ident, Var

_IDENTS = ["price", "stars", "title", "brand", "B00001P4ZH", "B000AJIF4E",
           "total_reviews", "review", "no", "yes", "True", "x9", "item-code",
           "a_b", "r2d2"]
_TEXTS = ["koss portapro headphones with case", "how is the bass?",
          "solid value!", "line\nbreak", 'quote " inside', "it's fine",
          "comma, separated", "  padded  "]
_VARS = ["asin", "price", "title", "v", "x", "y", "review_text", "answers"]
_CMP = ["<", "<=", ">", ">=", "==", "!="]


def _number(rng: random.Random):
    if rng.random() < 0.5:
        return rng.randint(-9999, 99999)
    return round(rng.uniform(-999, 999), rng.randint(0, 3))


def _atom_term(rng: random.Random):
    roll = rng.random()
    if roll < 0.3:
        return Ident(rng.choice(_IDENTS))
    if roll < 0.5:
        return Var(rng.choice(_VARS))
    if roll < 0.75:
        return _number(rng)
    return rng.choice(_TEXTS)


def term(rng: random.Random, depth: int = 2):
    if depth > 0 and rng.random() < 0.25:
        return tuple(term(rng, depth - 1) for _ in range(rng.randint(1, 3)))
    return _atom_term(rng)


def pattern(rng: random.Random):
    return tuple(term(rng, 1) for _ in range(rng.randint(2, 4)))


def doc_pattern(rng: random.Random):
    return (_atom_term(rng), Ident(rng.choice(_IDENTS)), Var(rng.choice(_VARS)))


def _numeric_expr(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.4:
        if rng.random() < 0.5:
            return Lit(_number(rng))
        return VarRef(Var(rng.choice(_VARS)))
    roll = rng.random()
    if roll < 0.2:
        return Abs(_numeric_expr(rng, depth - 1))
    if roll < 0.3:
        inner = _numeric_expr(rng, depth - 1)
        if isinstance(inner, Lit):  # the parser folds -literal
            return Lit(_number(rng))
        return Neg(inner)
    return Arith(rng.choice(["+", "-", "*", "/"]),
                 _numeric_expr(rng, depth - 1), _numeric_expr(rng, depth - 1))


def _comparison(rng: random.Random, depth: int):
    op = rng.choice(_CMP)
    if op in ("==", "!=") and rng.random() < 0.3:
        left = VarRef(Var(rng.choice(_VARS)))
        choice = rng.random()
        if choice < 0.4:
            right = Lit(Ident(rng.choice(_IDENTS)))
        elif choice < 0.7:
            right = Lit(rng.choice(_TEXTS))
        else:
            right = Lit(_number(rng))
        return Compare(op, left, right)
    return Compare(op, _numeric_expr(rng, depth), _numeric_expr(rng, depth))


def filter_expr(rng: random.Random, depth: int = 2):
    if depth == 0 or rng.random() < 0.45:
        return _comparison(rng, depth)
    roll = rng.random()
    if roll < 0.3:
        return Not(filter_expr(rng, depth - 1))
    if roll < 0.65:
        return And(filter_expr(rng, depth - 1), filter_expr(rng, depth - 1))
    return Or(filter_expr(rng, depth - 1), filter_expr(rng, depth - 1))


def clause(rng: random.Random):
    roll = rng.random()
    if roll < 0.4:
        return PatternClause(pattern(rng))
    if roll < 0.6:
        return FilterClause(filter_expr(rng))
    if roll < 0.75:
        return Bm25Clause(doc_pattern(rng), rng.choice(_TEXTS), rng.randint(1, 99))
    if roll < 0.9:
        return NeuralMatchClause(doc_pattern(rng), rng.choice(_TEXTS),
                                 rng.randint(1, 99))
    return NeuralExtractClause(Var(rng.choice(_VARS)), doc_pattern(rng),
                               rng.choice(_TEXTS), rng.randint(1, 9))


def statement(rng: random.Random):
    roll = rng.random()
    if roll < 0.25:
        return FactStmt(tuple(term(rng, 1) for _ in range(rng.randint(1, 4))))
    if roll < 0.45:
        return RuleStmt(Rule(head=pattern(rng),
                             body=tuple(clause(rng)
                                        for _ in range(rng.randint(1, 3)))))
    return SearchStmt(tuple(clause(rng) for _ in range(rng.randint(1, 5))))


def program(rng: random.Random):
    return Program(tuple(statement(rng) for _ in range(rng.randint(0, 4))))
