"""AST nodes for the query language: statements, clauses and filter expressions."""

from dataclasses import dataclass
from typing import Union

from .terms import Term, Var


# --- filter expressions ---------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: Term  # number, text or identifier


@dataclass(frozen=True)
class VarRef:
    var: Var


@dataclass(frozen=True)
class Abs:
    operand: "FilterExpr"


@dataclass(frozen=True)
class Neg:
    operand: "FilterExpr"


@dataclass(frozen=True)
class Arith:
    op: str  # one of + - * /
    left: "FilterExpr"
    right: "FilterExpr"


@dataclass(frozen=True)
class Compare:
    op: str  # one of < <= > >= == !=
    left: "FilterExpr"
    right: "FilterExpr"


@dataclass(frozen=True)
class Not:
    operand: "FilterExpr"


@dataclass(frozen=True)
class And:
    left: "FilterExpr"
    right: "FilterExpr"


@dataclass(frozen=True)
class Or:
    left: "FilterExpr"
    right: "FilterExpr"


FilterExpr = Union[Lit, VarRef, Abs, Neg, Arith, Compare, Not, And, Or]


# --- clauses and statements -----------------------------------------------

@dataclass(frozen=True)
class PatternClause:
    pattern: tuple


@dataclass(frozen=True)
class FilterClause:
    expr: FilterExpr


@dataclass(frozen=True)
class Bm25Clause:
    pattern: tuple  # 3-tuple whose third element is the document-text variable
    query: str
    k: int


@dataclass(frozen=True)
class NeuralMatchClause:
    pattern: tuple
    query: str
    k: int


@dataclass(frozen=True)
class NeuralExtractClause:
    answer_var: Var
    pattern: tuple
    query: str
    k: int


Clause = Union[PatternClause, FilterClause, Bm25Clause, NeuralMatchClause, NeuralExtractClause]

SCORED_CLAUSES = (Bm25Clause, NeuralMatchClause, NeuralExtractClause)


@dataclass(frozen=True)
class Rule:
    head: tuple
    body: tuple  # of Clause, non-empty


@dataclass(frozen=True)
class FactStmt:
    fact: tuple


@dataclass(frozen=True)
class RuleStmt:
    rule: Rule


@dataclass(frozen=True)
class SearchStmt:
    clauses: tuple  # of Clause, non-empty


Statement = Union[FactStmt, RuleStmt, SearchStmt]


@dataclass(frozen=True)
class Program:
    statements: tuple  # of Statement


# --- structural helpers ----------------------------------------------------

def clause_variables(clause: Clause):
    """Yield the variables a clause mentions, in source order."""
    from .terms import variables_in

    if isinstance(clause, PatternClause):
        yield from variables_in(clause.pattern)
    elif isinstance(clause, FilterClause):
        yield from expr_variables(clause.expr)
    elif isinstance(clause, (Bm25Clause, NeuralMatchClause)):
        yield from variables_in(clause.pattern)
    elif isinstance(clause, NeuralExtractClause):
        yield clause.answer_var
        yield from variables_in(clause.pattern)


def expr_variables(expr: FilterExpr):
    if isinstance(expr, VarRef):
        yield expr.var
    elif isinstance(expr, (Abs, Neg, Not)):
        yield from expr_variables(expr.operand)
    elif isinstance(expr, (Arith, Compare, And, Or)):
        yield from expr_variables(expr.left)
        yield from expr_variables(expr.right)


def rename_expr(expr: FilterExpr, mapping: dict, fresh) -> FilterExpr:
    from .unify import rename_term

    if isinstance(expr, Lit):
        return expr
    if isinstance(expr, VarRef):
        return VarRef(rename_term(expr.var, mapping, fresh))
    if isinstance(expr, Abs):
        return Abs(rename_expr(expr.operand, mapping, fresh))
    if isinstance(expr, Neg):
        return Neg(rename_expr(expr.operand, mapping, fresh))
    if isinstance(expr, Not):
        return Not(rename_expr(expr.operand, mapping, fresh))
    if isinstance(expr, Arith):
        return Arith(expr.op, rename_expr(expr.left, mapping, fresh),
                     rename_expr(expr.right, mapping, fresh))
    if isinstance(expr, Compare):
        return Compare(expr.op, rename_expr(expr.left, mapping, fresh),
                       rename_expr(expr.right, mapping, fresh))
    if isinstance(expr, And):
        return And(rename_expr(expr.left, mapping, fresh),
                   rename_expr(expr.right, mapping, fresh))
    if isinstance(expr, Or):
        return Or(rename_expr(expr.left, mapping, fresh),
                  rename_expr(expr.right, mapping, fresh))
    raise TypeError(f"not a filter expression: {expr!r}")


def rename_clause(clause: Clause, mapping: dict, fresh) -> Clause:
    from .unify import rename_term

    if isinstance(clause, PatternClause):
        return PatternClause(rename_term(clause.pattern, mapping, fresh))
    if isinstance(clause, FilterClause):
        return FilterClause(rename_expr(clause.expr, mapping, fresh))
    if isinstance(clause, Bm25Clause):
        return Bm25Clause(rename_term(clause.pattern, mapping, fresh), clause.query, clause.k)
    if isinstance(clause, NeuralMatchClause):
        return NeuralMatchClause(rename_term(clause.pattern, mapping, fresh), clause.query, clause.k)
    if isinstance(clause, NeuralExtractClause):
        return NeuralExtractClause(rename_term(clause.answer_var, mapping, fresh),
                                   rename_term(clause.pattern, mapping, fresh),
                                   clause.query, clause.k)
    raise TypeError(f"not a clause: {clause!r}")
