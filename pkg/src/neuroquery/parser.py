"""Textual query language: lexer, recursive-descent parser and renderer.

Surface syntax (whitespace and newlines between tokens are insignificant,
``#`` comments run to end of line)::

    program := stmt*
    stmt    := "fact" "(" tuple ")" | "rule" "(" clause ("," clause)* ")"
             | "search" "(" clause ("," clause)* ")"
    clause  := pattern
             | "op_filter" "(" expr ")"
             | "bm25_match" "(" pattern "," string "," int ")"
             | "neural_match" "(" pattern "," string "," int ")"
             | "neural_extract" "(" var "," pattern "," string "," int ")"
    pattern := term "." ident "==" term | "(" term ("," term)+ ")"
    term    := var | string | number | ident | "(" term ("," term)* ")"

Variables are written ``?name`` and are implicitly declared at first use.
The dot form ``s.p == v`` is sugar for the 3-tuple pattern ``(s, p, v)``.
A quoted literal in term position is parsed with the same precedence rule
as a CSV cell, so ``"no"`` denotes the identifier ``no`` and ``"39.36"``
the number 39.36, keeping query constants aligned with loaded data.

Filter expressions support ``abs(x)``, unary minus, ``+ - * /``, the six
comparisons, and ``not`` / ``and`` / ``or``, binding in that order from
tightest to loosest.
"""

import json
from dataclasses import dataclass

from .errors import ParseError, TypeErrorStatic
from .nodes import (Abs, And, Arith, Bm25Clause, Compare, FactStmt, FilterClause,
                    FilterExpr, Lit, Neg, NeuralExtractClause, NeuralMatchClause,
                    Not, Or, PatternClause, Program, Rule, RuleStmt, SearchStmt,
                    VarRef)
from .terms import IDENT_RE, Ident, Term, Var, is_number, parse_value, term_to_json

_CLAUSE_KEYWORDS = ("op_filter", "bm25_match", "neural_match", "neural_extract")
_STMT_KEYWORDS = ("fact", "rule", "search")
_COMPARE_OPS = ("<", "<=", ">", ">=", "==", "!=")

_RUN_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")
_RUN_CONT = _RUN_START | {"-"}
_ESCAPES = {"\\": "\\", '"': '"', "'": "'", "n": "\n", "t": "\t", "r": "\r"}
_UNESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


@dataclass(frozen=True)
class Token:
    kind: str  # LPAREN RPAREN COMMA DOT OP STRING INT FLOAT IDENT VAR EOF
    value: object
    line: int
    column: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def error(expected: str, found: str = ""):
        raise ParseError(line, col, expected, found)

    def push(kind: str, value, start_col: int):
        tokens.append(Token(kind, value, line, start_col))

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start = col
        if c in "(),.":
            kind = {"(": "LPAREN", ")": "RPAREN", ",": "COMMA", ".": "DOT"}[c]
            push(kind, c, start)
            i += 1
            col += 1
            continue
        if c in "+-*/":
            push("OP", c, start)
            i += 1
            col += 1
            continue
        if c in "<>":
            if i + 1 < n and text[i + 1] == "=":
                push("OP", c + "=", start)
                i += 2
                col += 2
            else:
                push("OP", c, start)
                i += 1
                col += 1
            continue
        if c in "=!":
            if i + 1 < n and text[i + 1] == "=":
                push("OP", c + "=", start)
                i += 2
                col += 2
            else:
                error("'=='" if c == "=" else "'!='", repr(c))
            continue
        if c in "\"'":
            quote = c
            i += 1
            col += 1
            chars: list[str] = []
            while True:
                if i >= n or text[i] == "\n":
                    error("closing quote", "end of line")
                ch = text[i]
                if ch == quote:
                    i += 1
                    col += 1
                    break
                if ch == "\\":
                    if i + 1 >= n or text[i + 1] not in _ESCAPES:
                        error("valid escape sequence")
                    chars.append(_ESCAPES[text[i + 1]])
                    i += 2
                    col += 2
                    continue
                chars.append(ch)
                i += 1
                col += 1
            push("STRING", "".join(chars), start)
            continue
        if c == "?":
            i += 1
            col += 1
            j = i
            while j < n and text[j] in _RUN_CONT:
                j += 1
            if j == i or text[i] not in _RUN_START:
                error("variable name after '?'")
            push("VAR", text[i:j], start)
            col += j - i
            i = j
            continue
        if c in _RUN_START:
            j = i
            while j < n and text[j] in _RUN_CONT:
                j += 1
            run = text[i:j]
            if run.isdigit():
                # a dot directly followed by a digit continues a float literal
                if j + 1 < n and text[j] == "." and text[j + 1].isdigit():
                    j += 1
                    k = j
                    while k < n and text[k].isdigit():
                        k += 1
                    push("FLOAT", float(text[i:k]), start)
                    col += k - i
                    i = k
                    continue
                push("INT", int(run), start)
            else:
                push("IDENT", run, start)
            col += j - i
            i = j
            continue
        error("a token", repr(c))
    tokens.append(Token("EOF", None, line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    # -- token plumbing ------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != "EOF":
            self.pos += 1
        return token

    def expect(self, kind: str, what: str) -> Token:
        token = self.peek()
        if token.kind != kind:
            self.fail(what, token)
        return self.advance()

    def fail(self, expected: str, token: Token | None = None):
        token = token or self.peek()
        found = token.kind if token.value is None else repr(token.value)
        raise ParseError(token.line, token.column, expected, found)

    # -- grammar ---------------------------------------------------------

    def program(self) -> Program:
        statements = []
        while self.peek().kind != "EOF":
            statements.append(self.statement())
        return Program(tuple(statements))

    def statement(self):
        token = self.peek()
        if token.kind != "IDENT" or token.value not in _STMT_KEYWORDS:
            self.fail("'fact', 'rule' or 'search'", token)
        keyword = self.advance().value
        self.expect("LPAREN", "'('")
        if keyword == "fact":
            fact = self.term()
            if not isinstance(fact, tuple):
                self.fail("a tuple")
            self.expect("RPAREN", "')'")
            return FactStmt(fact)
        clauses = self.clause_list()
        self.expect("RPAREN", "')'")
        if keyword == "rule":
            head = clauses[0]
            if not isinstance(head, PatternClause):
                self.fail("a pattern clause as the rule head")
            return RuleStmt(Rule(head=head.pattern, body=tuple(clauses[1:])))
        return SearchStmt(tuple(clauses))

    def clause_list(self) -> list:
        clauses = [self.clause()]
        while self.peek().kind == "COMMA":
            self.advance()
            if self.peek().kind == "RPAREN":  # trailing comma, as in listings
                break
            clauses.append(self.clause())
        return clauses

    def clause(self):
        token = self.peek()
        if token.kind == "IDENT" and token.value in _CLAUSE_KEYWORDS \
                and self.peek(1).kind == "LPAREN":
            keyword = self.advance().value
            self.expect("LPAREN", "'('")
            if keyword == "op_filter":
                expr = self.expr()
                self.expect("RPAREN", "')'")
                return FilterClause(expr)
            if keyword == "neural_extract":
                var_token = self.expect("VAR", "an answer variable")
                self.expect("COMMA", "','")
                pattern = self.doc_pattern(keyword)
                self.expect("COMMA", "','")
                query = self.expect("STRING", "a query string").value
                self.expect("COMMA", "','")
                k = self.scored_k()
                self.expect("RPAREN", "')'")
                return NeuralExtractClause(Var(var_token.value), pattern, query, k)
            pattern = self.doc_pattern(keyword)
            self.expect("COMMA", "','")
            query = self.expect("STRING", "a query string").value
            self.expect("COMMA", "','")
            k = self.scored_k()
            self.expect("RPAREN", "')'")
            if keyword == "bm25_match":
                return Bm25Clause(pattern, query, k)
            return NeuralMatchClause(pattern, query, k)
        return PatternClause(self.pattern())

    def scored_k(self) -> int:
        token = self.expect("INT", "a positive integer k")
        if token.value < 1:
            raise ParseError(token.line, token.column, "k >= 1", str(token.value))
        return token.value

    def doc_pattern(self, keyword: str) -> tuple:
        token = self.peek()
        pattern = self.pattern()
        if len(pattern) != 3 or not isinstance(pattern[2], Var):
            raise ParseError(token.line, token.column,
                             f"a 3-element pattern with a variable document slot in {keyword}")
        return pattern

    def pattern(self) -> tuple:
        token = self.peek()
        subject = self.term()
        if self.peek().kind == "DOT":
            self.advance()
            prop = self.expect("IDENT", "a property name").value
            op = self.expect("OP", "'=='")
            if op.value != "==":
                raise ParseError(op.line, op.column, "'=='", repr(op.value))
            value = self.term()
            return (subject, Ident(prop), value)
        if not isinstance(subject, tuple) or len(subject) < 2:
            self.fail("a dotted pattern or a tuple of arity >= 2", token)
        return subject

    def term(self) -> Term:
        token = self.peek()
        if token.kind == "VAR":
            self.advance()
            return Var(token.value)
        if token.kind == "STRING":
            self.advance()
            return parse_value(token.value)
        if token.kind == "INT" or token.kind == "FLOAT":
            self.advance()
            return token.value
        if token.kind == "OP" and token.value == "-":
            nxt = self.peek(1)
            if nxt.kind in ("INT", "FLOAT"):
                self.advance()
                self.advance()
                return -nxt.value
            self.fail("a number after '-'", token)
        if token.kind == "IDENT":
            self.advance()
            return Ident(token.value)
        if token.kind == "LPAREN":
            self.advance()
            elements = [self.term()]
            while self.peek().kind == "COMMA":
                self.advance()
                elements.append(self.term())
            self.expect("RPAREN", "')'")
            return tuple(elements)
        self.fail("a term")

    # -- filter expressions ----------------------------------------------

    def expr(self) -> FilterExpr:
        return self.or_expr()

    def or_expr(self) -> FilterExpr:
        left = self.and_expr()
        while self._at_keyword("or"):
            self.advance()
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> FilterExpr:
        left = self.not_expr()
        while self._at_keyword("and"):
            self.advance()
            left = And(left, self.not_expr())
        return left

    def not_expr(self) -> FilterExpr:
        if self._at_keyword("not"):
            token = self.advance()
            operand = self.not_expr()
            _check_boolean_operand(operand, token)
            return Not(operand)
        return self.comparison()

    def comparison(self) -> FilterExpr:
        left = self.additive()
        token = self.peek()
        if token.kind == "OP" and token.value in _COMPARE_OPS:
            self.advance()
            right = self.additive()
            _check_compare(token.value, left, right, token)
            return Compare(token.value, left, right)
        return left

    def additive(self) -> FilterExpr:
        left = self.multiplicative()
        while self.peek().kind == "OP" and self.peek().value in ("+", "-"):
            token = self.advance()
            right = self.multiplicative()
            _check_arith(left, right, token)
            left = Arith(token.value, left, right)
        return left

    def multiplicative(self) -> FilterExpr:
        left = self.unary()
        while self.peek().kind == "OP" and self.peek().value in ("*", "/"):
            token = self.advance()
            right = self.unary()
            _check_arith(left, right, token)
            left = Arith(token.value, left, right)
        return left

    def unary(self) -> FilterExpr:
        token = self.peek()
        if token.kind == "OP" and token.value == "-":
            self.advance()
            operand = self.unary()
            if isinstance(operand, Lit) and is_number(operand.value):
                return Lit(-operand.value)
            _check_numeric_operand(operand, token)
            return Neg(operand)
        if self._at_keyword("abs"):
            self.advance()
            self.expect("LPAREN", "'('")
            operand = self.expr()
            self.expect("RPAREN", "')'")
            _check_numeric_operand(operand, token)
            return Abs(operand)
        return self.atom()

    def atom(self) -> FilterExpr:
        token = self.peek()
        if token.kind in ("INT", "FLOAT"):
            self.advance()
            return Lit(token.value)
        if token.kind == "STRING":
            self.advance()
            return Lit(parse_value(token.value))
        if token.kind == "VAR":
            self.advance()
            return VarRef(Var(token.value))
        if token.kind == "LPAREN":
            self.advance()
            inner = self.expr()
            self.expect("RPAREN", "')'")
            return inner
        self.fail("a number, string, variable or '('")

    def _at_keyword(self, word: str) -> bool:
        token = self.peek()
        return token.kind == "IDENT" and token.value == word


# -- static literal kind checks ----------------------------------------------

def _lit_kind(expr: FilterExpr) -> str | None:
    if isinstance(expr, Lit):
        if is_number(expr.value):
            return "number"
        if isinstance(expr.value, Ident):
            return "identifier"
        return "text"
    return None


def _check_numeric_operand(expr: FilterExpr, token: Token):
    kind = _lit_kind(expr)
    if kind is not None and kind != "number":
        raise TypeErrorStatic(
            f"{token.line}:{token.column}: arithmetic over a {kind} literal")


def _check_arith(left: FilterExpr, right: FilterExpr, token: Token):
    _check_numeric_operand(left, token)
    _check_numeric_operand(right, token)


def _check_compare(op: str, left: FilterExpr, right: FilterExpr, token: Token):
    lk, rk = _lit_kind(left), _lit_kind(right)
    if op in ("==", "!="):
        if lk is not None and rk is not None and lk != rk:
            raise TypeErrorStatic(
                f"{token.line}:{token.column}: {op} between {lk} and {rk} literals")
        return
    for kind in (lk, rk):
        if kind is not None and kind != "number":
            raise TypeErrorStatic(
                f"{token.line}:{token.column}: ordered comparison over a {kind} literal")


def _check_boolean_operand(expr: FilterExpr, token: Token):
    if isinstance(expr, Lit):
        raise TypeErrorStatic(
            f"{token.line}:{token.column}: boolean operator over a literal")


# -- public API ---------------------------------------------------------------

def parse_program(text: str) -> Program:
    """Parse zero or more statements; empty input yields an empty program."""
    parser = _Parser(text)
    return parser.program()


def parse_filter_expr(text: str) -> FilterExpr:
    parser = _Parser(text)
    expr = parser.expr()
    parser.expect("EOF", "end of input")
    return expr


def balanced(text: str) -> bool:
    """True when every opened parenthesis is closed (quote-aware).

    Used by the interactive session to decide when a multi-line statement
    is complete.
    """
    depth = 0
    quote = None
    skip = False
    for ch in text:
        if skip:
            skip = False
            continue
        if quote is not None:
            if ch == "\\":
                skip = True
            elif ch == quote:
                quote = None
            continue
        if ch in "\"'":
            quote = ch
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
    return depth == 0 and quote is None


# -- rendering ---------------------------------------------------------------

_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_CMP, _PREC_ADD, _PREC_MUL, _PREC_UNARY = range(7)


def _render_string(value: str) -> str:
    body = "".join(_UNESCAPES.get(ch, ch) for ch in value)
    return f'"{body}"'


def render_term(term: Term) -> str:
    if isinstance(term, Var):
        return f"?{term.name}"
    if isinstance(term, Ident):
        name = term.name
        if (IDENT_RE.match(name) and name[0] in _RUN_START
                and not isinstance(parse_value(name), (int, float))):
            return name
        if isinstance(parse_value(name), Ident):
            return _render_string(name)
        raise ValueError(f"identifier {name!r} has no textual form")
    if isinstance(term, bool):
        raise ValueError("booleans are not terms")
    if isinstance(term, int):
        return str(term)
    if isinstance(term, float):
        text = repr(term)
        if "e" in text or "E" in text or "inf" in text or "nan" in text:
            raise ValueError(f"float {term!r} has no textual form")
        return text
    if isinstance(term, str):
        if not isinstance(parse_value(term), str):
            raise ValueError(f"text {term!r} would re-parse as another kind")
        return _render_string(term)
    if isinstance(term, tuple):
        return "(" + ", ".join(render_term(t) for t in term) + ")"
    raise TypeError(f"not a term: {term!r}")


def render_expr(expr: FilterExpr, parent_prec: int = -1, right_side: bool = False) -> str:
    prec, text = _render_expr(expr)
    if prec < parent_prec or (prec == parent_prec and right_side):
        return f"({text})"
    return text


def _render_expr(expr: FilterExpr) -> tuple[int, str]:
    if isinstance(expr, Lit):
        if isinstance(expr.value, Ident):
            # expression atoms have no bare-identifier form; quote it
            if not isinstance(parse_value(expr.value.name), Ident):
                raise ValueError(f"identifier {expr.value.name!r} has no textual form")
            return _PREC_UNARY + 1, _render_string(expr.value.name)
        if isinstance(expr.value, str):
            return _PREC_UNARY + 1, render_term(expr.value)
        value = expr.value
        if value < 0:
            return _PREC_UNARY, render_term(value)
        return _PREC_UNARY + 1, render_term(value)
    if isinstance(expr, VarRef):
        return _PREC_UNARY + 1, f"?{expr.var.name}"
    if isinstance(expr, Abs):
        return _PREC_UNARY, f"abs({render_expr(expr.operand)})"
    if isinstance(expr, Neg):
        return _PREC_UNARY, f"-{render_expr(expr.operand, _PREC_UNARY)}"
    if isinstance(expr, Arith):
        prec = _PREC_MUL if expr.op in ("*", "/") else _PREC_ADD
        left = render_expr(expr.left, prec)
        right = render_expr(expr.right, prec, right_side=True)
        return prec, f"{left} {expr.op} {right}"
    if isinstance(expr, Compare):
        left = render_expr(expr.left, _PREC_CMP)
        right = render_expr(expr.right, _PREC_CMP, right_side=True)
        return _PREC_CMP, f"{left} {expr.op} {right}"
    if isinstance(expr, Not):
        return _PREC_NOT, f"not {render_expr(expr.operand, _PREC_NOT)}"
    if isinstance(expr, And):
        left = render_expr(expr.left, _PREC_AND)
        right = render_expr(expr.right, _PREC_AND, right_side=True)
        return _PREC_AND, f"{left} and {right}"
    if isinstance(expr, Or):
        left = render_expr(expr.left, _PREC_OR)
        right = render_expr(expr.right, _PREC_OR, right_side=True)
        return _PREC_OR, f"{left} or {right}"
    raise TypeError(f"not a filter expression: {expr!r}")


def render_clause(clause) -> str:
    if isinstance(clause, PatternClause):
        return render_term(clause.pattern)
    if isinstance(clause, FilterClause):
        return f"op_filter({render_expr(clause.expr)})"
    if isinstance(clause, Bm25Clause):
        return (f"bm25_match({render_term(clause.pattern)}, "
                f"{_render_string(clause.query)}, {clause.k})")
    if isinstance(clause, NeuralMatchClause):
        return (f"neural_match({render_term(clause.pattern)}, "
                f"{_render_string(clause.query)}, {clause.k})")
    if isinstance(clause, NeuralExtractClause):
        return (f"neural_extract(?{clause.answer_var.name}, "
                f"{render_term(clause.pattern)}, "
                f"{_render_string(clause.query)}, {clause.k})")
    raise TypeError(f"not a clause: {clause!r}")


def render(node) -> str:
    """Canonical text for an AST node; ``parse(render(x))`` equals ``x``."""
    if isinstance(node, Program):
        return "\n".join(render(s) for s in node.statements)
    if isinstance(node, FactStmt):
        return f"fact({render_term(node.fact)})"
    if isinstance(node, RuleStmt):
        parts = [render_term(node.rule.head)]
        parts += [render_clause(c) for c in node.rule.body]
        return "rule(" + ", ".join(parts) + ")"
    if isinstance(node, SearchStmt):
        return "search(" + ", ".join(render_clause(c) for c in node.clauses) + ")"
    if isinstance(node, dict):
        return render_record(node)
    return render_clause(node)


def render_record(record: dict) -> str:
    """One result frame as a JSON line, keys in first-binding order."""
    return json.dumps({key: term_to_json(value) for key, value in record.items()},
                      ensure_ascii=False)
