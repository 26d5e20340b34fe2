"""Runtime evaluation of filter expressions against a frame."""

from .errors import FilterTypeError, UnboundVariableInFilter
from .nodes import Abs, And, Arith, Compare, FilterExpr, Lit, Neg, Not, Or, VarRef
from .terms import Ident, Term, is_number
from .unify import Frame, substitute


def _eval_operand(expr: FilterExpr, frame: Frame):
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, VarRef):
        if expr.var not in frame:
            raise UnboundVariableInFilter(expr.var.name)
        return substitute(expr.var, frame)
    if isinstance(expr, Abs):
        return abs(_numeric(_eval_operand(expr.operand, frame), "abs"))
    if isinstance(expr, Neg):
        return -_numeric(_eval_operand(expr.operand, frame), "unary -")
    if isinstance(expr, Arith):
        left = _numeric(_eval_operand(expr.left, frame), expr.op)
        right = _numeric(_eval_operand(expr.right, frame), expr.op)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        if right == 0:
            raise FilterTypeError("division by zero")
        return left / right
    if isinstance(expr, Compare):
        return _compare(expr, frame)
    if isinstance(expr, Not):
        return not _boolean(_eval_operand(expr.operand, frame), "not")
    if isinstance(expr, And):
        return (_boolean(_eval_operand(expr.left, frame), "and")
                and _boolean(_eval_operand(expr.right, frame), "and"))
    if isinstance(expr, Or):
        return (_boolean(_eval_operand(expr.left, frame), "or")
                or _boolean(_eval_operand(expr.right, frame), "or"))
    raise TypeError(f"not a filter expression: {expr!r}")


def _numeric(value, op: str):
    if not is_number(value):
        raise FilterTypeError(f"{op} needs a number, got {_kind(value)} {value!r}")
    return value


def _boolean(value, op: str):
    if not isinstance(value, bool):
        raise FilterTypeError(f"{op} needs a boolean, got {_kind(value)} {value!r}")
    return value


def _kind(value) -> str:
    if isinstance(value, bool):
        return "boolean"
    if is_number(value):
        return "number"
    if isinstance(value, Ident):
        return "identifier"
    if isinstance(value, str):
        return "text"
    if isinstance(value, tuple):
        return "tuple"
    return type(value).__name__


def _compare(expr: Compare, frame: Frame) -> bool:
    left = _eval_operand(expr.left, frame)
    right = _eval_operand(expr.right, frame)
    if expr.op in ("==", "!="):
        equal = _values_equal(left, right)
        return equal if expr.op == "==" else not equal
    left = _numeric(left, expr.op)
    right = _numeric(right, expr.op)
    if expr.op == "<":
        return left < right
    if expr.op == "<=":
        return left <= right
    if expr.op == ">":
        return left > right
    return left >= right


def _values_equal(left: Term, right: Term) -> bool:
    # equality across kinds is simply false, so mixed-kind streams survive
    if is_number(left) and is_number(right):
        return left == right
    if isinstance(left, Ident) and isinstance(right, Ident):
        return left.name == right.name
    if isinstance(left, str) and isinstance(right, str) \
            and not isinstance(left, bool) and not isinstance(right, bool):
        return left == right
    if isinstance(left, tuple) and isinstance(right, tuple):
        return len(left) == len(right) and all(
            _values_equal(a, b) for a, b in zip(left, right))
    if isinstance(left, bool) and isinstance(right, bool):
        return left == right
    return False


def eval_filter_expr(expr: FilterExpr, frame: Frame) -> bool:
    """Evaluate a filter under a frame; the outcome must be boolean."""
    return _boolean(_eval_operand(expr, frame), "filter")
