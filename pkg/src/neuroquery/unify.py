"""Unification over frames: two-sided pattern matching with an occurs check.

Both sides of :func:`unify` may contain variables. A :class:`Frame` is a
persistent partial map from variables to terms; success extends the input
frame minimally, failure is the value ``None``, never an exception. Input
frames are never mutated, so frames and terms can be shared freely across
threads.
"""

from dataclasses import dataclass
from typing import Iterator, Optional

from .terms import Ident, Term, Var, is_number


class Frame:
    """Immutable variable bindings, preserving first-binding order."""

    __slots__ = ("_bindings",)

    def __init__(self, bindings: dict | None = None):
        self._bindings: dict[Var, Term] = dict(bindings) if bindings else {}

    def bind(self, var: Var, term: Term) -> "Frame":
        """Return a new frame extended with ``var -> term``.

        Extension never overwrites: binding an already-bound variable is a
        programming error and raises ``ValueError``.
        """
        if var in self._bindings:
            raise ValueError(f"variable {var} is already bound")
        new = dict(self._bindings)
        new[var] = term
        frame = Frame.__new__(Frame)
        frame._bindings = new
        return frame

    def lookup(self, var: Var) -> Optional[Term]:
        return self._bindings.get(var)

    def __contains__(self, var: Var) -> bool:
        return var in self._bindings

    def __iter__(self) -> Iterator[Var]:
        return iter(self._bindings)

    def __len__(self) -> int:
        return len(self._bindings)

    def items(self):
        return self._bindings.items()

    def __eq__(self, other) -> bool:
        return isinstance(other, Frame) and self._bindings == other._bindings

    def __repr__(self) -> str:
        inner = ", ".join(f"{v}: {t!r}" for v, t in self._bindings.items())
        return "{" + inner + "}"


EMPTY_FRAME = Frame()


def resolve(term: Term, frame: Frame) -> Term:
    """Chase the outermost variable chain to its representative.

    Does not descend into tuples; a tuple is returned as-is even if its
    elements are bound variables.
    """
    while isinstance(term, Var):
        value = frame.lookup(term)
        if value is None:
            return term
        term = value
    return term


def occurs(var: Var, term: Term, frame: Frame) -> bool:
    """True if ``var`` occurs in ``term`` under the frame's bindings."""
    term = resolve(term, frame)
    if isinstance(term, Var):
        return term == var
    if isinstance(term, tuple):
        return any(occurs(var, t, frame) for t in term)
    return False


def _constants_equal(a: Term, b: Term) -> bool:
    # numbers form one tower; text and identifiers are distinct kinds
    if is_number(a) and is_number(b):
        return a == b
    if isinstance(a, Ident) and isinstance(b, Ident):
        return a.name == b.name
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    return False


def unify(a: Term, b: Term, frame: Frame) -> Optional[Frame]:
    """Unify two terms under a frame; return the extended frame or None.

    On success the result extends ``frame`` minimally so that
    ``substitute(a, result)`` structurally equals ``substitute(b, result)``.
    An occurs-check violation is a failure, not an error.
    """
    a = resolve(a, frame)
    b = resolve(b, frame)
    if isinstance(a, Var) and isinstance(b, Var) and a == b:
        return frame
    if isinstance(a, Var):
        if occurs(a, b, frame):
            return None
        return frame.bind(a, b)
    if isinstance(b, Var):
        if occurs(b, a, frame):
            return None
        return frame.bind(b, a)
    if isinstance(a, tuple) and isinstance(b, tuple):
        if len(a) != len(b):
            return None
        for x, y in zip(a, b):
            result = unify(x, y, frame)
            if result is None:
                return None
            frame = result
        return frame
    if _constants_equal(a, b):
        return frame
    return None


def substitute(term: Term, frame: Frame) -> Term:
    """Replace every bound variable in the term, recursively.

    Unbound variables remain in place, so the result may still contain
    variables.
    """
    term = resolve(term, frame)
    if isinstance(term, tuple):
        return tuple(substitute(t, frame) for t in term)
    return term


@dataclass
class FreshNames:
    """Source of variable names guaranteed disjoint from any source name.

    Source variables are drawn from ``[A-Za-z0-9_-]+`` so the ``#`` marker
    cannot collide with user-written names.
    """

    counter: int = 0

    def next(self, base: str) -> Var:
        self.counter += 1
        return Var(f"{base}#{self.counter}")


def rename_term(term: Term, mapping: dict, fresh: FreshNames) -> Term:
    if isinstance(term, Var):
        if term not in mapping:
            mapping[term] = fresh.next(term.name.split("#", 1)[0])
        return mapping[term]
    if isinstance(term, tuple):
        return tuple(rename_term(t, mapping, fresh) for t in term)
    return term


def standardize_apart(rule, fresh: FreshNames):
    """Return an alpha-equivalent copy of a rule with all-fresh variables.

    The renamed variable set is disjoint from every previously issued name,
    which keeps rule-local variables from capturing query variables.
    """
    from .nodes import Rule, rename_clause

    mapping: dict[Var, Var] = {}
    head = rename_term(rule.head, mapping, fresh)
    body = tuple(rename_clause(c, mapping, fresh) for c in rule.body)
    return Rule(head=head, body=body)
