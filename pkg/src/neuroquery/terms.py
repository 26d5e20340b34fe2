"""Term model: constants, identifiers, variables and nested n-tuples.

A term is one of:
  - text, plain ``str``
  - number, ``int`` or ``float`` (one comparable tower: ``14549 == 14549.0``)
  - identifier, :class:`Ident` (opaque symbol, exact equality)
  - variable, :class:`Var`
  - n-tuple, plain ``tuple`` of terms, arity >= 1

Texts and identifiers are distinct kinds and never compare equal, which keeps
ids (asins, review ids) from accidentally joining against free text.
"""

import re
from dataclasses import dataclass
from typing import Iterator, Union

IDENT_RE = re.compile(r"[A-Za-z0-9_-]+\Z")

_INT_RE = re.compile(r"[+-]?[0-9]+\Z")
_FLOAT_RE = re.compile(r"[+-]?([0-9]+\.[0-9]*|\.[0-9]+)([eE][+-]?[0-9]+)?\Z")


@dataclass(frozen=True, slots=True)
class Ident:
    """Opaque symbol such as an asin or a review id."""

    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Var:
    """Logic variable, written ``?name`` in query text."""

    name: str

    def __repr__(self) -> str:
        return f"?{self.name}"


Term = Union[str, int, float, Ident, Var, tuple]


def is_number(value: object) -> bool:
    # bool is an int subclass but is not part of the numeric tower
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def is_ground(term: Term) -> bool:
    """True when the term contains no variable at any depth."""
    if isinstance(term, Var):
        return False
    if isinstance(term, tuple):
        return all(is_ground(t) for t in term)
    return True


def variables_in(term: Term) -> Iterator[Var]:
    """Yield every variable occurring in the term, in left-to-right order."""
    if isinstance(term, Var):
        yield term
    elif isinstance(term, tuple):
        for t in term:
            yield from variables_in(t)


def parse_value(cell: str) -> Term:
    """Parse one CSV cell into a term.

    Precedence: integer, then float, then identifier when the cell matches
    the id pattern, otherwise text. This reproduces property files where
    ``6303157`` loads as an integer, ``4.7`` as a float, ``no`` as an
    identifier and ``koss portapro headphones with case`` as text.
    """
    if _INT_RE.match(cell):
        return int(cell)
    if _FLOAT_RE.match(cell):
        return float(cell)
    if IDENT_RE.match(cell):
        return Ident(cell)
    return cell


def term_key(term: Term):
    """Total, deterministic sort key over ground terms.

    Orders by kind first (numbers, identifiers, text, tuples), then by value.
    Used to break score ties by ascending doc key.
    """
    if is_number(term):
        return (0, float(term))
    if isinstance(term, Ident):
        return (1, term.name)
    if isinstance(term, str):
        return (2, term)
    if isinstance(term, tuple):
        return (3, tuple(term_key(t) for t in term))
    if isinstance(term, Var):
        return (4, term.name)
    raise TypeError(f"not a term: {term!r}")


def term_to_json(term: Term):
    """Convert a term to a JSON-serializable value for record output.

    Identifiers and text both become strings; tuples become arrays;
    an unbound variable renders as its ``?name`` spelling.
    """
    if isinstance(term, Ident):
        return term.name
    if isinstance(term, Var):
        return f"?{term.name}"
    if isinstance(term, tuple):
        return [term_to_json(t) for t in term]
    return term


def text_of(term: Term) -> str:
    """Canonical text form of a ground term, used for document identities."""
    if isinstance(term, Ident):
        return term.name
    if isinstance(term, str):
        return term
    if is_number(term):
        return repr(term)
    if isinstance(term, tuple):
        return "(" + ", ".join(text_of(t) for t in term) + ")"
    raise TypeError(f"no text form for {term!r}")
