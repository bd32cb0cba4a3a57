"""Predicate terms: the flat `name(arg1, arg2)` exchange format.

This is the lingua franca between the semantic parser, the filter and the
reasoner. Names may contain spaces ("price range"), values are flat atoms,
single quotes are allowed around multi-word values, and the reserved atom
"query" marks a value the user is asking for.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

# Reserved value atoms. "query" marks information the user wants back;
# "any" marks an explicit no-preference wildcard that matches every value.
QUERY = "query"
ANY = "any"

_WS = re.compile(r"\s+")


class Label(str, Enum):
    """Classification of an input sentence."""

    IRRELEVANT = "irrelevant"
    THANK = "thank"
    CONTENT = "content"


class MalformedTerm(ValueError):
    """Raised when a term list cannot be parsed; carries the 0-based offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class Predicate:
    """One parsed term. Args are normalized atoms, duplicates removed."""

    name: str
    args: tuple[str, ...] = field(default_factory=tuple)

    def __str__(self) -> str:
        return serialize_term_list([self])


def normalize_name(raw: str) -> str:
    """Canonical predicate/attribute name: lowercase, single-spaced."""
    return _WS.sub(" ", raw.strip()).lower()


def normalize_value(raw: str, attribute: str | None = None) -> str:
    """Canonical value atom: lowercase, trimmed, quotes stripped.

    "query" always normalizes to the reserved sentinel. The price synonym
    "average" maps to "moderate" only when the attribute context says this
    is a price value; without context it stays as-is (it is a legitimate
    customer-rating value).
    """
    text = raw.strip()
    if len(text) >= 2 and text[0] == "'" and text[-1] == "'":
        text = text[1:-1].replace("''", "'")
    text = _WS.sub(" ", text.strip()).lower()
    if attribute == "price range" and text == "average":
        return "moderate"
    return text


def parse_term_list(text: str) -> list[Predicate]:
    """Parse a comma-separated list of `name(args)` groups.

    Bare names (no parentheses) are accepted as zero-argument predicates.
    Raises MalformedTerm on unbalanced parentheses, unclosed quotes or an
    empty name; never returns a partial result.
    """
    preds: list[Predicate] = []
    i = 0
    n = len(text)
    while i < n:
        # skip separators between groups
        while i < n and (text[i].isspace() or text[i] == ","):
            i += 1
        if i >= n:
            break
        start = i
        # scan the name up to '(' or a top-level ',' (bare predicate)
        while i < n and text[i] not in "(),'":
            i += 1
        if i < n and text[i] == "'":
            raise MalformedTerm("quote not allowed in predicate name", i)
        if i < n and text[i] == ")":
            raise MalformedTerm("unbalanced ')'", i)
        name = normalize_name(text[start:i])
        if i >= n or text[i] == ",":
            if not name:
                raise MalformedTerm("empty predicate name", start)
            preds.append(Predicate(name, ()))
            continue
        # text[i] == "(": collect args until the matching ')'
        if not name:
            raise MalformedTerm("empty predicate name", i)
        i += 1
        args: list[str] = []
        current: list[str] = []
        quoted = False
        closed = False
        while i < n:
            ch = text[i]
            if quoted:
                if ch == "'":
                    if i + 1 < n and text[i + 1] == "'":  # escaped quote
                        current.append("'")
                        i += 1
                    else:
                        quoted = False
                else:
                    current.append(ch)
            elif ch == "'":
                quoted = True
            elif ch == ",":
                args.append("".join(current))
                current = []
            elif ch == ")":
                closed = True
                i += 1
                break
            elif ch == "(":
                raise MalformedTerm("nested '(' not allowed", i)
            else:
                current.append(ch)
            i += 1
        if quoted:
            raise MalformedTerm("unclosed quote", n - 1)
        if not closed:
            raise MalformedTerm("unbalanced '('", n - 1)
        if current or args:
            args.append("".join(current))
        preds.append(Predicate(name, _normalize_args(args)))
    return preds


def _normalize_args(raw_args: list[str]) -> tuple[str, ...]:
    seen: list[str] = []
    for raw in raw_args:
        value = normalize_value(raw)
        if value and value not in seen:
            seen.append(value)
    return tuple(seen)


def _quote_if_needed(value: str) -> str:
    if any(ch in value for ch in ",()'") or value != value.strip():
        return "'" + value.replace("'", "''") + "'"
    return value


def serialize_term_list(preds: list[Predicate]) -> str:
    """Render predicates in the canonical single-spaced text form.

    Zero-argument predicates render as the bare name. Round-trips through
    parse_term_list.
    """
    groups = []
    for pred in preds:
        if pred.args:
            inner = ", ".join(_quote_if_needed(a) for a in pred.args)
            groups.append(f"{pred.name}({inner})")
        else:
            groups.append(pred.name)
    return ", ".join(groups)
