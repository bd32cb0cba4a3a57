"""Style rules: map liked/disliked concepts to attribute constraints.

"Curry" means Indian or Thai cuisine, "alcohol" means a bar or a pub.
Liked concepts are conjunctive, so their value sets intersect per target
attribute; disliked concepts are exclusions, so their sets union. The
table is explicit, loaded from a JSON config, and extensible per
deployment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .dialog import Polarity, Requirement, not_require, require

PREFER = "prefer"
NOT_PREFER = "not_prefer"


class EmptyIntersection(ValueError):
    """Liked concepts whose style sets share no value cannot all hold."""

    def __init__(self, attribute: str, concepts: list[str]):
        super().__init__(
            f"no {attribute} satisfies all of: {', '.join(sorted(concepts))}"
        )
        self.attribute = attribute
        self.concepts = sorted(concepts)


@dataclass(frozen=True)
class StyleRule:
    concept: str
    attribute: str
    values: tuple[str, ...]


class StyleTable:
    """Immutable concept lookup. Unknown concepts simply have no rule."""

    def __init__(self, rules: list[StyleRule]):
        self._rules: dict[str, StyleRule] = {}
        for rule in rules:
            if rule.concept in self._rules:
                raise ValueError(f"duplicate style concept {rule.concept!r}")
            self._rules[rule.concept] = rule

    def lookup(self, concept: str) -> StyleRule | None:
        return self._rules.get(concept)

    @property
    def concepts(self) -> tuple[str, ...]:
        return tuple(self._rules)


def default_style_path() -> Path:
    return Path(__file__).parent / "data" / "style_table.json"


def load_style_table(source: str | Path | None = None) -> StyleTable:
    path = Path(source) if source is not None else default_style_path()
    entries = json.loads(path.read_text(encoding="utf-8"))
    rules = [
        StyleRule(e["concept"], e["attribute"], tuple(e["values"])) for e in entries
    ]
    return StyleTable(rules)


def style_lookup(table: StyleTable, concept: str) -> tuple[str, tuple[str, ...]] | None:
    rule = table.lookup(concept)
    if rule is None:
        return None
    return rule.attribute, rule.values


def expand_preferences(
    state_in: list[Requirement], table: StyleTable
) -> list[Requirement]:
    """Rewrite prefer/not_prefer entries into attribute constraints.

    Returns a new list: pass-through requirements in their original order,
    followed by the intersected positive expansions and the unioned
    negative ones. Concepts without a style rule are dropped. Raises
    EmptyIntersection when liked concepts cannot be satisfied together.
    """
    passthrough: list[Requirement] = []
    liked: list[str] = []
    disliked: list[str] = []
    for req in state_in:
        if req.polarity is Polarity.REQUIRE and req.attribute == PREFER:
            liked.extend(req.values)
        elif req.polarity is Polarity.REQUIRE and req.attribute == NOT_PREFER:
            disliked.extend(req.values)
        elif req.attribute in (PREFER, NOT_PREFER):
            # a negated prefer-entry reads as a dislike
            disliked.extend(req.values)
        else:
            passthrough.append(req.clone())

    expanded = passthrough
    for attribute, values in _intersect_by_attribute(liked, table):
        expanded.append(require(attribute, values))
    for attribute, values in _union_by_attribute(disliked, table):
        expanded.append(not_require(attribute, values))
    return expanded


def _intersect_by_attribute(concepts, table) -> list[tuple[str, list[str]]]:
    grouped: dict[str, tuple[set[str], list[str]]] = {}
    for concept in concepts:
        rule = table.lookup(concept)
        if rule is None:
            continue
        if rule.attribute not in grouped:
            grouped[rule.attribute] = (set(rule.values), [concept])
        else:
            current, members = grouped[rule.attribute]
            current &= set(rule.values)
            members.append(concept)
            grouped[rule.attribute] = (current, members)
    result = []
    for attribute, (values, members) in grouped.items():
        if not values:
            raise EmptyIntersection(attribute, members)
        result.append((attribute, sorted(values)))
    return result


def _union_by_attribute(concepts, table) -> list[tuple[str, list[str]]]:
    grouped: dict[str, set[str]] = {}
    for concept in concepts:
        rule = table.lookup(concept)
        if rule is None:
            continue
        grouped.setdefault(rule.attribute, set()).update(rule.values)
    return [(attribute, sorted(values)) for attribute, values in grouped.items()]
