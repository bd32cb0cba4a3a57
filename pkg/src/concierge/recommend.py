"""Constraint search over the knowledgebase, plus navigation and explanation.

A place matches when every concrete require entry admits its stored value
(disjunction within a value list, with the "any" wildcard matching all)
and no not_require entry forbids it. Query-valued entries do not filter;
they select which attributes the recommendation reports back.

When nothing matches, explain_failure searches subsets of the constrained
attributes in increasing size for the minimal set whose removal restores a
result, so the agent can say exactly what to relax.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .dialog import DialogState, Polarity, Requirement, require
from .kb import ATTRIBUTES, Knowledgebase, Place, attribute_of
from .terms import ANY, QUERY

DISPLAY_ATTRIBUTES = ("name", "food type", "price range", "customer rating")

# Tie-break for equally small blocking sets: relax the attribute the user
# cares least about first (reverse key-question order, then the rest).
RELAXATION_ORDER = (
    "customer rating",
    "price range",
    "food type",
    "family friendly",
    "establishment",
    "distance",
    "phone number",
    "address",
    "name",
)


class Exhausted(Exception):
    """Every matching place has already been recommended."""


class NoPriorRecommendation(Exception):
    """Navigation requested before any recommendation was made."""


class EmptyHistory(Exception):
    """view_history with nothing recommended yet."""


class HistoryIndexError(IndexError):
    def __init__(self, index: int, size: int):
        super().__init__(f"history reference {index} outside 1..{size}")
        self.index = index
        self.size = size


@dataclass
class Justification:
    """Evidence that a place meets the stated constraints."""

    matched: list[tuple[Requirement, str]] = field(default_factory=list)
    avoided: list[tuple[Requirement, str]] = field(default_factory=list)


@dataclass
class Recommendation:
    place_id: int
    facts: list[tuple[str, str]]
    justification: Justification


@dataclass
class RelaxationReport:
    """Why the search failed and what to change.

    blocking is the minimal attribute set whose removal restores results;
    satisfied pairs each surviving requirement with the value a witness
    place holds; suggestion offers the witness's values for the blocking
    attributes.
    """

    blocking: list[str]
    satisfied: list[tuple[Requirement, str]]
    suggestion: dict[str, list[str]]
    witness_id: int | None = None


def _concrete_requirements(state: DialogState) -> list[Requirement]:
    concrete = []
    for req in state.requirements:
        if req.polarity is Polarity.REQUIRE:
            values = [v for v in req.values if v != QUERY]
            if not values or ANY in values:
                continue
            concrete.append(Requirement(req.polarity, req.attribute, values))
        else:
            concrete.append(req)
    return concrete


def _place_matches(place: Place, requirements: list[Requirement]) -> bool:
    for req in requirements:
        value = attribute_of(place, req.attribute)
        if req.polarity is Polarity.REQUIRE:
            if value not in req.values:
                return False
        elif value in req.values:
            return False
    return True


def satisfied_places(state: DialogState, knowledgebase: Knowledgebase) -> list[int]:
    """Ids of all places meeting the state's constraints, in KB order."""
    requirements = _concrete_requirements(state)
    return [p.id for p in knowledgebase if _place_matches(p, requirements)]


def get_query_list(state: DialogState) -> list[str]:
    """Attributes whose require entry is exactly the query sentinel."""
    return [
        req.attribute
        for req in state.requirements
        if req.polarity is Polarity.REQUIRE and req.values == [QUERY]
    ]


def fill_query(
    place_id: int, attributes: list[str], knowledgebase: Knowledgebase
) -> list[tuple[str, str]]:
    """Pair queried attributes with stored values, after the display set."""
    place = knowledgebase.get(place_id)
    facts = [(a, attribute_of(place, a)) for a in DISPLAY_ATTRIBUTES]
    for attribute in attributes:
        if attribute not in DISPLAY_ATTRIBUTES:
            facts.append((attribute, attribute_of(place, attribute)))
    return facts


def justify(place_id: int, state: DialogState, knowledgebase: Knowledgebase) -> Justification:
    """One (requirement, stored value) pair per concrete constraint."""
    place = knowledgebase.get(place_id)
    justification = Justification()
    for req in _concrete_requirements(state):
        value = attribute_of(place, req.attribute)
        if req.polarity is Polarity.REQUIRE:
            justification.matched.append((req, value))
        else:
            justification.avoided.append((req, value))
    return justification


def _build_recommendation(
    place_id: int, state: DialogState, knowledgebase: Knowledgebase
) -> Recommendation:
    queries = get_query_list(_with_name_query(state))
    return Recommendation(
        place_id=place_id,
        facts=fill_query(place_id, queries, knowledgebase),
        justification=justify(place_id, state, knowledgebase),
    )


def _with_name_query(state: DialogState) -> DialogState:
    """A query for the place name is implied when nothing else is queried."""
    if get_query_list(state):
        return state
    augmented = state.clone()
    augmented.requirements.insert(0, require("name", [QUERY]))
    return augmented


def describe(
    place_id: int, state: DialogState, knowledgebase: Knowledgebase
) -> Recommendation:
    """Re-describe an already-presented place with the current query list."""
    return _build_recommendation(place_id, state, knowledgebase)


def recommend(
    state: DialogState, knowledgebase: Knowledgebase
) -> Recommendation | RelaxationReport:
    """Search, refill the output list, and present its head.

    Places already in the history are never presented again; raises
    Exhausted when matches exist but all have been shown. An empty search
    yields a RelaxationReport instead.
    """
    matches = satisfied_places(state, knowledgebase)
    if not matches:
        state.output_list.clear()
        return explain_failure(state, knowledgebase)
    fresh = [pid for pid in matches if pid not in state.history]
    if not fresh:
        state.output_list.clear()
        raise Exhausted
    head, *rest = fresh
    state.output_list[:] = rest
    state.history.append(head)
    return _build_recommendation(head, state, knowledgebase)


def another_option(
    state: DialogState, knowledgebase: Knowledgebase
) -> Recommendation:
    """Pop the next pending recommendation into the history."""
    if not state.history and not state.output_list:
        raise NoPriorRecommendation
    if not state.output_list:
        raise Exhausted
    head = state.output_list.pop(0)
    state.history.append(head)
    return _build_recommendation(head, state, knowledgebase)


def view_history(
    state: DialogState, ref: str | int, knowledgebase: Knowledgebase
) -> Recommendation:
    """Re-describe the first, last or i-th past recommendation (1-based)."""
    if not state.history:
        raise EmptyHistory
    if ref == "first":
        index = 1
    elif ref == "last":
        index = len(state.history)
    else:
        index = int(ref)
    if not 1 <= index <= len(state.history):
        raise HistoryIndexError(index, len(state.history))
    return _build_recommendation(state.history[index - 1], state, knowledgebase)


def _relaxation_rank(attribute: str) -> int:
    try:
        return RELAXATION_ORDER.index(attribute)
    except ValueError:
        return len(RELAXATION_ORDER)


def explain_failure(
    state: DialogState, knowledgebase: Knowledgebase
) -> RelaxationReport:
    """Find the minimal set of constrained attributes to relax.

    Exhaustive search by subset size (at most nine attributes are ever
    constrained), preferring to relax customer rating before price before
    food type when several minimal sets exist.
    """
    requirements = _concrete_requirements(state)
    constrained = []
    for req in requirements:
        if req.attribute not in constrained:
            constrained.append(req.attribute)
    constrained.sort(key=_relaxation_rank)

    for size in range(1, len(constrained) + 1):
        for subset in combinations(constrained, size):
            kept = [r for r in requirements if r.attribute not in subset]
            witnesses = [p for p in knowledgebase if _place_matches(p, kept)]
            if witnesses:
                witness = witnesses[0]
                satisfied = [(r, attribute_of(witness, r.attribute)) for r in kept]
                suggestion = {
                    a: sorted({attribute_of(p, a) for p in witnesses})
                    for a in subset
                    if a in ATTRIBUTES
                }
                return RelaxationReport(
                    blocking=sorted(subset, key=constrained.index),
                    satisfied=satisfied,
                    suggestion=suggestion,
                    witness_id=witness.id,
                )
    # even the unconstrained query fails: the knowledgebase is empty
    return RelaxationReport(
        blocking=list(constrained), satisfied=[], suggestion={}, witness_id=None
    )
