"""Dialog state: require/not_require constraints and next-action selection.

The state is a list of polarity-tagged requirements. Values inside a
require entry are a disjunction; not_require values are hard exclusions.
Merging follows priority rules: existing information beats an incoming
query, concrete values overwrite a stored query, and a fresh require on an
attribute clears the matching negative entries (and vice versa).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .kb import FINITE_DOMAINS, Knowledgebase
from .terms import ANY, QUERY

KEY_INFO_DEFAULT = ("food type", "price range", "customer rating")


class Polarity(str, Enum):
    REQUIRE = "require"
    NOT_REQUIRE = "not_require"


@dataclass
class Requirement:
    polarity: Polarity
    attribute: str
    values: list[str]

    def clone(self) -> Requirement:
        return Requirement(self.polarity, self.attribute, list(self.values))

    def render(self) -> str:
        inner = ",".join(f"'{v}'" for v in self.values)
        return f"{self.polarity.value}('{self.attribute}',[{inner}])"


def require(attribute: str, values: list[str]) -> Requirement:
    return Requirement(Polarity.REQUIRE, attribute, list(values))


def not_require(attribute: str, values: list[str]) -> Requirement:
    return Requirement(Polarity.NOT_REQUIRE, attribute, list(values))


@dataclass
class DialogState:
    """Per-session reasoning state.

    output_list holds pending recommendations (place ids), history the ones
    already presented. merge_mode selects what a repeated concrete value
    means: "union" widens the disjunction (default), "replace" swaps it.
    """

    requirements: list[Requirement] = field(default_factory=list)
    output_list: list[int] = field(default_factory=list)
    history: list[int] = field(default_factory=list)
    key_info: tuple[str, ...] = KEY_INFO_DEFAULT
    merge_mode: str = "union"

    def find(self, polarity: Polarity, attribute: str) -> Requirement | None:
        for req in self.requirements:
            if req.polarity is polarity and req.attribute == attribute:
                return req
        return None

    def clone(self) -> DialogState:
        return DialogState(
            requirements=[r.clone() for r in self.requirements],
            output_list=list(self.output_list),
            history=list(self.history),
            key_info=self.key_info,
            merge_mode=self.merge_mode,
        )

    def render(self) -> str:
        """The require/not_require listing form, one entry per line."""
        return ",\n".join(req.render() for req in self.requirements)

    def as_sets(self) -> set[tuple[str, str, frozenset[str]]]:
        """Order-insensitive view for equality checks."""
        return {
            (req.polarity.value, req.attribute, frozenset(req.values))
            for req in self.requirements
        }


class ActionKind(str, Enum):
    ASK = "ask"
    RECOMMEND = "recommend"
    NO_RESULT = "no_result"
    CANNED = "canned"


@dataclass
class AgentAction:
    """The reasoner's single decision for one user turn."""

    kind: ActionKind
    attribute: str | None = None
    recommendation: object | None = None
    report: object | None = None
    label: str | None = None

    @classmethod
    def ask(cls, attribute: str) -> AgentAction:
        return cls(ActionKind.ASK, attribute=attribute)

    @classmethod
    def recommend(cls, recommendation) -> AgentAction:
        return cls(ActionKind.RECOMMEND, recommendation=recommendation)

    @classmethod
    def no_result(cls, report) -> AgentAction:
        return cls(ActionKind.NO_RESULT, report=report)

    @classmethod
    def canned(cls, label: str) -> AgentAction:
        return cls(ActionKind.CANNED, label=label)


def _sanitize(req: Requirement) -> Requirement | None:
    """Dedupe values; concrete information beats a co-listed query."""
    values: list[str] = []
    for value in req.values:
        if value and value not in values:
            values.append(value)
    if len(values) > 1 and QUERY in values:
        values = [v for v in values if v != QUERY]
    if req.polarity is Polarity.NOT_REQUIRE:
        values = [v for v in values if v != QUERY]
    if not values:
        return None
    return Requirement(req.polarity, req.attribute, values)


def _drop_entry(state: DialogState, entry: Requirement) -> None:
    state.requirements.remove(entry)


def _merge_require(req: Requirement, state: DialogState) -> None:
    existing = state.find(Polarity.REQUIRE, req.attribute)
    if req.values == [QUERY]:
        if existing is None:
            state.requirements.append(req.clone())
        return  # existing information wins over an incoming query
    if existing is None:
        state.requirements.append(req.clone())
    elif state.merge_mode == "replace":
        existing.values[:] = list(req.values)
    else:
        base = [v for v in existing.values if v != QUERY and v != ANY]
        existing.values[:] = base + [v for v in req.values if v not in base]
    negative = state.find(Polarity.NOT_REQUIRE, req.attribute)
    if negative is not None:
        negative.values[:] = [v for v in negative.values if v not in req.values]
        if not negative.values:
            _drop_entry(state, negative)


def _merge_not_require(req: Requirement, state: DialogState) -> None:
    existing = state.find(Polarity.NOT_REQUIRE, req.attribute)
    if existing is None:
        state.requirements.append(req.clone())
    else:
        existing.values[:] = existing.values + [
            v for v in req.values if v not in existing.values
        ]
    positive = state.find(Polarity.REQUIRE, req.attribute)
    if positive is not None:
        positive.values[:] = [v for v in positive.values if v not in req.values]
        if not positive.values:
            _drop_entry(state, positive)


def update_state(incoming: list[Requirement], state: DialogState) -> DialogState:
    """Merge preference-expanded requirements into the state, in order."""
    for raw in incoming:
        req = _sanitize(raw)
        if req is None:
            continue
        if req.polarity is Polarity.REQUIRE:
            _merge_require(req, state)
        else:
            _merge_not_require(req, state)
    return state


def next_info(state: DialogState) -> str | None:
    """The first key attribute still worth asking about, if any.

    An attribute qualifies when its stored value is still the query
    sentinel, or when the state holds no entry for it at all. A negative
    entry alone suppresses the question.
    """
    for attribute in state.key_info:
        positive = state.find(Polarity.REQUIRE, attribute)
        negative = state.find(Polarity.NOT_REQUIRE, attribute)
        if positive is not None and positive.values == [QUERY]:
            return attribute
        if positive is None and negative is None:
            return attribute
    return None


def record_no_preference(attribute: str, state: DialogState) -> DialogState:
    """Mark an attribute as "anything goes" so it is not asked again.

    Closed-domain attributes get their full domain; open-vocabulary ones
    (food type) get the reserved wildcard, which matches every value.
    """
    domain = FINITE_DOMAINS.get(attribute)
    values = list(domain) if domain is not None else [ANY]
    return update_state([require(attribute, values)], state)


def next_action(state: DialogState, knowledgebase: Knowledgebase) -> AgentAction:
    """Ask for missing key information, otherwise search for a place."""
    attribute = next_info(state)
    if attribute is not None:
        return AgentAction.ask(attribute)
    from . import recommend as _recommend

    try:
        outcome = _recommend.recommend(state, knowledgebase)
    except _recommend.Exhausted:
        return AgentAction.canned("exhausted")
    if isinstance(outcome, _recommend.Recommendation):
        return AgentAction.recommend(outcome)
    return AgentAction.no_result(outcome)


def check_invariants(state: DialogState) -> None:
    """Raise AssertionError when a state invariant is broken (test support)."""
    seen: set[tuple[Polarity, str]] = set()
    for req in state.requirements:
        key = (req.polarity, req.attribute)
        assert key not in seen, f"duplicate entry for {key}"
        seen.add(key)
        assert req.values, f"empty values for {key}"
        if req.polarity is Polarity.NOT_REQUIRE:
            assert QUERY not in req.values, "query inside not_require"
        elif QUERY in req.values:
            assert req.values == [QUERY], "query mixed with concrete values"
    for req in state.requirements:
        if req.polarity is Polarity.REQUIRE:
            negative = state.find(Polarity.NOT_REQUIRE, req.attribute)
            if negative is not None:
                overlap = set(req.values) & set(negative.values)
                assert not overlap, f"{overlap} both required and excluded"
    assert not set(state.history) & set(state.output_list)
