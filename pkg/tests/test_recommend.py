from __future__ import annotations

import json
import random
from itertools import combinations

import pytest

from concierge.dialog import DialogState, Polarity, not_require, require
from concierge.kb import load_kb
from concierge.recommend import (
    EmptyHistory,
    Exhausted,
    HistoryIndexError,
    NoPriorRecommendation,
    Recommendation,
    RelaxationReport,
    another_option,
    explain_failure,
    fill_query,
    get_query_list,
    justify,
    recommend,
    satisfied_places,
    view_history,
)

from conftest import oracle_satisfied


def _state(*reqs, **kwargs) -> DialogState:
    state = DialogState(**kwargs)
    state.requirements.extend(r.clone() for r in reqs)
    return state


def _conv1_state() -> DialogState:
    return _state(
        require("name", ["query"]),
        require("establishment", ["restaurant"]),
        not_require("food type", ["indian", "thai"]),
        require("price range", ["cheap"]),
        require("customer rating", ["low", "average", "high"]),
    )


def _conv3_state(price: list[str]) -> DialogState:
    return _state(
        require("name", ["query"]),
        require("establishment", ["restaurant"]),
        require("family friendly", ["yes"]),
        require("food type", ["american", "italian"]),
        require("price range", price),
        require("customer rating", ["high"]),
    )


def _write_kb(tmp_path, rows):
    keys = ("name", "food type", "establishment", "price range", "customer rating")
    records = []
    for i, row in enumerate(rows):
        record = dict(zip(keys, row))
        record.update(
            {"address": f"{i} main st", "phone number": f"555-{i}", "family friendly": "yes", "distance": 1.0}
        )
        records.append(record)
    path = tmp_path / "kb.json"
    path.write_text(json.dumps(records))
    return load_kb(path)


# -- satisfied_places ---------------------------------------------------------


def test_conversation1_state_matches_only_southern(fixture_kb):
    assert satisfied_places(_conv1_state(), fixture_kb) == [0]


def test_conversation3_cheap_state_matches_nothing(fixture_kb):
    assert satisfied_places(_conv3_state(["cheap"]), fixture_kb) == []


def test_empty_state_matches_everything(fixture_kb):
    assert satisfied_places(DialogState(), fixture_kb) == [p.id for p in fixture_kb]


def test_query_values_do_not_filter(fixture_kb):
    state = _state(require("address", ["query"]))
    assert satisfied_places(state, fixture_kb) == [p.id for p in fixture_kb]


# -- recommend / navigation ----------------------------------------------------


def test_conversation2_sequence(fixture_kb):
    state = _state(
        require("name", ["query"]),
        require("food type", ["bar", "bubble tea", "coffee"]),
        require("price range", ["cheap"]),
        require("customer rating", ["high"]),
    )
    first = recommend(state, fixture_kb)
    assert isinstance(first, Recommendation)
    assert dict(first.facts)["name"] == "eiland coffee"

    # "I don't drink coffee" adds the exclusion; the engine re-queries
    from concierge.dialog import update_state

    update_state([not_require("establishment", ["coffee shop"])], state)
    second = recommend(state, fixture_kb)
    assert dict(second.facts)["name"] == "fukuro"

    update_state([require("establishment", ["bar"])], state)
    third = recommend(state, fixture_kb)
    assert dict(third.facts)["name"] == "northside drafthouse & eatery"


def test_conversation3_recommend_order(fixture_kb):
    state = _conv3_state(["cheap", "moderate"])
    first = recommend(state, fixture_kb)
    assert dict(first.facts)["name"] == "cappuccino italian bistro"
    second = another_option(state, fixture_kb)
    assert dict(second.facts)["name"] == "palio's pizza cafe"


def test_recommend_empty_kb_reports_all_blocking(tmp_path):
    kb = _write_kb(tmp_path, [])
    state = _state(
        require("food type", ["italian"]),
        require("price range", ["cheap"]),
        require("customer rating", ["high"]),
    )
    report = recommend(state, kb)
    assert isinstance(report, RelaxationReport)
    assert set(report.blocking) == {"food type", "price range", "customer rating"}
    assert report.satisfied == []


def test_recommend_never_repeats(fixture_kb):
    state = DialogState()
    seen = set()
    for _ in range(len(fixture_kb)):
        rec = recommend(state, fixture_kb)
        assert rec.place_id not in seen
        seen.add(rec.place_id)
    with pytest.raises(Exhausted):
        recommend(state, fixture_kb)


def test_another_option_exhausts_single_place_kb(tmp_path):
    kb = _write_kb(tmp_path, [("solo", "italian", "restaurant", "cheap", "high")])
    state = DialogState()
    recommend(state, kb)
    with pytest.raises(Exhausted):
        another_option(state, kb)


def test_another_option_requires_prior_recommendation(fixture_kb):
    with pytest.raises(NoPriorRecommendation):
        another_option(DialogState(), fixture_kb)


def test_view_history(fixture_kb):
    state = _state(require("food type", ["italian"]))
    recommend(state, fixture_kb)  # cappuccino
    another_option(state, fixture_kb)  # palio's
    assert state.history == [4, 5]

    first = view_history(state, "first", fixture_kb)
    assert dict(first.facts)["name"] == "cappuccino italian bistro"
    last = view_history(state, "last", fixture_kb)
    assert dict(last.facts)["name"] == "palio's pizza cafe"
    indexed = view_history(state, 2, fixture_kb)
    assert indexed.place_id == state.history[2 - 1]  # direct list indexing oracle
    assert state.history == [4, 5]  # unchanged

    with pytest.raises(HistoryIndexError):
        view_history(state, 3, fixture_kb)


def test_view_history_empty(fixture_kb):
    with pytest.raises(EmptyHistory):
        view_history(DialogState(), "first", fixture_kb)


def test_view_history_singleton_last(fixture_kb):
    state = _state(require("food type", ["american"]))
    recommend(state, fixture_kb)
    assert view_history(state, "last", fixture_kb).place_id == state.history[0]


# -- query filling --------------------------------------------------------------


def test_get_query_list_conversation1(fixture_kb):
    state = _conv1_state()
    state.requirements.append(require("address", ["query"]))
    assert get_query_list(state) == ["name", "address"]


def test_get_query_list_empty(fixture_kb):
    assert get_query_list(_state(require("food type", ["thai"]))) == []


def test_get_query_list_phone():
    state = _state(require("phone number", ["query"]))
    # oracle: scan the state directly
    expected = [
        r.attribute
        for r in state.requirements
        if r.polarity is Polarity.REQUIRE and r.values == ["query"]
    ]
    assert get_query_list(state) == expected == ["phone number"]


def test_fill_query_includes_address(fixture_kb):
    facts = dict(fill_query(0, ["name", "address"], fixture_kb))
    assert facts["address"] == "621 w plano pkwy #229, plano, tx 75075"
    assert facts["name"] == "southern recipes grill"


def test_fill_query_defaults_only(fixture_kb):
    facts = fill_query(2, [], fixture_kb)
    assert [a for a, _ in facts] == ["name", "food type", "price range", "customer rating"]


def test_fill_query_northside_address(fixture_kb):
    facts = dict(fill_query(3, ["address"], fixture_kb))
    assert facts["address"] == "3000 north blvd suite 800, richardson, tx 75080"


# -- justification ---------------------------------------------------------------


def test_justify_conversation1(fixture_kb):
    state = _conv1_state()
    just = justify(0, state, fixture_kb)
    matched = {(req.attribute, value) for req, value in just.matched}
    assert ("establishment", "restaurant") in matched
    assert ("price range", "cheap") in matched
    assert ("customer rating", "average") in matched
    avoided = {(req.attribute, value) for req, value in just.avoided}
    assert ("food type", "american") in avoided


def test_justify_covers_every_concrete_requirement(fixture_kb):
    state = _conv1_state()
    rec = recommend(state, fixture_kb)
    concrete = {
        r.attribute
        for r in state.requirements
        if r.polarity is Polarity.REQUIRE and r.values != ["query"]
    }
    assert {req.attribute for req, _ in rec.justification.matched} == concrete


def test_justify_empty_state(fixture_kb):
    just = justify(0, DialogState(), fixture_kb)
    assert just.matched == [] and just.avoided == []


def test_justify_fukuro_conversation2(fixture_kb):
    state = _state(
        require("price range", ["cheap"]), require("customer rating", ["high"])
    )
    just = justify(2, state, fixture_kb)
    matched = {(req.attribute, value) for req, value in just.matched}
    assert ("price range", "cheap") in matched
    assert ("customer rating", "high") in matched


# -- relaxation -------------------------------------------------------------------


def test_explain_failure_conversation3(fixture_kb):
    report = explain_failure(_conv3_state(["cheap"]), fixture_kb)
    assert report.blocking == ["price range"]
    satisfied = {(req.attribute, value) for req, value in report.satisfied}
    assert ("food type", "italian") in satisfied
    assert ("establishment", "restaurant") in satisfied
    assert ("family friendly", "yes") in satisfied
    assert report.suggestion == {"price range": ["moderate"]}


def test_explain_failure_empty_kb(tmp_path):
    kb = _write_kb(tmp_path, [])
    state = _state(require("food type", ["thai"]), require("price range", ["cheap"]))
    report = explain_failure(state, kb)
    assert set(report.blocking) == {"food type", "price range"}


def test_explain_failure_pair_blocking(tmp_path):
    # constructed so no single attribute unblocks, but a pair does
    kb = _write_kb(
        tmp_path,
        [
            ("a", "italian", "restaurant", "cheap", "low"),
            ("b", "mexican", "restaurant", "expensive", "low"),
            ("c", "thai", "restaurant", "cheap", "high"),
        ],
    )
    state = _state(
        require("food type", ["italian"]),
        require("price range", ["expensive"]),
        require("customer rating", ["high"]),
    )
    report = explain_failure(state, kb)
    assert set(report.blocking) == {"price range", "customer rating"}
    # minimality by brute force: every single-attribute drop still fails
    requirements = state.requirements
    for single in combinations({r.attribute for r in requirements}, 1):
        kept = [r for r in requirements if r.attribute not in single]
        assert oracle_satisfied(kept, kb) == []
    kept = [r for r in requirements if r.attribute not in report.blocking]
    assert oracle_satisfied(kept, kb) != []


def test_relaxation_minimality_randomized(tmp_path):
    rng = random.Random(42)
    foods = ["italian", "thai", "mexican", "greek", "korean"]
    prices = ["cheap", "moderate", "expensive"]
    ratings = ["low", "average", "high"]
    checked = 0
    trials = 0
    while checked < 40 and trials < 500:
        trials += 1
        rows = [
            (f"p{i}", rng.choice(foods), "restaurant", rng.choice(prices), rng.choice(ratings))
            for i in range(rng.randint(1, 8))
        ]
        kb = _write_kb(tmp_path, rows)
        state = _state(
            require("food type", [rng.choice(foods)]),
            require("price range", [rng.choice(prices)]),
            require("customer rating", [rng.choice(ratings)]),
        )
        if satisfied_places(state, kb):
            continue
        checked += 1
        report = explain_failure(state, kb)
        constrained = [r.attribute for r in state.requirements]
        blocking = set(report.blocking)
        kept = [r for r in state.requirements if r.attribute not in blocking]
        assert oracle_satisfied(kept, kb), "dropping the blocking set must help"
        # exhaustive: no strictly smaller subset restores satisfiability
        for size in range(len(blocking)):
            for subset in combinations(constrained, size):
                kept = [r for r in state.requirements if r.attribute not in subset]
                assert oracle_satisfied(kept, kb) == []
    assert checked == 40


def test_oracle_equivalence_on_fixture_states(fixture_kb):
    states = [
        DialogState(),
        _conv1_state(),
        _conv3_state(["cheap"]),
        _conv3_state(["cheap", "moderate"]),
        _state(not_require("establishment", ["coffee shop", "bar"])),
        _state(require("distance", ["1.4"])),
    ]
    for state in states:
        assert satisfied_places(state, fixture_kb) == oracle_satisfied(
            state.requirements, fixture_kb
        )


def test_consistency_every_result_satisfies_requirements(fixture_kb):
    state = _conv3_state(["cheap", "moderate"])
    while True:
        try:
            rec = recommend(state, fixture_kb)
        except Exhausted:
            break
        if isinstance(rec, RelaxationReport):
            break
        assert rec.place_id in oracle_satisfied(state.requirements, fixture_kb)
