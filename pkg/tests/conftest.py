from __future__ import annotations

import json
from pathlib import Path

import pytest

from concierge.commonsense import load_style_table
from concierge.kb import default_kb_path, load_kb

FIXTURES = Path(__file__).parent / "fixtures"

# The three scripted conversations used across the suite.
CONVERSATION_1 = [
    "Can you recommend me a restaurant?",
    "I can try any food except curry.",
    "Less than fifteen dollars.",
    "No, I'm not looking for a specific rating score.",
    "Sounds nice. Can you give me its address?",
    "Thank you for your help.",
]

CONVERSATION_2 = [
    "Do you know where can I find a place to drink?",
    "At low price, please.",
    "I'd prefer those with good reviews.",
    "Sorry I don't drink coffee.",
    "Maybe a bar suits me better.",
    "Sounds nice! Thanks!",
]

CONVERSATION_3 = [
    "I'm looking for somewhere serving pizza. I want to have dinner with my family.",
    "Please make it as cheap as possible.",
    "Yes. I want the high rating ones.",
    "How about change the price to average?",
    "Any other recommendations?",
    "That's great! May I have its address?",
    "Cool. Thanks.",
]


@pytest.fixture(scope="session")
def fixture_kb():
    return load_kb(default_kb_path())


@pytest.fixture(scope="session")
def style_table():
    return load_style_table()


@pytest.fixture(scope="session")
def replay_completions():
    return json.loads((FIXTURES / "replayed_completions.json").read_text())


def oracle_attribute(place, attribute: str) -> str:
    """Independent attribute accessor for brute-force checks."""
    return {
        "name": place.name,
        "food type": place.food_type,
        "establishment": place.establishment,
        "price range": place.price_range,
        "customer rating": place.customer_rating,
        "address": place.address,
        "phone number": place.phone,
        "family friendly": place.family_friendly,
        "distance": f"{place.distance:g}",
    }[attribute]


def oracle_satisfied(requirements, knowledgebase) -> list[int]:
    """Brute-force filter, written independently of the engine."""
    matching = []
    for place in knowledgebase:
        ok = True
        for req in requirements:
            stored = oracle_attribute(place, req.attribute)
            if req.polarity.value == "require":
                concrete = [v for v in req.values if v != "query"]
                if not concrete or "any" in concrete:
                    continue
                if stored not in concrete:
                    ok = False
                    break
            else:
                if stored in req.values:
                    ok = False
                    break
        if ok:
            matching.append(place.id)
    return matching
