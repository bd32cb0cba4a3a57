"""Deterministic response rendering from reasoner output.

Questions, recommendation descriptions, failure explanations and canned
replies come from a template config; wording never varies for the same
plan and seed, so golden tests stay byte-stable. An optional LLM-backed
rephraser can be layered on top and falls back to the identity on any
backend trouble.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .dialog import Polarity
from .kb import ATTRIBUTES, UnknownAttribute
from .recommend import Justification, Recommendation, RelaxationReport

logger = logging.getLogger(__name__)

DISPLAY_SET = ("name", "food type", "price range", "customer rating")


@dataclass(frozen=True)
class Templates:
    questions: dict[str, str]
    canned: dict[str, list[str]]


def default_templates_path() -> Path:
    return Path(__file__).parent / "data" / "templates.json"


def load_templates(source: str | Path | None = None) -> Templates:
    path = Path(source) if source is not None else default_templates_path()
    raw = json.loads(path.read_text(encoding="utf-8"))
    return Templates(questions=raw["questions"], canned=raw["canned"])


_DEFAULT: Templates | None = None


def _templates(templates: Templates | None) -> Templates:
    global _DEFAULT
    if templates is not None:
        return templates
    if _DEFAULT is None:
        _DEFAULT = load_templates()
    return _DEFAULT


def display_name(value: str) -> str:
    """Capitalize word-initial letters only ("palio's" stays "Palio's")."""
    return " ".join(w[:1].upper() + w[1:] if w else w for w in value.split(" "))


def render_question(attribute: str, templates: Templates | None = None) -> str:
    t = _templates(templates)
    if attribute not in ATTRIBUTES:
        raise UnknownAttribute(attribute)
    template = t.questions.get(attribute, t.questions["default"])
    return template.format(attribute=attribute)


def _extra_fact_sentence(attribute: str, value: str) -> str:
    if attribute == "address":
        return f" It is located at {value}."
    if attribute == "phone number":
        return f" To make a reservation, you can call {value}."
    if attribute == "distance":
        return f" It is {value} miles away."
    if attribute == "family friendly":
        if value == "yes":
            return " It is family friendly."
        return " It is not family friendly."
    if attribute == "establishment":
        return f" The establishment type is {value}."
    return f" Its {attribute} is {value}."


def _justification_clause(justification: Justification) -> str:
    parts: list[str] = []
    for req, value in justification.matched:
        parts.append(f"{req.attribute} {value}")
    for req, value in justification.avoided:
        parts.append(f"avoiding {', '.join(req.values)} (its {req.attribute} is {value})")
    if not parts:
        return ""
    return " It matches your preferences: " + "; ".join(parts) + "."


def render_recommendation(
    rec: Recommendation, justification: Justification | None = None
) -> str:
    """One description sentence plus queried facts and a justification clause."""
    facts = dict(rec.facts)
    name = display_name(facts["name"])
    text = (
        f"Perhaps you are interested in {name}, which serves {facts['food type']} "
        f"at a {facts['price range']} price and has a {facts['customer rating']} "
        "customer rating."
    )
    for attribute, value in rec.facts:
        if attribute not in DISPLAY_SET:
            text += _extra_fact_sentence(attribute, value)
    just = justification if justification is not None else rec.justification
    text += _justification_clause(just)
    return text


def render_no_result(report: RelaxationReport) -> str:
    """Explain what holds, what blocks, and what to try instead."""
    base = "Sorry, we couldn't find any results for your specifications."
    if not report.satisfied and not report.blocking:
        return base + " I don't know any place at all yet."
    if not report.satisfied:
        return base + " You may need to start over with different requirements."
    clauses = []
    for req, value in report.satisfied:
        if req.polarity is Polarity.REQUIRE:
            clauses.append(f"the {req.attribute} being {value}")
        else:
            clauses.append(f"avoiding {', '.join(req.values)} for the {req.attribute}")
    text = base + " We could find results that meet the conditions of "
    text += ", ".join(clauses)
    blocking = " and ".join(report.blocking)
    text += f", but we were unable to satisfy your {blocking} criteria."
    hints = [
        f"{attribute} {' or '.join(values)}"
        for attribute, values in report.suggestion.items()
        if values
    ]
    if hints:
        text += f" You could try relaxing that, for example {'; '.join(hints)}."
    return text


def render_canned(
    kind: str, seed: int = 0, templates: Templates | None = None
) -> str:
    """Fixed reply per kind, with a deterministic seeded rotation."""
    family = _templates(templates).canned[kind]
    return family[seed % len(family)]


def render_preference_conflict(attribute: str, concepts: list[str]) -> str:
    names = " and ".join(concepts)
    return (
        f"I couldn't find a {attribute} that offers {names} at the same time. "
        "Could you relax one of those preferences?"
    )


def rephrase(text: str, backend=None) -> str:
    """Optional meaning-preserving paraphrase; identity when unconfigured."""
    if backend is None:
        return text
    from .parse_frontend import BackendUnavailable

    prompt = (
        "Rephrase the reply below politely without changing its meaning.\n"
        f"Reply: {text}\nRephrased:"
    )
    try:
        rephrased = backend.complete(prompt).strip()
        return rephrased or text
    except BackendUnavailable as exc:
        logger.warning("rephrase backend unavailable, keeping template text: %s", exc)
        return text
