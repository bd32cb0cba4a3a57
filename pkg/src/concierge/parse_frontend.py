"""Semantic-parser boundary: rule backend, LLM adapter, and the filter.

Both backends emit the same wire format: predicates over the nine place
attributes plus prefer/not_prefer, no_preference, another_option and
view_history, with "query" marking requested information. The filter
(normalize_parse) rewrites that output into require/not_require terms for
the reasoner.

The rule backend is a deterministic keyword lexicon used for offline
operation and tests. The LLM backend builds a few-shot prompt, sends it to
a completion endpoint and parses the completion with the terms grammar.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .commonsense import NOT_PREFER, PREFER
from .dialog import Polarity, Requirement
from .terms import (
    Label,
    MalformedTerm,
    Predicate,
    QUERY,
    normalize_name,
    normalize_value,
    parse_term_list,
)

logger = logging.getLogger(__name__)

API_KEY_ENV = "CONCIERGE_LLM_API_KEY"

WIRE_TO_ATTRIBUTE = {
    "restaurant-name": "name",
    "restaurant name": "name",
    "name": "name",
    "food type": "food type",
    "food-type": "food type",
    "food": "food type",
    "cuisine": "food type",
    "establishment": "establishment",
    "establishment type": "establishment",
    "price range": "price range",
    "price-range": "price range",
    "price": "price range",
    "customer rating": "customer rating",
    "customer-rating": "customer rating",
    "rating": "customer rating",
    "address": "address",
    "location": "address",
    "phone number": "phone number",
    "phone-number": "phone number",
    "phone": "phone number",
    "family friendly": "family friendly",
    "family-friendly": "family friendly",
    "family-friendliness": "family friendly",
    "distance": "distance",
}


class BackendUnavailable(RuntimeError):
    """The completion endpoint could not produce a usable response."""


@dataclass
class ParseContext:
    """What the parser may assume about the conversation so far."""

    last_bot_question: tuple[str, str] | None = None
    discussed: set[str] = field(default_factory=set)


@dataclass
class ParseResult:
    label: Label
    predicates: list[Predicate] = field(default_factory=list)


@dataclass(frozen=True)
class Special:
    kind: str  # "another_option" | "view_history"
    ref: str | int | None = None


@dataclass
class NormalizedInput:
    """Reasoner-ready view of one parsed utterance."""

    requirements: list[Requirement] = field(default_factory=list)
    specials: Special | None = None
    no_preference: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class PriceThresholds:
    """Per-meal dollar brackets for mapping amounts to price categories."""

    cheap_below: float = 15.0
    expensive_above: float = 40.0

    def categorize(self, amount: float) -> str:
        if amount < self.cheap_below:
            return "cheap"
        if amount <= self.expensive_above:
            return "moderate"
        return "expensive"


# ---------------------------------------------------------------------------
# lexicon
# ---------------------------------------------------------------------------

FOOD_TYPE_WORDS = (
    "american",
    "chinese",
    "french",
    "greek",
    "indian",
    "italian",
    "japanese",
    "korean",
    "mediterranean",
    "mexican",
    "spanish",
    "thai",
    "vietnamese",
)

# multi-word venues first so "coffee shop" wins over the concept "coffee"
VENUE_WORDS = (
    ("coffee shop", "coffee shop"),
    ("coffee shops", "coffee shop"),
    ("fast food", "fast food"),
    ("restaurants", "restaurant"),
    ("restaurant", "restaurant"),
    ("bars", "bar"),
    ("bar", "bar"),
    ("pubs", "pub"),
    ("pub", "pub"),
)

# style concepts the parser surfaces as prefer/not_prefer
CONCEPT_WORDS = (
    ("bubble tea", "bubble tea"),
    ("noodles", "noodle"),
    ("noodle", "noodle"),
    ("drinks", "drink"),
    ("drink", "drink"),
    ("curry", "curry"),
    ("spicy", "spicy"),
    ("pizza", "pizza"),
    ("alcohol", "alcohol"),
    ("beer", "beer"),
    ("wine", "wine"),
    ("coffee", "coffee"),
)

# the generic drink concept defers to anything more specific
SPECIFIC_DRINKS = {"coffee", "beer", "alcohol", "wine", "bubble tea"}

MEAL_WORDS = re.compile(r"\b(dinner|lunch|breakfast|brunch|meal|dine)\b")

NEGATOR = re.compile(
    r"\b(\w+n't|not|no|never|without|avoid|hate|dislike|dont|cannot)\b"
)

CLAUSE_SPLIT = re.compile(
    r"([,.;!?]|\bbut\b|\bexcept\b|\bexcluding\b|\bother\s+than\b|\bapart\s+from\b)"
)
NEGATING_DELIMITERS = ("except", "excluding", "other than", "apart from")

CHEAP_WORDS = re.compile(
    r"\b(cheap(er|est)?|inexpensive|affordable|economical|budget[- ]friendly|"
    r"low[- ]?priced?|low\s+(price|cost|budget)|great[- ]value)\b"
)
MODERATE_WORDS = re.compile(
    r"\b(moderate(ly)?([- ]priced?)?|mid[- ]?range|medium[- ]priced?|reasonable|reasonably[- ]priced?)\b"
)
EXPENSIVE_WORDS = re.compile(
    r"\b(expensive|pricey|high[- ]end|upscale|fancy|luxurious)\b"
)
PRICE_CONTEXT = re.compile(r"\b(price[sd]?|priced|cost|costs|budget|pay|spend)\b")

RATING_HIGH = re.compile(
    r"\b(high(ly)?[- ]rat(ed|ing|ings)|good\s+(reviews?|ratings?|feedback)|"
    r"great\s+(reviews?|ratings?|feedback)|positive\s+(reviews?|feedback)|"
    r"top[- ]rated|five[- ]star|well[- ]reviewed|high\s+rating(s)?)\b"
)
RATING_LOW = re.compile(
    r"\b(low(ly)?[- ]rat(ed|ing|ings)|bad\s+(reviews?|ratings?)|poor(ly)?\s+rat(ed|ings?)|"
    r"one[- ]star|low\s+rating(s)?)\b"
)
RATING_CONTEXT = re.compile(r"\b(rating[s]?|rated|reviews?|score[s]?|stars?|feedback)\b")
AVERAGE_WORD = re.compile(r"\b(average|medium)\b")
BARE_HIGH = re.compile(r"\bhigh\b")
BARE_LOW = re.compile(r"\blow\b")

FAMILY_YES = re.compile(
    r"\b(family[- ]friendly|kid[- ]friendly|child[- ]friendly|family|kids?|children)\b"
)

ADDRESS_QUERY = re.compile(r"\b(address|located|location|where\s+(is|are|'s|was))\b")
PHONE_QUERY = re.compile(r"\b(phone|telephone|contact\s+number|call\s+them|number\s+to\s+call)\b")
DISTANCE_QUERY = re.compile(r"\b(how\s+far|distance|far\s+away|miles\s+away)\b")

NAME_QUERY_TRIGGER = re.compile(
    r"\b(recommend|suggest|looking\s+for|look\s+for|searching\s+for|find\s+me|"
    r"where\s+can\s+i\s+(find|get|go))\b"
)
PLACE_NOUN = re.compile(
    r"\b(restaurant|place|spot|somewhere|anywhere|something|venue|option|eatery|"
    r"bar|pub|cafe|shop|joint)s?\b"
)

ANOTHER_OPTION = re.compile(
    r"\b(another\s+(one|option|place|spot|recommendation|suggestion)|"
    r"other\s+(options?|recommendations?|suggestions?|ones?|choices?)|"
    r"something\s+else|next\s+(one|option)|anything\s+else)\b"
)

_ORDINALS = {
    "first": "first",
    "last": "last",
    "second": 2,
    "third": 3,
    "fourth": 4,
    "fifth": 5,
    "sixth": 6,
    "seventh": 7,
    "eighth": 8,
    "ninth": 9,
    "tenth": 10,
}
VIEW_HISTORY_PATTERNS = (
    re.compile(r"recommended\s+(?:me\s+)?(?:at\s+)?(?:the\s+)?(first|last|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth|\d+)(?:st|nd|rd|th)?\b"),
    re.compile(r"\b(first|last|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth|\d+)(?:st|nd|rd|th)?\s+(?:one\s+)?(?:that\s+)?(?:you\s+)?recommend(?:ed|ation)?\b"),
    re.compile(r"\bview[_ ]history\b.*?\b(first|last|\d+)\b"),
)

NO_PREFERENCE_PATTERNS = re.compile(
    r"(^no\b|\bno\s+preference\b|\bnot\s+looking\s+for\s+a\s+specific\b|"
    r"\bdon'?t\s+care\b|\bdoesn'?t\s+matter\b|\bwhatever\b|\bnot\s+really\b|"
    r"\bnot\s+particular\b|\bany(thing)?\s+(is\s+)?(fine|ok|okay|good|works)\b|"
    r"\bany\s+(food|kind|type|cuisine|price|budget|rating)\b|\bno\s+specific\b)"
)
ANY_ATTRIBUTE = re.compile(
    r"\bany\s+(food\s+type|food|cuisine|price\s+range|price|budget|"
    r"customer\s+rating|rating|establishment|family)\b"
)
_ANY_ATTRIBUTE_MAP = {
    "food type": "food type",
    "food": "food type",
    "cuisine": "food type",
    "price range": "price range",
    "price": "price range",
    "budget": "price range",
    "customer rating": "customer rating",
    "rating": "customer rating",
    "establishment": "establishment",
    "family": "family friendly",
}

THANK_PATTERN = re.compile(r"\b(thanks?|thank\s+you|thx|appreciate[d]?)\b")

_NUMBER_WORDS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
    "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14, "fifteen": 15,
    "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19,
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}
_NUMBER_WORD_RE = "|".join(_NUMBER_WORDS)
MONEY_DIGITS = re.compile(r"(?:\$\s*(\d+(?:\.\d+)?))|(?:\b(\d+(?:\.\d+)?)\s*(?:dollars?|bucks?|usd)\b)")
MONEY_WORDS = re.compile(
    rf"\b((?:(?:{_NUMBER_WORD_RE})(?:[\s-]+(?:{_NUMBER_WORD_RE}))*))\s+(?:dollars?|bucks?)\b"
)
STRICT_UPPER = re.compile(r"\b(less\s+than|under|below|cheaper\s+than)\b")
UPPER = re.compile(r"\b(at\s+most|no\s+more\s+than|within|up\s+to|max(imum)?)\b")
LOWER = re.compile(r"\b(more\s+than|over|above|at\s+least|minimum|starting\s+at)\b")


def _words_to_number(phrase: str) -> float | None:
    total = 0
    for word in re.split(r"[\s-]+", phrase.strip()):
        if word not in _NUMBER_WORDS:
            return None
        total += _NUMBER_WORDS[word]
    return float(total)


def _find_phrases(text: str, table) -> list[tuple[int, str]]:
    """Non-overlapping phrase matches as (position, canonical) pairs."""
    taken: list[tuple[int, int]] = []
    found: list[tuple[int, str]] = []
    for phrase, canonical in table:
        for match in re.finditer(rf"\b{re.escape(phrase)}\b", text):
            span = match.span()
            if any(s < span[1] and span[0] < e for s, e in taken):
                continue
            taken.append(span)
            found.append((span[0], canonical))
    return sorted(found)


@dataclass
class _Extraction:
    name_query: bool = False
    establishments: list[str] = field(default_factory=list)
    food_types: list[str] = field(default_factory=list)
    price: str | None = None
    price_negated: bool = False
    rating: str | None = None
    rating_negated: bool = False
    family: str | None = None
    queries: list[str] = field(default_factory=list)
    liked: list[str] = field(default_factory=list)
    disliked: list[str] = field(default_factory=list)
    neg_establishments: list[str] = field(default_factory=list)
    neg_food_types: list[str] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (
            self.name_query
            or self.establishments
            or self.food_types
            or self.price
            or self.rating
            or self.family
            or self.queries
            or self.liked
            or self.disliked
            or self.neg_establishments
            or self.neg_food_types
        )


class RuleParser:
    """Deterministic keyword/pattern backend, the offline stand-in."""

    def __init__(self, thresholds: PriceThresholds | None = None):
        self.thresholds = thresholds or PriceThresholds()

    def parse(self, utterance: str, ctx: ParseContext | None = None) -> ParseResult:
        if not utterance or not utterance.strip():
            raise ValueError("utterance must be non-empty")
        ctx = ctx or ParseContext()
        text = utterance.lower().strip()

        special = self._match_special(text)
        if special is not None:
            return ParseResult(Label.CONTENT, [special])

        extraction = self._extract(text, ctx)
        predicates = self._to_predicates(extraction)
        if predicates:
            return ParseResult(Label.CONTENT, predicates)

        marker = self._no_preference(text, ctx)
        if marker is not None:
            return ParseResult(Label.CONTENT, [marker])

        if THANK_PATTERN.search(text):
            return ParseResult(Label.THANK, [])
        return ParseResult(Label.IRRELEVANT, [])

    # -- specials ----------------------------------------------------------

    def _match_special(self, text: str) -> Predicate | None:
        for pattern in VIEW_HISTORY_PATTERNS:
            match = pattern.search(text)
            if match:
                ref = match.group(1)
                ref = str(_ORDINALS.get(ref, ref))
                return Predicate("view_history", (ref,))
        if ANOTHER_OPTION.search(text):
            return Predicate("another_option", ())
        return None

    # -- extraction --------------------------------------------------------

    def _clauses(self, text: str) -> list[tuple[str, bool]]:
        parts = CLAUSE_SPLIT.split(text)
        clauses: list[tuple[str, bool]] = []
        inherited_negation = False
        for part in parts:
            stripped = part.strip()
            if not stripped:
                continue
            if CLAUSE_SPLIT.fullmatch(part):
                inherited_negation = stripped in NEGATING_DELIMITERS
                continue
            negated = inherited_negation or bool(NEGATOR.search(stripped))
            clauses.append((stripped, negated))
            inherited_negation = False
        return clauses

    def _extract(self, text: str, ctx: ParseContext) -> _Extraction:
        out = _Extraction()
        for clause, negated in self._clauses(text):
            self._extract_clause(clause, negated, ctx, out)
        # the generic drink concept defers to a specific one anywhere in the turn
        if set(out.liked) & SPECIFIC_DRINKS or set(out.disliked) & SPECIFIC_DRINKS:
            out.liked = [c for c in out.liked if c != "drink"]
            out.disliked = [c for c in out.disliked if c != "drink"]
        return out

    def _extract_clause(
        self, clause: str, negated: bool, ctx: ParseContext, out: _Extraction
    ) -> None:
        # one shared scan so "coffee shop" (venue) beats "coffee" (concept)
        spans = _find_phrases(clause, tuple(VENUE_WORDS) + tuple(CONCEPT_WORDS))
        venue_canonicals = {canonical for _, canonical in VENUE_WORDS}
        venue_spans = [(p, c) for p, c in spans if c in venue_canonicals]
        concept_spans = [(p, c) for p, c in spans if c not in venue_canonicals]

        for _, venue in venue_spans:
            target = out.neg_establishments if negated else out.establishments
            if venue not in target:
                target.append(venue)
        if MEAL_WORDS.search(clause) and not negated:
            if "restaurant" not in out.establishments:
                out.establishments.append("restaurant")

        for food in self._food_types(clause):
            target = out.neg_food_types if negated else out.food_types
            if food not in target:
                target.append(food)

        price = self._price(clause, ctx)
        if price is not None:
            # a dollar amount carries its own bound ("no more than 20"),
            # so clause negation applies only to category words
            from_amount = self._money_amount(clause) is not None
            out.price, out.price_negated = price, negated and not from_amount

        rating = self._rating(clause, ctx)
        if rating is not None:
            out.rating, out.rating_negated = rating, negated

        if FAMILY_YES.search(clause):
            out.family = "no" if negated else "yes"

        if ADDRESS_QUERY.search(clause) and "address" not in out.queries:
            out.queries.append("address")
        if PHONE_QUERY.search(clause) and "phone number" not in out.queries:
            out.queries.append("phone number")
        if DISTANCE_QUERY.search(clause) and "distance" not in out.queries:
            out.queries.append("distance")

        if not negated and NAME_QUERY_TRIGGER.search(clause) and PLACE_NOUN.search(clause):
            out.name_query = True

        for _, concept in concept_spans:
            target = out.disliked if negated else out.liked
            if concept not in target:
                target.append(concept)

    def _food_types(self, clause: str) -> list[str]:
        found = []
        for word in FOOD_TYPE_WORDS:
            match = re.search(rf"\b{word}\b", clause)
            if match:
                found.append((match.start(), word))
        return [w for _, w in sorted(found)]

    def _price(self, clause: str, ctx: ParseContext) -> str | None:
        amount = self._money_amount(clause)
        if amount is not None:
            if STRICT_UPPER.search(clause):
                amount -= 0.01
            elif LOWER.search(clause):
                amount += 0.01
            return self.thresholds.categorize(amount)
        if CHEAP_WORDS.search(clause):
            return "cheap"
        if MODERATE_WORDS.search(clause):
            return "moderate"
        if EXPENSIVE_WORDS.search(clause):
            return "expensive"
        price_context = bool(PRICE_CONTEXT.search(clause)) or (
            ctx.last_bot_question is not None
            and ctx.last_bot_question[0] == "price range"
        )
        if price_context and AVERAGE_WORD.search(clause):
            return "moderate"
        if price_context and not RATING_CONTEXT.search(clause):
            if BARE_LOW.search(clause):
                return "cheap"
            if BARE_HIGH.search(clause):
                return "expensive"
        return None

    def _money_amount(self, clause: str) -> float | None:
        match = MONEY_DIGITS.search(clause)
        if match:
            return float(match.group(1) or match.group(2))
        match = MONEY_WORDS.search(clause)
        if match:
            return _words_to_number(match.group(1))
        return None

    def _rating(self, clause: str, ctx: ParseContext) -> str | None:
        if RATING_HIGH.search(clause):
            return "high"
        if RATING_LOW.search(clause):
            return "low"
        rating_context = bool(RATING_CONTEXT.search(clause)) or (
            ctx.last_bot_question is not None
            and ctx.last_bot_question[0] == "customer rating"
        )
        if rating_context and not PRICE_CONTEXT.search(clause):
            if AVERAGE_WORD.search(clause):
                return "average"
            if BARE_HIGH.search(clause):
                return "high"
            if BARE_LOW.search(clause):
                return "low"
        return None

    # -- assembly ----------------------------------------------------------

    def _to_predicates(self, ext: _Extraction) -> list[Predicate]:
        preds: list[Predicate] = []
        if ext.name_query:
            preds.append(Predicate("restaurant-name", (QUERY,)))
        if ext.establishments:
            preds.append(Predicate("establishment", tuple(ext.establishments)))
        if ext.food_types:
            preds.append(Predicate("food type", tuple(ext.food_types)))
        if ext.price is not None and not ext.price_negated:
            preds.append(Predicate("price range", (ext.price,)))
        if ext.rating is not None and not ext.rating_negated:
            preds.append(Predicate("customer rating", (ext.rating,)))
        if ext.family is not None:
            preds.append(Predicate("family-friendly", (ext.family,)))
        for attribute in ext.queries:
            preds.append(Predicate(attribute, (QUERY,)))
        if ext.liked:
            preds.append(Predicate(PREFER, tuple(ext.liked)))
        disliked = list(ext.disliked)
        disliked += [v for v in ext.neg_food_types if v not in disliked]
        disliked += [v for v in ext.neg_establishments if v not in disliked]
        if ext.price is not None and ext.price_negated:
            disliked.append(ext.price)
        if ext.rating is not None and ext.rating_negated:
            disliked.append(ext.rating)
        if disliked:
            preds.append(Predicate(NOT_PREFER, tuple(dict.fromkeys(disliked))))
        return preds

    def _no_preference(self, text: str, ctx: ParseContext) -> Predicate | None:
        explicit = ANY_ATTRIBUTE.search(text)
        if explicit:
            attribute = _ANY_ATTRIBUTE_MAP[re.sub(r"\s+", " ", explicit.group(1))]
            return Predicate("no_preference", (attribute,))
        if ctx.last_bot_question is not None and NO_PREFERENCE_PATTERNS.search(text):
            return Predicate("no_preference", (ctx.last_bot_question[0],))
        return None


# ---------------------------------------------------------------------------
# LLM backend
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PromptExample:
    sentence: str
    predicates: str


def default_prompt_examples_path() -> Path:
    return Path(__file__).parent / "data" / "prompt_examples.json"


def load_prompt_examples(source: str | Path | None = None) -> list[PromptExample]:
    path = Path(source) if source is not None else default_prompt_examples_path()
    entries = json.loads(path.read_text(encoding="utf-8"))
    return [PromptExample(e["sentence"], e["predicates"]) for e in entries]


PROMPT_INSTRUCTIONS = (
    "Translate the sentence into predicates capturing its meaning for a "
    "restaurant concierge.\n"
    "Allowed predicates: restaurant-name, food type, establishment, "
    "price range, customer rating, address, phone number, family-friendly, "
    "distance, prefer, not_prefer, no_preference, another_option, "
    "view_history.\n"
    "Use the value query for information the user is asking for. "
    "Answer thank for pure gratitude and irrelevant for off-topic sentences.\n"
)


def build_prompt(
    examples: list[PromptExample],
    utterance: str,
    ctx: ParseContext | None = None,
) -> str:
    """Few-shot prompt: instructions, `sentence ### predicates` lines, stub."""
    if not examples:
        raise ValueError("example set must be non-empty")
    lines = [PROMPT_INSTRUCTIONS]
    for example in examples:
        lines.append(f"{example.sentence} ### {example.predicates}")
    if ctx is not None and ctx.last_bot_question is not None:
        stub = f"Bot: {ctx.last_bot_question[1]} User: {utterance} ###"
    else:
        stub = f"{utterance} ###"
    lines.append(stub)
    return "\n".join(lines)


class HttpCompletionClient:
    """Minimal completion-endpoint client (OpenAI-style request shape)."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 20.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.timeout = timeout

    def complete(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "prompt": prompt,
            "max_tokens": 128,
            "temperature": 0,
            "stop": ["\n"],
        }
        try:
            response = requests.post(
                f"{self.base_url}/completions",
                json=body,
                headers=headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
            return response.json()["choices"][0]["text"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise BackendUnavailable(str(exc)) from exc


class ReplayClient:
    """Replays recorded completions, keyed by the utterance in the stub."""

    def __init__(self, completions: dict[str, str]):
        self.completions = completions

    def complete(self, prompt: str) -> str:
        stripped = prompt.rstrip()
        for utterance, completion in self.completions.items():
            if stripped.endswith(f"{utterance} ###"):
                return completion
        raise BackendUnavailable("no recorded completion for this prompt")


def load_replay_fixture(source: str | Path) -> dict[str, str]:
    """Fixture format: JSON object mapping utterance to completion text."""
    return json.loads(Path(source).read_text(encoding="utf-8"))


class LlmParser:
    """Adapter around a completion client; degrades to irrelevant on failure."""

    def __init__(self, client, examples: list[PromptExample] | None = None):
        self.client = client
        self.examples = examples if examples is not None else load_prompt_examples()

    def parse(self, utterance: str, ctx: ParseContext | None = None) -> ParseResult:
        if not utterance or not utterance.strip():
            raise ValueError("utterance must be non-empty")
        prompt = build_prompt(self.examples, utterance, ctx)
        for attempt in (1, 2):
            try:
                completion = self.client.complete(prompt)
                return _parse_completion(completion)
            except (BackendUnavailable, MalformedTerm) as exc:
                logger.warning("parse attempt %d failed: %s", attempt, exc)
        return ParseResult(Label.IRRELEVANT, [])


def _parse_completion(completion: str) -> ParseResult:
    text = completion.strip()
    if not text:
        return ParseResult(Label.IRRELEVANT, [])
    lowered = text.lower().strip(" .")
    if lowered == "irrelevant":
        return ParseResult(Label.IRRELEVANT, [])
    if lowered == "thank":
        return ParseResult(Label.THANK, [])
    return ParseResult(Label.CONTENT, parse_term_list(text))


def parse_utterance(
    utterance: str, ctx: ParseContext | None = None, backend=None
) -> ParseResult:
    """Run whichever backend is configured; the rule backend by default."""
    backend = backend or RuleParser()
    return backend.parse(utterance, ctx)


# ---------------------------------------------------------------------------
# filter: wire format -> reasoner terms
# ---------------------------------------------------------------------------


def normalize_parse(
    result: ParseResult, ctx: ParseContext | None = None
) -> NormalizedInput:
    """Rewrite parser output into require/not_require requirements.

    Attribute predicates become require terms (values re-normalized with
    attribute context, so "average" means moderate for prices), prefer and
    not_prefer ride along for commonsense expansion, and the special
    predicates are routed out of band. Duplicate attributes merge; the
    query sentinel never survives inside an exclusion.
    """
    normalized = NormalizedInput()
    if result.label is not Label.CONTENT:
        return normalized
    merged: dict[tuple[str, str], Requirement] = {}

    def add(polarity: Polarity, attribute: str, values: list[str]) -> None:
        key = (polarity.value, attribute)
        if key in merged:
            existing = merged[key]
            existing.values.extend(v for v in values if v not in existing.values)
        else:
            req = Requirement(polarity, attribute, values)
            merged[key] = req
            normalized.requirements.append(req)

    for pred in result.predicates:
        name = normalize_name(pred.name)
        if name == "another_option":
            normalized.specials = Special("another_option")
        elif name == "view_history":
            ref = pred.args[0] if pred.args else "last"
            normalized.specials = Special(
                "view_history", int(ref) if ref.isdigit() else ref
            )
        elif name == "no_preference":
            attribute = WIRE_TO_ATTRIBUTE.get(
                normalize_name(pred.args[0]) if pred.args else ""
            )
            if attribute and attribute not in normalized.no_preference:
                normalized.no_preference.append(attribute)
        elif name in (PREFER, NOT_PREFER):
            values = [normalize_value(v) for v in pred.args if v != QUERY]
            if values:
                add(Polarity.REQUIRE, name, values)
        elif name in WIRE_TO_ATTRIBUTE:
            attribute = WIRE_TO_ATTRIBUTE[name]
            values = [normalize_value(v, attribute) for v in pred.args]
            values = [v for v in values if v]
            if values:
                add(Polarity.REQUIRE, attribute, values)
        else:
            logger.debug("dropping unknown predicate %r", name)
    return normalized
