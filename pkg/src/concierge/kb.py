"""Restaurant knowledgebase: nine attributes per place, immutable after load."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .terms import normalize_value

ATTRIBUTES = (
    "name",
    "food type",
    "establishment",
    "price range",
    "customer rating",
    "address",
    "phone number",
    "family friendly",
    "distance",
)

PRICE_RANGE_VALUES = ("cheap", "moderate", "expensive")
CUSTOMER_RATING_VALUES = ("low", "average", "high")
FAMILY_FRIENDLY_VALUES = ("yes", "no")

# Attributes with a closed value domain (used for validation and for
# no-preference answers, which insert the full domain).
FINITE_DOMAINS: dict[str, tuple[str, ...]] = {
    "price range": PRICE_RANGE_VALUES,
    "customer rating": CUSTOMER_RATING_VALUES,
    "family friendly": FAMILY_FRIENDLY_VALUES,
}


class KbFormatError(ValueError):
    """A record is missing an attribute or holds an out-of-domain value."""

    def __init__(self, message: str, line: int | None = None):
        where = f" (record {line})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line


class UnknownAttribute(KeyError):
    def __init__(self, attribute: str):
        super().__init__(attribute)
        self.attribute = attribute


@dataclass(frozen=True)
class Place:
    id: int
    name: str
    food_type: str
    establishment: str
    price_range: str
    customer_rating: str
    address: str
    phone: str
    family_friendly: str
    distance: float


_FIELD_BY_ATTRIBUTE = {
    "name": "name",
    "food type": "food_type",
    "establishment": "establishment",
    "price range": "price_range",
    "customer rating": "customer_rating",
    "address": "address",
    "phone number": "phone",
    "family friendly": "family_friendly",
    "distance": "distance",
}


@dataclass(frozen=True)
class Knowledgebase:
    """Ordered, immutable collection of places. Iteration follows file order."""

    places: tuple[Place, ...]

    def __iter__(self):
        return iter(self.places)

    def __len__(self) -> int:
        return len(self.places)

    def get(self, place_id: int) -> Place:
        for place in self.places:
            if place.id == place_id:
                return place
        raise KeyError(place_id)


def attribute_of(place: Place, attribute: str) -> str:
    """The stored value for one of the nine attributes, as a normalized atom."""
    field = _FIELD_BY_ATTRIBUTE.get(attribute)
    if field is None:
        raise UnknownAttribute(attribute)
    value = getattr(place, field)
    if attribute == "distance":
        return f"{value:g}"
    return value


def _build_place(record: dict, index: int) -> Place:
    for attribute in ATTRIBUTES:
        if attribute not in record or record[attribute] in (None, ""):
            raise KbFormatError(f"missing attribute {attribute!r}", index)
    values = {a: normalize_value(str(record[a])) for a in ATTRIBUTES if a != "distance"}
    for attribute, domain in FINITE_DOMAINS.items():
        if values[attribute] not in domain:
            raise KbFormatError(
                f"{attribute!r} must be one of {domain}, got {values[attribute]!r}",
                index,
            )
    try:
        distance = float(record["distance"])
    except (TypeError, ValueError):
        raise KbFormatError(f"distance must be a number, got {record['distance']!r}", index)
    if distance < 0:
        raise KbFormatError(f"distance must be non-negative, got {distance}", index)
    raw_id = record.get("id", index)
    try:
        place_id = int(raw_id)
    except (TypeError, ValueError):
        raise KbFormatError(f"id must be an integer, got {raw_id!r}", index)
    return Place(
        id=place_id,
        name=values["name"],
        food_type=values["food type"],
        establishment=values["establishment"],
        price_range=values["price range"],
        customer_rating=values["customer rating"],
        address=values["address"],
        phone=values["phone number"],
        family_friendly=values["family friendly"],
        distance=distance,
    )


def load_kb(source: str | Path) -> Knowledgebase:
    """Load a knowledgebase from a JSON array or a CSV file with a header row.

    Records may carry an optional "id" and an optional "synthetic" key;
    "synthetic" lists attributes whose values are documented placeholders
    rather than ground truth and is ignored by the loader.
    """
    path = Path(source)
    if path.suffix.lower() == ".csv":
        with path.open(newline="", encoding="utf-8") as fh:
            records = list(csv.DictReader(fh))
    else:
        text = path.read_text(encoding="utf-8").strip()
        records = json.loads(text) if text else []
        if not isinstance(records, list):
            raise KbFormatError("top-level JSON value must be an array")
    places = [_build_place(record, index) for index, record in enumerate(records)]
    ids = [p.id for p in places]
    if len(set(ids)) != len(ids):
        raise KbFormatError("duplicate place ids")
    return Knowledgebase(places=tuple(places))


def default_kb_path() -> Path:
    """The bundled six-place fixture knowledgebase."""
    return Path(__file__).parent / "data" / "kb_utdallas.json"
