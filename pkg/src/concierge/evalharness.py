"""Meaning-representation accuracy metric and corpus runner.

A predicted predicate counts as correct only when its name and argument
multiset exactly match a gold predicate, matched one-to-one. The accuracy
of one example is matched / max(|gold|, |predicted|), so spurious extras
cost as much as misses. Precision and recall are reported alongside.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .parse_frontend import ParseContext, RuleParser
from .terms import Label, Predicate, parse_term_list


class CorpusFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MrExample:
    sentence: str
    gold: tuple[Predicate, ...]


@dataclass
class ExampleScore:
    sentence: str
    accuracy: float
    precision: float
    recall: float
    matched: int
    gold_size: int
    predicted_size: int


@dataclass
class CorpusReport:
    mean_accuracy: float
    mean_precision: float
    mean_recall: float
    examples: list[ExampleScore] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "mean_accuracy": self.mean_accuracy,
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "examples": [
                {
                    "sentence": e.sentence,
                    "accuracy": e.accuracy,
                    "precision": e.precision,
                    "recall": e.recall,
                    "matched": e.matched,
                    "gold": e.gold_size,
                    "predicted": e.predicted_size,
                }
                for e in self.examples
            ],
        }
        return json.dumps(payload, indent=2)


def _key(pred: Predicate) -> tuple[str, tuple[str, ...]]:
    return (pred.name, tuple(sorted(pred.args)))


def match_count(gold, predicted) -> int:
    """Size of the best one-to-one matching under exact-equality."""
    gold_keys = Counter(_key(p) for p in gold)
    predicted_keys = Counter(_key(p) for p in predicted)
    return sum((gold_keys & predicted_keys).values())


def score_example(gold, predicted) -> float:
    """Fraction in [0, 1]; 1.0 iff the sets match as multisets."""
    denominator = max(len(gold), len(predicted))
    if denominator == 0:
        return 1.0
    return match_count(gold, predicted) / denominator


def _result_predicates(result) -> list[Predicate]:
    if result.label is Label.CONTENT:
        return list(result.predicates)
    return [Predicate(result.label.value, ())]


def load_corpus(source: str | Path) -> list[MrExample]:
    """JSON lines of {"sentence": ..., "gold": ["pred(args)", ...]}."""
    path = Path(source)
    if not path.exists():
        raise CorpusFormatError(f"corpus file not found: {path}")
    examples: list[MrExample] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            sentence = record["sentence"]
            gold: list[Predicate] = []
            for term in record["gold"]:
                gold.extend(parse_term_list(term))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"line {lineno}: {exc}") from exc
        if not gold:
            raise CorpusFormatError(f"line {lineno}: empty gold set")
        examples.append(MrExample(sentence, tuple(gold)))
    if not examples:
        raise CorpusFormatError(f"corpus is empty: {path}")
    return examples


def run_corpus(source: str | Path, backend=None) -> CorpusReport:
    """Parse every sentence with the backend and score against gold."""
    backend = backend or RuleParser()
    examples = load_corpus(source)
    scores: list[ExampleScore] = []
    for example in examples:
        result = backend.parse(example.sentence, ParseContext())
        predicted = _result_predicates(result)
        matched = match_count(example.gold, predicted)
        scores.append(
            ExampleScore(
                sentence=example.sentence,
                accuracy=score_example(example.gold, predicted),
                precision=matched / len(predicted) if predicted else 1.0,
                recall=matched / len(example.gold),
                matched=matched,
                gold_size=len(example.gold),
                predicted_size=len(predicted),
            )
        )
    n = len(scores)
    return CorpusReport(
        mean_accuracy=sum(s.accuracy for s in scores) / n,
        mean_precision=sum(s.precision for s in scores) / n,
        mean_recall=sum(s.recall for s in scores) / n,
        examples=scores,
    )


def default_corpus_path() -> Path:
    return Path(__file__).parent / "data" / "mini_corpus.jsonl"
