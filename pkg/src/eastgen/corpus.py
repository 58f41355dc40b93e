"""Corpus ingestion: parse annotated sentences, abstract entities into templates.

Two input formats are supported. The column format is one ``token<ws>tag``
pair per line with blank-line sentence separators and an optional
``# intent: <label>`` header per sentence. The record format is one JSON
object per line with keys ``tokens``, ``slots`` and optional ``intent``.
Both carry slot annotations as IOB tags ("O", "B-<label>", "I-<label>").
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import CorpusParseError, CorpusValidationError, EmptyDatasetError

INTENT_HEADER = "# intent:"


@dataclass(frozen=True)
class Literal:
    """A single surface token outside any entity span."""

    text: str


@dataclass(frozen=True)
class Placeholder:
    """One entity span, abstracted to its slot label."""

    label: str


Segment = Literal | Placeholder


@dataclass(frozen=True)
class AnnotatedSentence:
    """A tokenized utterance with aligned IOB slot tags and an optional intent."""

    tokens: tuple[str, ...]
    slots: tuple[str, ...]
    intent: str | None = None

    def __post_init__(self):
        if len(self.tokens) != len(self.slots):
            raise CorpusValidationError(
                f"{len(self.tokens)} tokens vs {len(self.slots)} slot tags",
                sentence=0,
                position=0,
            )


@dataclass(frozen=True)
class SentenceTemplate:
    """An entity-abstracted token sequence; identical templates merge by count."""

    segments: tuple[Segment, ...]
    source_count: int = 1

    def placeholder_labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.segments if isinstance(s, Placeholder))

    def render(self) -> str:
        """Human-readable form with ``<label>`` placeholders."""
        parts = [
            s.text if isinstance(s, Literal) else f"<{s.label}>" for s in self.segments
        ]
        return " ".join(parts)


@dataclass
class EntityLexicon:
    """Per-slot multiset of entity surface forms observed in training.

    Surface forms are space-joined token sequences; multi-token spans keep
    their internal spaces.
    """

    entries: dict[str, Counter[str]] = field(default_factory=dict)

    def add(self, label: str, surface: str, count: int = 1) -> None:
        self.entries.setdefault(label, Counter())[surface] += count

    def forms(self, label: str) -> list[str]:
        """Distinct surface forms for a slot, in first-observed order."""
        return list(self.entries.get(label, ()))

    def labels(self) -> list[str]:
        return list(self.entries)

    def merge(self, other: "EntityLexicon") -> None:
        for label, counter in other.entries.items():
            for surface, count in counter.items():
                self.add(label, surface, count)


@dataclass
class Dataset:
    """Parsed corpus: raw sentences plus per-intent template groups and lexicon."""

    sentences: list[AnnotatedSentence]
    by_intent: dict[str, list[SentenceTemplate]]
    lexicon: EntityLexicon

    def intent_counts(self) -> dict[str, int]:
        return {
            intent: sum(t.source_count for t in templates)
            for intent, templates in self.by_intent.items()
        }


def iob_violations(slots: Iterable[str]) -> list[tuple[int, str]]:
    """Return (position, message) pairs for every broken IOB constraint."""
    violations = []
    prev_label = None  # label of the span continuing into this position, if any
    for i, tag in enumerate(slots):
        if tag == "O":
            prev_label = None
        elif tag.startswith("B-") and len(tag) > 2:
            prev_label = tag[2:]
        elif tag.startswith("I-") and len(tag) > 2:
            label = tag[2:]
            if prev_label != label:
                violations.append((i, f"I-{label} does not continue a {label} span"))
            prev_label = label
        else:
            violations.append((i, f"malformed slot tag {tag!r}"))
            prev_label = None
    return violations


def _check_sentence(sentence: AnnotatedSentence, index: int) -> None:
    if not sentence.tokens:
        raise CorpusValidationError("sentence has no tokens", index, 0)
    for i, token in enumerate(sentence.tokens):
        # tokens must survive space-joining in phrases, lexica and emitted files
        if not token or any(c.isspace() for c in token):
            raise CorpusValidationError(
                f"empty or whitespace-containing token {token!r}", index, i
            )
    for position, message in iob_violations(sentence.slots):
        raise CorpusValidationError(message, index, position)


def parse_conll(text: str) -> list[AnnotatedSentence]:
    """Parse column-format text into validated sentences.

    Raises CorpusParseError for malformed lines and CorpusValidationError
    for illegal IOB transitions.
    """
    sentences: list[AnnotatedSentence] = []
    tokens: list[str] = []
    tags: list[str] = []
    intent: str | None = None

    def flush():
        nonlocal intent
        if tokens:
            sentence = AnnotatedSentence(tuple(tokens), tuple(tags), intent)
            _check_sentence(sentence, len(sentences))
            sentences.append(sentence)
            tokens.clear()
            tags.clear()
            intent = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            flush()
            continue
        if stripped.startswith(INTENT_HEADER):
            intent = stripped[len(INTENT_HEADER):].strip()
            continue
        fields = stripped.split()
        if len(fields) != 2:
            raise CorpusParseError(
                f"expected 'token tag', got {len(fields)} fields: {stripped!r}", lineno
            )
        tokens.append(fields[0])
        tags.append(fields[1])
    flush()
    return sentences


def parse_records(text: str) -> list[AnnotatedSentence]:
    """Parse record-format text (one JSON object per line) into sentences."""
    sentences: list[AnnotatedSentence] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusParseError(f"invalid record: {exc.msg}", lineno) from exc
        if not isinstance(record, dict):
            raise CorpusParseError("record is not an object", lineno)
        unknown = set(record) - {"tokens", "slots", "intent"}
        if unknown:
            raise CorpusParseError(f"unknown fields {sorted(unknown)}", lineno)
        try:
            tokens = record["tokens"]
            slots = record["slots"]
        except KeyError as exc:
            raise CorpusParseError(f"missing field {exc.args[0]!r}", lineno) from exc
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise CorpusParseError("'tokens' must be an array of strings", lineno)
        if not isinstance(slots, list) or not all(isinstance(s, str) for s in slots):
            raise CorpusParseError("'slots' must be an array of strings", lineno)
        if len(tokens) != len(slots):
            raise CorpusParseError(
                f"{len(tokens)} tokens vs {len(slots)} slot tags", lineno
            )
        intent = record.get("intent")
        if intent is not None and not isinstance(intent, str):
            raise CorpusParseError("'intent' must be a string", lineno)
        sentence = AnnotatedSentence(tuple(tokens), tuple(slots), intent)
        _check_sentence(sentence, len(sentences))
        sentences.append(sentence)
    return sentences


def abstract_entities(
    sentence: AnnotatedSentence,
) -> tuple[SentenceTemplate, list[tuple[str, str]]]:
    """Replace each maximal entity span with a placeholder for its label.

    Returns the template and the extracted (label, surface form) pairs in
    reading order; multi-token spans yield space-joined surface forms.
    """
    segments: list[Segment] = []
    pairs: list[tuple[str, str]] = []
    span_label: str | None = None
    span_tokens: list[str] = []

    def close_span():
        nonlocal span_label
        if span_label is not None:
            segments.append(Placeholder(span_label))
            pairs.append((span_label, " ".join(span_tokens)))
            span_label = None
            span_tokens.clear()

    for token, tag in zip(sentence.tokens, sentence.slots):
        if tag == "O":
            close_span()
            segments.append(Literal(token))
        elif tag.startswith("B-"):
            close_span()
            span_label = tag[2:]
            span_tokens.append(token)
        else:  # I- continuation, validated upstream
            span_tokens.append(token)
    close_span()
    return SentenceTemplate(tuple(segments)), pairs


def reinsert_entities(
    template: SentenceTemplate, pairs: list[tuple[str, str]]
) -> tuple[str, ...]:
    """Inverse of abstract_entities: fill placeholders with surfaces in order."""
    tokens: list[str] = []
    it: Iterator[tuple[str, str]] = iter(pairs)
    for segment in template.segments:
        if isinstance(segment, Literal):
            tokens.append(segment.text)
        else:
            label, surface = next(it)
            if label != segment.label:
                raise ValueError(f"pair label {label!r} != placeholder {segment.label!r}")
            tokens.extend(surface.split(" "))
    return tuple(tokens)


def build_dataset(
    sentences: Iterable[AnnotatedSentence], synthetic_intent: str | None = None
) -> Dataset:
    """Group entity-abstracted templates by intent and collect the lexicon.

    Identical templates within an intent merge with their source counts
    summed. Sentences without an intent take `synthetic_intent` (for
    NER-style corpora); if none is supplied they are an error.
    """
    sentences = list(sentences)
    if not sentences:
        raise EmptyDatasetError("empty dataset")

    lexicon = EntityLexicon()
    by_intent: dict[str, dict[tuple[Segment, ...], int]] = {}
    for index, sentence in enumerate(sentences):
        intent = sentence.intent if sentence.intent is not None else synthetic_intent
        if intent is None:
            raise CorpusValidationError(
                "sentence has no intent and no synthetic intent was supplied",
                index,
                0,
            )
        template, pairs = abstract_entities(sentence)
        group = by_intent.setdefault(intent, {})
        group[template.segments] = group.get(template.segments, 0) + 1
        for label, surface in pairs:
            lexicon.add(label, surface)

    grouped = {
        intent: [
            SentenceTemplate(segments, count) for segments, count in templates.items()
        ]
        for intent, templates in by_intent.items()
    }
    return Dataset(sentences=sentences, by_intent=grouped, lexicon=lexicon)
