"""Weighted sampling of labeled sentences from a tree.

Traversal rules: order nodes expand children left to right; pick-one
nodes sample one child by weight; exchangeable nodes expand children in a
uniformly random order; a node with dropout d is skipped with probability
d before expansion (entity leaves are never skipped). Fixed leaves sample
a phrase proportionally to its dictionary count. Entity leaves draw a
surface form from the lexicon and, when embeddings are enabled and the
form is a single in-vocabulary token, re-sample the fill from the form
plus its k nearest neighbors with probability proportional to cosine
similarity (the form itself weighs 1.0).

Randomness comes from a caller-seeded Mersenne Twister (random.Random);
only Random.random() is consumed, so byte-identical output for a given
seed is reproducible across platforms and Python versions.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from .corpus import AnnotatedSentence, Dataset, EntityLexicon
from .east import East, ENTITY, EXCHANGEABLE, FIXED, ORDER, PICKONE
from .embeddings import EmbeddingTable, k_nearest, k_nearest_among
from .errors import MissingLexiconError

OUTPUT_FORMATS = ("conll", "records")


@dataclass(frozen=True)
class GenerationConfig:
    """Sampling knobs; seed is mandatory so every run is reproducible."""

    seed: int
    k: int = 5
    factor: int = 2
    count: int | None = None  # per-intent absolute count; overrides factor
    use_embeddings: bool = True
    apply_dropout: bool = True
    weighted_lexicon: bool = False  # draw lexicon forms by frequency, not uniformly
    neighbors_within_lexicon: bool = False  # search neighbors in the slot lexicon only

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.factor < 1:
            raise ValueError("factor must be >= 1")
        if self.count is not None and self.count < 1:
            raise ValueError("count must be >= 1")


@dataclass(frozen=True)
class GeneratedSentence:
    tokens: tuple[str, ...]
    slots: tuple[str, ...]
    intent: str
    provenance: tuple[str, ...]  # structural branch choices along the traversal


@dataclass
class GenerationStats:
    """Batch sidecar: per-intent counts plus substitution bookkeeping."""

    sentences_per_intent: Counter = field(default_factory=Counter)
    knn_fills: int = 0
    oov_bypasses: int = 0
    multi_token_bypasses: int = 0
    total: int = 0
    distinct: int = 0

    @property
    def duplicate_rate(self) -> float:
        return 1.0 - self.distinct / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "sentences_per_intent": dict(self.sentences_per_intent),
            "knn_fills": self.knn_fills,
            "oov_substitution_bypasses": self.oov_bypasses,
            "multi_token_bypasses": self.multi_token_bypasses,
            "total": self.total,
            "duplicate_rate": round(self.duplicate_rate, 6),
        }


def _rand_index(rng: random.Random, n: int) -> int:
    return int(rng.random() * n)


def _weighted_index(rng: random.Random, weights: Sequence[float]) -> int:
    r = rng.random() * sum(weights)
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if r < acc:
            return i
    return len(weights) - 1  # float residue lands in the last bucket


def _permutation(rng: random.Random, n: int) -> list[int]:
    idx = list(range(n))
    for i in range(n - 1, 0, -1):
        j = _rand_index(rng, i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx


class _Filler:
    """Per-batch caches: fixed-node phrase lists and entity candidate pools."""

    def __init__(self, lexicon: EntityLexicon, table: EmbeddingTable | None,
                 config: GenerationConfig, stats: GenerationStats | None):
        self.lexicon = lexicon
        self.table = table
        self.config = config
        self.stats = stats
        self._phrases: dict[int, tuple[list[str], list[int]]] = {}
        self._forms: dict[str, tuple[list[str], list[int]]] = {}
        self._pools: dict[str, tuple[list[str], list[float]]] = {}

    def phrases(self, node) -> tuple[list[str], list[int]]:
        cached = self._phrases.get(id(node))
        if cached is None:
            cached = (list(node.dictionary), list(node.dictionary.values()))
            self._phrases[id(node)] = cached
        return cached

    def forms(self, slot: str) -> tuple[list[str], list[int]]:
        cached = self._forms.get(slot)
        if cached is None:
            counter = self.lexicon.entries.get(slot)
            if not counter:
                raise MissingLexiconError(slot)
            cached = (list(counter), list(counter.values()))
            self._forms[slot] = cached
        return cached

    def pool(self, candidate: str, slot: str) -> tuple[list[str], list[float]]:
        key = f"{slot}\x00{candidate}" if self.config.neighbors_within_lexicon else candidate
        cached = self._pools.get(key)
        if cached is None:
            if self.config.neighbors_within_lexicon:
                pool = [f for f in self.forms(slot)[0] if " " not in f]
                neighbors = k_nearest_among(self.table, candidate, self.config.k, pool)
            else:
                neighbors = k_nearest(self.table, candidate, self.config.k)
            tokens = [candidate]
            sims = [1.0]
            for token, sim in neighbors:
                if sim > 0.0:  # similarity doubles as sampling weight
                    tokens.append(token)
                    sims.append(sim)
            cached = (tokens, sims)
            self._pools[key] = cached
        return cached

    def fill(self, slot: str, rng: random.Random) -> str:
        forms, counts = self.forms(slot)
        if self.config.weighted_lexicon:
            candidate = forms[_weighted_index(rng, counts)]
        else:
            candidate = forms[_rand_index(rng, len(forms))]
        if not self.config.use_embeddings or self.table is None:
            return candidate
        if " " in candidate:  # no composition rule for multi-token forms
            if self.stats:
                self.stats.multi_token_bypasses += 1
            return candidate
        if candidate not in self.table:
            if self.stats:
                self.stats.oov_bypasses += 1
            return candidate
        tokens, sims = self.pool(candidate, slot)
        chosen = tokens[_weighted_index(rng, sims)]
        if self.stats and chosen != candidate:
            self.stats.knn_fills += 1
        return chosen


def _expand(node, filler: _Filler, rng: random.Random, apply_dropout: bool,
            tokens: list[str], slots: list[str], prov: list[str]) -> None:
    if apply_dropout and node.dropout:
        if rng.random() < node.dropout:
            prov.append("drop")
            return
        prov.append("keep")
    kind = node.kind
    if kind == ORDER:
        for child in node.children:
            _expand(child, filler, rng, apply_dropout, tokens, slots, prov)
    elif kind == PICKONE:
        i = _weighted_index(rng, [c.weight for c in node.children])
        prov.append(f"pick:{i}")
        _expand(node.children[i], filler, rng, apply_dropout, tokens, slots, prov)
    elif kind == EXCHANGEABLE:
        perm = _permutation(rng, len(node.children))
        prov.append("perm:" + ",".join(map(str, perm)))
        for i in perm:
            _expand(node.children[i], filler, rng, apply_dropout, tokens, slots, prov)
    elif kind == FIXED:
        phrases, counts = filler.phrases(node)
        j = _weighted_index(rng, counts) if len(phrases) > 1 else 0
        prov.append(f"phrase:{j}")
        parts = phrases[j].split(" ")
        tokens.extend(parts)
        slots.extend("O" for _ in parts)
    elif kind == ENTITY:
        parts = filler.fill(node.slot, rng).split(" ")
        tokens.append(parts[0])
        slots.append(f"B-{node.slot}")
        for part in parts[1:]:
            tokens.append(part)
            slots.append(f"I-{node.slot}")
    else:
        raise ValueError(f"unknown node kind {kind!r}")


def generate_one(
    tree: East,
    lexicon: EntityLexicon,
    table: EmbeddingTable | None,
    config: GenerationConfig,
    rng: random.Random,
    _filler: _Filler | None = None,
) -> GeneratedSentence:
    """Sample one labeled sentence by a weighted traversal of the tree."""
    filler = _filler or _Filler(lexicon, table, config, None)
    tokens: list[str] = []
    slots: list[str] = []
    prov: list[str] = []
    _expand(tree.root, filler, rng, config.apply_dropout, tokens, slots, prov)
    return GeneratedSentence(tuple(tokens), tuple(slots), tree.intent, tuple(prov))


def _intent_seed(seed: int, intent: str) -> int:
    digest = hashlib.sha256(f"{seed}\x00{intent}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def generate_batch(
    trees: dict[str, East],
    dataset: Dataset | None,
    config: GenerationConfig,
    table: EmbeddingTable | None = None,
    *,
    lexicon: EntityLexicon | None = None,
    stats: GenerationStats | None = None,
) -> list[GeneratedSentence]:
    """Sample `factor` times each intent's training size (or `count` each).

    Intents are processed in sorted order with a sub-seed derived from
    (seed, intent), so output is fully determined by the config seed and
    independent of tree-map ordering. Duplicates are legitimate samples.
    """
    if lexicon is None:
        if dataset is None:
            raise ValueError("either a dataset or a lexicon is required")
        lexicon = dataset.lexicon
    intent_sizes = dataset.intent_counts() if dataset is not None else {}

    out: list[GeneratedSentence] = []
    for intent in sorted(trees):
        tree = trees[intent]
        if config.count is not None:
            n = config.count
        else:
            if intent not in intent_sizes:
                raise ValueError(
                    f"no training size for intent {intent!r}; pass a dataset or --count"
                )
            n = config.factor * intent_sizes[intent]
        rng = random.Random(_intent_seed(config.seed, intent))
        filler = _Filler(lexicon, table, config, stats)
        for _ in range(n):
            out.append(generate_one(tree, lexicon, table, config, rng, filler))
        if stats:
            stats.sentences_per_intent[intent] += n
    if stats:
        stats.total += len(out)
        stats.distinct = len({(s.tokens, s.slots, s.intent) for s in out})
    return out


def emit(
    sentences: Sequence[GeneratedSentence | AnnotatedSentence],
    sink: TextIO,
    fmt: str,
) -> None:
    """Write sentences in an ingestion format so output can be re-parsed."""
    if fmt == "conll":
        for s in sentences:
            if s.intent is not None:
                sink.write(f"# intent: {s.intent}\n")
            for token, tag in zip(s.tokens, s.slots):
                sink.write(f"{token}\t{tag}\n")
            sink.write("\n")
    elif fmt == "records":
        for s in sentences:
            record: dict = {"tokens": list(s.tokens), "slots": list(s.slots)}
            if s.intent is not None:
                record["intent"] = s.intent
            sink.write(json.dumps(record, ensure_ascii=False) + "\n")
    else:
        raise ValueError(f"unknown output format {fmt!r}")
