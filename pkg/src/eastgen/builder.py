"""Automatic tree construction from a parsed dataset.

Per intent the pipeline is: measure entity occurrence, pick the main
entities, lay out a spine of entity leaves (the most common main-entity
arrangement), merge every template's literal runs into the regions between
spine entities, then derive weights and dropout from the retained counts
and wrap reversible adjacent entity pairs in exchangeable nodes.

Templates whose main-entity sequence cannot be aligned with the spine
(even allowing adjacent transpositions that later become exchangeable
nodes) are kept intact as alternatives under a pick-one at the root.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .corpus import Dataset, Literal, Placeholder, SentenceTemplate
from .east import (
    East,
    ENTITY,
    Node,
    ORDER,
    check_valid,
    entity,
    exchangeable,
    fixed,
    order,
    pick_one,
)

log = logging.getLogger(__name__)

# canonical run item tags: a run is the material between two spine entities,
# stored as (("lit", phrase) | ("ent", label), ...) with consecutive
# literal tokens joined into one phrase
_LIT = "lit"
_ENT = "ent"

Run = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class BuilderConfig:
    """Knobs for tree construction; the threshold must lie in (0, 1)."""

    main_entity_threshold: float = 0.5
    # keep only the single highest-occurrence main entity instead of every
    # label above the threshold (alternative interpretation, off by default)
    singleton_main: bool = False

    def __post_init__(self):
        if not 0 < self.main_entity_threshold < 1:
            raise ValueError(
                f"main entity threshold {self.main_entity_threshold} outside (0, 1)"
            )


def entity_occurrence(templates: Sequence[SentenceTemplate]) -> dict[str, Fraction]:
    """Fraction of the group's sentences containing each slot label.

    Counts template multiplicity (source_count); exact rationals.
    """
    if not templates:
        raise ValueError("empty template group")
    total = sum(t.source_count for t in templates)
    counts: dict[str, int] = {}
    for template in templates:
        for label in dict.fromkeys(template.placeholder_labels()):
            counts[label] = counts.get(label, 0) + template.source_count
    return {label: Fraction(count, total) for label, count in counts.items()}


def determine_main_entities(occ: dict[str, Fraction], t: float) -> list[str]:
    """Labels with occurrence above t, most frequent first (ties lexicographic).

    When no label exceeds t, the single most frequent label is returned.
    """
    if not occ:
        raise ValueError("empty occurrence table")
    if not 0 < t < 1:
        raise ValueError(f"threshold {t} outside (0, 1)")
    ranked = sorted(occ, key=lambda label: (-occ[label], label))
    above = [label for label in ranked if occ[label] > t]
    return above if above else [ranked[0]]


def _canonical_run(segments: Iterable) -> Run:
    items: list[tuple[str, str]] = []
    buf: list[str] = []
    for segment in segments:
        if isinstance(segment, Literal):
            buf.append(segment.text)
        else:
            if buf:
                items.append((_LIT, " ".join(buf)))
                buf = []
            items.append((_ENT, segment.label))
    if buf:
        items.append((_LIT, " ".join(buf)))
    return tuple(items)


def _template_profile(
    template: SentenceTemplate, main: frozenset[str]
) -> tuple[tuple[str, ...], tuple[Run, ...]]:
    """Split a template at its main-entity placeholders.

    Returns the main-entity label sequence and the len(labels)+1 runs of
    material around them (non-main placeholders stay inside runs).
    """
    labels: list[str] = []
    runs: list[list] = [[]]
    for segment in template.segments:
        if isinstance(segment, Placeholder) and segment.label in main:
            labels.append(segment.label)
            runs.append([])
        else:
            runs[-1].append(segment)
    return tuple(labels), tuple(_canonical_run(r) for r in runs)


def _swap_decomposition(
    seq: tuple[str, ...], spine: tuple[str, ...]
) -> frozenset[int] | None:
    """Positions i where swapping spine (i, i+1) yields seq, or None.

    Only disjoint adjacent transpositions of unequal labels qualify; an
    empty set means seq equals the spine.
    """
    if len(seq) != len(spine):
        return None
    pairs: set[int] = set()
    i = 0
    while i < len(spine):
        if seq[i] == spine[i]:
            i += 1
        elif (
            i + 1 < len(spine)
            and spine[i] != spine[i + 1]
            and seq[i] == spine[i + 1]
            and seq[i + 1] == spine[i]
        ):
            pairs.add(i)
            i += 2
        else:
            return None
    return frozenset(pairs)


def _greedy_disjoint(positions: Iterable[int]) -> frozenset[int]:
    kept: list[int] = []
    for p in sorted(set(positions)):
        if not kept or p - kept[-1] >= 2:
            kept.append(p)
    return frozenset(kept)


@dataclass
class _Alignment:
    """Accumulator for one entity arrangement: counts per region run."""

    labels: tuple[str, ...]
    regions: list[Counter] = field(default_factory=list)  # len(labels) + 1
    count: int = 0

    def __post_init__(self):
        if not self.regions:
            self.regions = [Counter() for _ in range(len(self.labels) + 1)]

    def add(self, runs: tuple[Run, ...], count: int) -> None:
        self.count += count
        for region, run in zip(self.regions, runs):
            region[run] += count


@dataclass
class TreeScaffold:
    """A tree under construction: the spine plan plus retained counts.

    Produced by skeleton(), fed through grow(), and turned into a
    finished tree by finalize_weights().
    """

    intent: str
    main: tuple[str, ...]
    spine: _Alignment
    swap_pairs: frozenset[int]
    branches: dict[tuple[str, ...], _Alignment] = field(default_factory=dict)

    @property
    def spine_labels(self) -> tuple[str, ...]:
        return self.spine.labels

    def initial_tree(self) -> East:
        """The bare spine as a tree: an order root over entity leaves."""
        return East(self.intent, order(*(entity(l) for l in self.spine.labels)))


def _plan_swaps(
    spine: tuple[str, ...],
    profiles: Sequence[tuple[tuple[str, ...], tuple[Run, ...]]],
) -> frozenset[int]:
    """Adjacent spine transpositions that may merge and later become
    exchangeable nodes.

    A pair stays accepted only while both orders are realized by spine
    matchers and no matcher puts content between the two entities; the
    loop re-evaluates until stable because dropping a pair reclassifies
    its templates as branches.
    """
    swapsets = [_swap_decomposition(labels, spine) for labels, _ in profiles]
    candidates = {p for s in swapsets if s for p in s}
    accepted = _greedy_disjoint(candidates)
    while True:
        cohort = [
            i
            for i, (_, runs) in enumerate(profiles)
            if swapsets[i] is not None
            and swapsets[i] <= accepted
            and all(runs[p + 1] == () for p in accepted)
        ]
        stable = frozenset(
            p
            for p in accepted
            if any(p in swapsets[i] for i in cohort)
            and any(p not in swapsets[i] for i in cohort)
        )
        if stable == accepted:
            return accepted
        accepted = stable


def skeleton(
    main: Sequence[str], templates: Sequence[SentenceTemplate], intent: str = ""
) -> TreeScaffold:
    """Plan the spine: the modal main-entity arrangement over the group.

    Multiplicity-weighted mode; ties resolve to the arrangement of the
    earliest template.
    """
    main_set = frozenset(main)
    profiles = [_template_profile(t, main_set) for t in templates]

    seq_counts: dict[tuple[str, ...], int] = {}
    first_seen: dict[tuple[str, ...], int] = {}
    for i, (template, (labels, _)) in enumerate(zip(templates, profiles)):
        seq_counts[labels] = seq_counts.get(labels, 0) + template.source_count
        first_seen.setdefault(labels, i)
    spine = max(seq_counts, key=lambda s: (seq_counts[s], -first_seen[s]))

    return TreeScaffold(
        intent=intent,
        main=tuple(main),
        spine=_Alignment(spine),
        swap_pairs=_plan_swaps(spine, profiles),
    )


def grow(scaffold: TreeScaffold, template: SentenceTemplate) -> TreeScaffold:
    """Merge one template into the scaffold.

    A template whose main-entity sequence equals the spine (possibly via
    planned transpositions, with nothing between the swapped entities)
    feeds the spine regions; anything else merges into a root-level
    branch keyed by its full placeholder sequence.
    """
    labels, runs = _template_profile(template, frozenset(scaffold.main))
    swaps = _swap_decomposition(labels, scaffold.spine.labels)
    if (
        swaps is not None
        and swaps <= scaffold.swap_pairs
        and all(runs[p + 1] == () for p in scaffold.swap_pairs)
    ):
        scaffold.spine.add(runs, template.source_count)
        return scaffold

    full = template.placeholder_labels()
    branch = scaffold.branches.get(full)
    if branch is None:
        branch = scaffold.branches[full] = _Alignment(full)
    _, full_runs = _template_profile(template, frozenset(full))
    branch.add(full_runs, template.source_count)
    return scaffold


def _run_shape(run: Run) -> tuple[tuple[str, ...], tuple[bool, ...]]:
    labels = tuple(value for kind, value in run if kind == _ENT)
    occupancy = [False] * (len(labels) + 1)
    slot = 0
    for kind, _ in run:
        if kind == _LIT:
            occupancy[slot] = True
        else:
            slot += 1
    return labels, tuple(occupancy)


def _group_node(
    shape: tuple[tuple[str, ...], tuple[bool, ...]],
    rows: list[tuple[Run, int]],
    weight: float,
) -> Node:
    labels, occupancy = shape
    if not labels:
        dictionary: dict[str, int] = {}
        for run, count in rows:
            phrase = run[0][1]
            dictionary[phrase] = dictionary.get(phrase, 0) + count
        return fixed(dictionary, weight=weight)

    slot_dicts: list[dict[str, int]] = [{} for _ in range(len(labels) + 1)]
    for run, count in rows:
        slot = 0
        for kind, value in run:
            if kind == _LIT:
                slot_dicts[slot][value] = slot_dicts[slot].get(value, 0) + count
            else:
                slot += 1
    children = []
    for i in range(len(labels) + 1):
        if occupancy[i]:
            children.append(fixed(slot_dicts[i]))
        if i < len(labels):
            children.append(entity(labels[i]))
    return order(*children, weight=weight)


def _region_node(runs: Counter, sentence_count: int) -> Node | None:
    """Lower one region's observed runs to a node, or None if always empty.

    Multiple run shapes become a pick-one weighted by how often each was
    seen; sentences with nothing in the region contribute dropout.
    """
    empty = runs.get((), 0)
    present = [(run, count) for run, count in runs.items() if run]
    if not present:
        return None
    present_total = sum(count for _, count in present)
    dropout = empty / sentence_count if empty else None

    groups: dict[tuple, list[tuple[Run, int]]] = {}
    for run, count in present:
        groups.setdefault(_run_shape(run), []).append((run, count))

    if len(groups) == 1:
        shape, rows = next(iter(groups.items()))
        return replace(_group_node(shape, rows, 1.0), dropout=dropout)
    children = tuple(
        _group_node(shape, rows, sum(c for _, c in rows) / present_total)
        for shape, rows in groups.items()
    )
    return pick_one(*children, dropout=dropout)


def _alignment_node(alignment: _Alignment, weight: float):
    children = []
    for i in range(len(alignment.labels) + 1):
        region = _region_node(alignment.regions[i], alignment.count)
        if region is not None:
            children.append(region)
        if i < len(alignment.labels):
            children.append(entity(alignment.labels[i]))
    return order(*children, weight=weight)


def finalize_weights(scaffold: TreeScaffold, total_sentences: int) -> East:
    """Derive node weights and dropout from the retained counts.

    Weights normalize per pick-one sibling set; dropout divides empty-run
    counts by the alignment's sentence count. Exchangeable wrapping is a
    separate pass (detect_exchangeable).
    """
    alignments: list[_Alignment] = []
    if scaffold.spine.count:
        alignments.append(scaffold.spine)
    alignments.extend(scaffold.branches.values())
    grown = sum(a.count for a in alignments)
    if not grown:
        raise ValueError("nothing grown: no templates merged into this scaffold")
    if grown != total_sentences:
        raise ValueError(
            f"grown sentence count {grown} != stated total {total_sentences}"
        )

    if len(alignments) == 1:
        root = _alignment_node(alignments[0], 1.0)
    else:
        root = pick_one(
            *(_alignment_node(a, a.count / grown) for a in alignments)
        )
    return East(scaffold.intent, root)


def detect_exchangeable(tree: East, templates: Sequence[SentenceTemplate]) -> East:
    """Wrap adjacent entity-leaf pairs realized in both orders.

    A template realizes (A, B) when it contains an A placeholder directly
    followed by a B placeholder; pairs observed both ways become
    exchangeable nodes.
    """
    adjacent: set[tuple[str, str]] = set()
    for template in templates:
        for a, b in zip(template.segments, template.segments[1:]):
            if isinstance(a, Placeholder) and isinstance(b, Placeholder):
                adjacent.add((a.label, b.label))

    def rewrite(node):
        children = tuple(rewrite(c) for c in node.children)
        if node.kind == ORDER:
            wrapped = []
            i = 0
            while i < len(children):
                c = children[i]
                n = children[i + 1] if i + 1 < len(children) else None
                if (
                    n is not None
                    and c.kind == ENTITY
                    and n.kind == ENTITY
                    and c.slot != n.slot
                    and (c.slot, n.slot) in adjacent
                    and (n.slot, c.slot) in adjacent
                ):
                    wrapped.append(exchangeable(c, n))
                    i += 2
                else:
                    wrapped.append(c)
                    i += 1
            children = tuple(wrapped)
        return replace(node, children=children) if node.children else node

    return East(tree.intent, rewrite(tree.root))


def build(dataset: Dataset, config: BuilderConfig | None = None) -> dict[str, East]:
    """Construct one validated tree per intent in the dataset."""
    config = config or BuilderConfig()
    trees: dict[str, East] = {}
    for intent, templates in dataset.by_intent.items():
        if not templates:
            log.warning("intent %r has no templates; skipped", intent)
            continue
        occ = entity_occurrence(templates)
        if occ:
            main = determine_main_entities(occ, config.main_entity_threshold)
            if config.singleton_main:
                main = main[:1]
        else:
            main = []
        scaffold = skeleton(main, templates, intent=intent)
        for template in templates:
            grow(scaffold, template)
        total = sum(t.source_count for t in templates)
        tree = finalize_weights(scaffold, total)
        tree = detect_exchangeable(tree, templates)
        trees[intent] = check_valid(tree)
    return trees
