"""Entity-aware syntax tree model: validation, JSON round trip, enumeration.

A tree has one intent and an ordered node structure. Control nodes steer
traversal (order = concatenate children, pickone = choose one child,
exchangeable = children in any order); content leaves emit tokens (fixed =
a phrase from a counted dictionary, entity = a slot-tagged surface form).
Every node carries a weight in (0, 1] and an optional dropout in [0, 1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Iterator

from .corpus import Literal, Placeholder, Segment, SentenceTemplate
from .errors import LanguageSizeExceeded, TreeSchemaError, TreeValidationError

ORDER = "order"
PICKONE = "pickone"
EXCHANGEABLE = "exchangeable"
FIXED = "fixed"
ENTITY = "entity"

CONTROL_KINDS = (ORDER, PICKONE, EXCHANGEABLE)
CONTENT_KINDS = (FIXED, ENTITY)
ROOT_KINDS = (ORDER, PICKONE)

WEIGHT_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Node:
    kind: str
    weight: float = 1.0
    dropout: float | None = None
    children: tuple["Node", ...] = ()
    dictionary: dict[str, int] | None = None
    slot: str | None = None


def order(*children: Node, weight: float = 1.0, dropout: float | None = None) -> Node:
    return Node(ORDER, weight, dropout, children=tuple(children))


def pick_one(*children: Node, weight: float = 1.0, dropout: float | None = None) -> Node:
    return Node(PICKONE, weight, dropout, children=tuple(children))


def exchangeable(
    *children: Node, weight: float = 1.0, dropout: float | None = None
) -> Node:
    return Node(EXCHANGEABLE, weight, dropout, children=tuple(children))


def fixed(
    dictionary: dict[str, int], weight: float = 1.0, dropout: float | None = None
) -> Node:
    return Node(FIXED, weight, dropout, dictionary=dict(dictionary))


def entity(slot: str, weight: float = 1.0) -> Node:
    return Node(ENTITY, weight, slot=slot)


@dataclass(frozen=True)
class East:
    intent: str
    root: Node


def iter_nodes(tree: East) -> Iterator[tuple[str, Node]]:
    """Yield (path, node) pairs in pre-order; paths look like root.children[1]."""
    stack = [("root", tree.root)]
    while stack:
        path, node = stack.pop()
        yield path, node
        for i in range(len(node.children) - 1, -1, -1):
            stack.append((f"{path}.children[{i}]", node.children[i]))


def entity_slots(tree: East) -> set[str]:
    return {node.slot for _, node in iter_nodes(tree) if node.kind == ENTITY}


def validate(tree: East) -> list[str]:
    """Return one message per broken invariant; an empty list means valid."""
    violations: list[str] = []
    if not isinstance(tree.intent, str) or not tree.intent:
        violations.append("root: intent must be a non-empty string")
    if tree.root.kind not in ROOT_KINDS:
        violations.append(f"root: root kind must be order or pickone, got {tree.root.kind!r}")

    for path, node in iter_nodes(tree):
        if node.kind not in CONTROL_KINDS + CONTENT_KINDS:
            violations.append(f"{path}: unknown kind {node.kind!r}")
            continue
        if not isinstance(node.weight, (int, float)) or not 0 < node.weight <= 1:
            violations.append(f"{path}: weight {node.weight!r} outside (0, 1]")
        if node.dropout is not None and not 0 <= node.dropout < 1:
            violations.append(f"{path}: dropout {node.dropout!r} outside [0, 1)")

        if node.kind in CONTENT_KINDS:
            if node.children:
                violations.append(f"{path}: content node has children")
        else:
            if not node.children:
                violations.append(f"{path}: control node has no children")
            if node.dictionary is not None:
                violations.append(f"{path}: control node has a dictionary")
            if node.slot is not None:
                violations.append(f"{path}: control node has a slot")

        if node.kind == FIXED:
            if node.slot is not None:
                violations.append(f"{path}: fixed node has a slot")
            if not node.dictionary:
                violations.append(f"{path}: fixed node dictionary is empty")
            else:
                for phrase, count in node.dictionary.items():
                    if not phrase or not all(phrase.split(" ")):
                        violations.append(f"{path}: malformed phrase {phrase!r}")
                    if not isinstance(count, int) or count < 1:
                        violations.append(
                            f"{path}: phrase {phrase!r} count {count!r} below 1"
                        )
        elif node.kind == ENTITY:
            if node.dictionary is not None:
                violations.append(f"{path}: entity node has a dictionary")
            if not node.slot:
                violations.append(f"{path}: entity node has no slot label")
            if node.dropout is not None:
                violations.append(f"{path}: entity node must not have dropout")
        elif node.kind == PICKONE:
            total = sum(c.weight for c in node.children if isinstance(c.weight, (int, float)))
            if node.children and abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
                violations.append(
                    f"{path}: pickone child weights sum to {total!r}, expected 1"
                )
    return violations


def check_valid(tree: East) -> East:
    """Raise TreeValidationError unless the tree is valid; returns it otherwise."""
    violations = validate(tree)
    if violations:
        raise TreeValidationError(violations)
    return tree


# --- serialization ---------------------------------------------------------

_NODE_FIELDS = {"kind", "weight", "dropout", "children", "dictionary", "slot"}


def _node_to_obj(node: Node) -> dict:
    obj: dict = {"kind": node.kind, "weight": node.weight}
    if node.dropout is not None:
        obj["dropout"] = node.dropout
    if node.kind in CONTROL_KINDS:
        obj["children"] = [_node_to_obj(c) for c in node.children]
    elif node.kind == FIXED:
        obj["dictionary"] = dict(node.dictionary or {})
    elif node.kind == ENTITY:
        obj["slot"] = node.slot
    return obj


def serialize(tree: East) -> str:
    """Render a tree as a JSON document (inverse of deserialize)."""
    doc = {"intent": tree.intent, "root": _node_to_obj(tree.root)}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _parse_node(obj, path: str) -> Node:
    if not isinstance(obj, dict):
        raise TreeSchemaError("node must be an object", path)
    unknown = set(obj) - _NODE_FIELDS
    if unknown:
        raise TreeSchemaError(f"unknown fields {sorted(unknown)}", path)
    kind = obj.get("kind")
    if kind not in CONTROL_KINDS + CONTENT_KINDS:
        raise TreeSchemaError(f"unknown node kind {kind!r}", path)

    weight = obj.get("weight")
    if weight is not None and not isinstance(weight, (int, float)):
        raise TreeSchemaError(f"weight must be a number, got {weight!r}", path)
    dropout = obj.get("dropout")
    if dropout is not None and not isinstance(dropout, (int, float)):
        raise TreeSchemaError(f"dropout must be a number, got {dropout!r}", path)

    children: tuple[Node, ...] = ()
    dictionary = None
    slot = None
    if kind in CONTROL_KINDS:
        raw_children = obj.get("children")
        if not isinstance(raw_children, list) or not raw_children:
            raise TreeSchemaError("control node needs a non-empty children array", path)
        children = tuple(
            _parse_node(c, f"{path}.children[{i}]") for i, c in enumerate(raw_children)
        )
        if kind == PICKONE:
            children = _distribute_pickone_weights(children, raw_children)
    elif kind == FIXED:
        dictionary = obj.get("dictionary")
        if not isinstance(dictionary, dict):
            raise TreeSchemaError("fixed node needs a dictionary object", path)
        for phrase, count in dictionary.items():
            if not isinstance(count, int):
                raise TreeSchemaError(
                    f"dictionary count for {phrase!r} must be an integer", path
                )
    else:
        slot = obj.get("slot")
        if not isinstance(slot, str):
            raise TreeSchemaError("entity node needs a slot string", path)

    return Node(
        kind=kind,
        weight=float(weight) if weight is not None else 1.0,
        dropout=float(dropout) if dropout is not None else None,
        children=children,
        dictionary=dict(dictionary) if dictionary is not None else None,
        slot=slot,
    )


def _distribute_pickone_weights(children: tuple[Node, ...], raw: list) -> tuple[Node, ...]:
    # hand-authored documents may omit weights; unspecified siblings share
    # the probability mass the specified ones leave over
    unspecified = [i for i, obj in enumerate(raw) if "weight" not in obj]
    if not unspecified:
        return children
    remaining = 1.0 - sum(
        children[i].weight for i, obj in enumerate(raw) if "weight" in obj
    )
    share = remaining / len(unspecified)
    out = list(children)
    for i in unspecified:
        c = out[i]
        out[i] = Node(c.kind, share, c.dropout, c.children, c.dictionary, c.slot)
    return tuple(out)


def deserialize(text: str) -> East:
    """Parse and validate a tree document; raises on schema or invariant errors."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeSchemaError(f"invalid document: {exc.msg}", "root") from exc
    if not isinstance(doc, dict):
        raise TreeSchemaError("document must be an object", "root")
    unknown = set(doc) - {"intent", "root"}
    if unknown:
        raise TreeSchemaError(f"unknown fields {sorted(unknown)}", "root")
    intent = doc.get("intent")
    if not isinstance(intent, str):
        raise TreeSchemaError("intent must be a string", "root")
    if "root" not in doc:
        raise TreeSchemaError("missing root node", "root")
    tree = East(intent=intent, root=_parse_node(doc["root"], "root"))
    return check_valid(tree)


# --- exhaustive enumeration (test oracle for traversal semantics) ----------


@dataclass(frozen=True)
class TemplateLanguage:
    """The finite set of templates a tree can produce."""

    templates: frozenset[tuple[Segment, ...]]

    def __contains__(self, item) -> bool:
        if isinstance(item, SentenceTemplate):
            item = item.segments
        return tuple(item) in self.templates

    def __len__(self) -> int:
        return len(self.templates)

    def __iter__(self) -> Iterator[tuple[Segment, ...]]:
        return iter(self.templates)

    def render(self) -> list[str]:
        return sorted(
            SentenceTemplate(segments).render() for segments in self.templates
        )


def enumerate_language(
    tree: East, include_dropout_variants: bool = False, limit: int = 100_000
) -> TemplateLanguage:
    """Every template reachable by any traversal of the tree.

    With include_dropout_variants, a node with dropout > 0 also contributes
    its absence. Aborts with LanguageSizeExceeded when any working set
    outgrows `limit`.
    """

    def guard(variants: set) -> set:
        if len(variants) > limit:
            raise LanguageSizeExceeded(limit, len(variants))
        return variants

    def expand(node: Node) -> set[tuple[Segment, ...]]:
        if node.kind == FIXED:
            variants = {
                tuple(Literal(t) for t in phrase.split(" "))
                for phrase in node.dictionary or {}
            }
        elif node.kind == ENTITY:
            variants = {(Placeholder(node.slot),)}
        elif node.kind == PICKONE:
            variants = set()
            for child in node.children:
                variants |= expand(child)
                guard(variants)
        elif node.kind == ORDER:
            variants = _concat(node.children)
        elif node.kind == EXCHANGEABLE:
            variants = set()
            for perm in permutations(node.children):
                variants |= _concat(perm)
                guard(variants)
        else:
            raise ValueError(f"unknown node kind {node.kind!r}")
        if include_dropout_variants and node.dropout:
            variants = variants | {()}
        return guard(variants)

    def _concat(children: Iterable[Node]) -> set[tuple[Segment, ...]]:
        acc: set[tuple[Segment, ...]] = {()}
        for child in children:
            child_variants = expand(child)
            acc = {head + tail for head in acc for tail in child_variants}
            guard(acc)
        return acc

    return TemplateLanguage(frozenset(expand(tree.root)))


def expand_templates(
    templates: Iterable[tuple[Segment, ...]], forms_by_slot: dict[str, list[str]]
) -> set[tuple[str, ...]]:
    """Ground templates into token sequences using lexicon surface forms."""
    sentences: set[tuple[str, ...]] = set()
    for segments in templates:
        partial: list[tuple[str, ...]] = [()]
        for segment in segments:
            if isinstance(segment, Literal):
                partial = [p + (segment.text,) for p in partial]
            else:
                fills = [tuple(f.split(" ")) for f in forms_by_slot[segment.label]]
                partial = [p + f for p in partial for f in fills]
        sentences.update(partial)
    return sentences
