"""Independent oracles and fixture builders shared across the test suite.

Everything here recomputes expectations from first principles (brute-force
scans, exhaustive enumeration, direct probability products) so the tests
never trust the code paths they check.
"""

from __future__ import annotations

import math
import random
from dataclasses import replace
from itertools import permutations

import sre_constants
import sre_parse

from eastgen import (
    East,
    EntityLexicon,
    entity,
    exchangeable,
    fixed,
    order,
    pick_one,
)
from eastgen.east import ENTITY, EXCHANGEABLE, FIXED, Node, ORDER, PICKONE

# --- brute-force nearest neighbors (pure python, no numpy) ------------------


def brute_force_knn(vectors: dict[str, list[float]], query: str, k: int):
    q = vectors[query]
    nq = math.sqrt(sum(x * x for x in q))

    def cos(v):
        dot = sum(x * y for x, y in zip(q, v))
        return dot / (nq * math.sqrt(sum(x * x for x in v)))

    scored = [(t, cos(v)) for t, v in vectors.items() if t != query]
    scored.sort(key=lambda ts: (-ts[1], ts[0]))
    return scored[:k]


# --- finite-regex language enumeration (from the compiled pattern itself) ---


def regex_language(pattern: str) -> set[str]:
    """All strings a finite (repetition-free) pattern accepts."""
    return set(_expand_sequence(sre_parse.parse(pattern)))


def _expand_sequence(seq) -> list[str]:
    parts = [""]
    for op, arg in seq:
        variants = _expand_opcode(op, arg)
        parts = [p + v for p in parts for v in variants]
    return parts


def _expand_opcode(op, arg) -> list[str]:
    if op is sre_constants.LITERAL:
        return [chr(arg)]
    if op is sre_constants.AT:
        return [""]
    if op is sre_constants.SUBPATTERN:
        return _expand_sequence(arg[3])
    if op is sre_constants.BRANCH:
        return [v for branch in arg[1] for v in _expand_sequence(branch)]
    if op is sre_constants.MAX_REPEAT:
        lo, hi, sub = arg
        if hi is sre_constants.MAXREPEAT or hi > 1:
            raise AssertionError("unbounded repetition is outside the dialect")
        base = _expand_sequence(sub)
        out = [""] if lo == 0 else []
        if hi == 1:
            out.extend(base)
        return out
    if op is sre_constants.IN:
        # the parser folds single-char alternations into literal classes
        out = []
        for sub_op, sub_arg in arg:
            if sub_op is not sre_constants.LITERAL:
                raise AssertionError(f"class item {sub_op} is outside the dialect")
            out.append(chr(sub_arg))
        return out
    raise AssertionError(f"opcode {op} is outside the dialect")


def bundle_language(bundle) -> set[str]:
    lang: set[str] = set()
    for pattern in bundle.patterns:
        lang |= regex_language(pattern)
    return lang


# --- exact structural path distribution (mirrors provenance encoding) -------


def path_distribution(tree: East, apply_dropout: bool = True) -> dict[tuple, float]:
    """Exact probability of every traversal provenance, by direct product."""

    def expand(node: Node) -> list[tuple[tuple, float]]:
        paths = kind_paths(node)
        if apply_dropout and node.dropout:
            d = node.dropout
            out = [(("drop",), d)]
            out.extend((("keep",) + p, (1 - d) * pr) for p, pr in paths)
            return out
        return paths

    def kind_paths(node: Node) -> list[tuple[tuple, float]]:
        if node.kind == ORDER:
            return sequence(node.children)
        if node.kind == PICKONE:
            total = sum(c.weight for c in node.children)
            out = []
            for i, child in enumerate(node.children):
                for p, pr in expand(child):
                    out.append(((f"pick:{i}",) + p, node.children[i].weight / total * pr))
            return out
        if node.kind == EXCHANGEABLE:
            n = len(node.children)
            base = 1.0 / math.factorial(n)
            out = []
            for perm in permutations(range(n)):
                tag = "perm:" + ",".join(map(str, perm))
                for p, pr in sequence(tuple(node.children[i] for i in perm)):
                    out.append(((tag,) + p, base * pr))
            return out
        if node.kind == FIXED:
            total = sum(node.dictionary.values())
            return [
                ((f"phrase:{j}",), count / total)
                for j, count in enumerate(node.dictionary.values())
            ]
        if node.kind == ENTITY:
            return [((), 1.0)]
        raise AssertionError(node.kind)

    def sequence(children) -> list[tuple[tuple, float]]:
        acc = [((), 1.0)]
        for child in children:
            acc = [(p + q, pr * qs) for p, pr in acc for q, qs in expand(child)]
        return acc

    dist: dict[tuple, float] = {}
    for path, prob in expand(tree.root):
        dist[path] = dist.get(path, 0.0) + prob
    return dist


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def structural_path_count(tree: East, with_dropout: bool = True) -> int:
    def count(node: Node) -> int:
        if node.kind == ORDER:
            c = math.prod(count(ch) for ch in node.children)
        elif node.kind == PICKONE:
            c = sum(count(ch) for ch in node.children)
        elif node.kind == EXCHANGEABLE:
            c = math.factorial(len(node.children)) * math.prod(
                count(ch) for ch in node.children
            )
        elif node.kind == FIXED:
            c = len(node.dictionary)
        else:
            c = 1
        if with_dropout and node.dropout:
            c += 1
        return c

    return count(tree.root)


# --- random valid trees ------------------------------------------------------


SLOTS = ("city", "color")


def small_lexicon() -> EntityLexicon:
    lexicon = EntityLexicon()
    for form in ("paris", "oslo"):
        lexicon.add("city", form)
    for form in ("red", "deep blue"):
        lexicon.add("color", form)
    return lexicon


class _Phrases:
    def __init__(self):
        self.n = 0

    def next(self, rng: random.Random) -> str:
        self.n += 1
        words = [f"w{self.n}"]
        if rng.random() < 0.3:
            words.append(f"x{self.n}")
        return " ".join(words)


def random_tree(
    seed: int,
    *,
    allow_dropout: bool = True,
    with_entities: bool = True,
    max_depth: int = 3,
    intent: str = "random",
) -> East:
    """A random valid tree with globally unique fixed phrases."""
    rng = random.Random(seed)
    phrases = _Phrases()

    def dropout() -> float | None:
        if allow_dropout and rng.random() < 0.3:
            return round(rng.uniform(0.1, 0.6), 3)
        return None

    def leaf() -> Node:
        if with_entities and rng.random() < 0.3:
            return entity(rng.choice(SLOTS))
        dictionary = {
            phrases.next(rng): rng.randint(1, 3)
            for _ in range(rng.randint(1, 3))
        }
        return fixed(dictionary, dropout=dropout())

    def weighted(children: tuple[Node, ...]) -> tuple[Node, ...]:
        counts = [rng.randint(1, 4) for _ in children]
        total = sum(counts)
        return tuple(replace(c, weight=n / total) for c, n in zip(children, counts))

    def node(depth: int) -> Node:
        if depth >= max_depth or rng.random() < 0.4:
            return leaf()
        kind = rng.choice((ORDER, PICKONE, EXCHANGEABLE))
        n = rng.randint(2, 3) if kind != ORDER else rng.randint(1, 3)
        children = tuple(node(depth + 1) for _ in range(n))
        if kind == ORDER:
            return order(*children, dropout=dropout())
        if kind == EXCHANGEABLE:
            return exchangeable(*children, dropout=dropout())
        return pick_one(*weighted(children), dropout=dropout())

    kind = rng.choice((ORDER, PICKONE))
    count = rng.randint(1, 3) if kind == ORDER else rng.randint(2, 3)
    children = tuple(node(1) for _ in range(count))
    root = order(*children) if kind == ORDER else pick_one(*weighted(children))
    return East(intent, root)


def ground_truth_world() -> tuple[dict[str, East], EntityLexicon]:
    """Five hand-built trees plus a lexicon; the reference generator for
    synthetic corpora in the scale tests."""
    trees = {
        "find_flight": East(
            "find_flight",
            order(
                fixed({"book a flight": 3, "find flights": 2, "search flights": 1}),
                fixed({"from": 6}),
                entity("city"),
                fixed({"to": 6}),
                entity("city"),
                fixed({"tomorrow": 2, "next week": 1}, dropout=0.5),
            ),
        ),
        "weather": East(
            "weather",
            order(
                fixed({"how is": 2, "what's": 2}),
                fixed({"the weather in": 4}),
                entity("city"),
                fixed({"on": 2}, dropout=0.5),
                exchangeable(entity("month"), entity("day")),
            ),
        ),
        "greet": East(
            "greet",
            pick_one(
                fixed({"hello there": 2, "hi": 3}, weight=0.6),
                fixed({"good morning": 1, "good evening": 1}, weight=0.4),
            ),
        ),
        "play_music": East(
            "play_music",
            order(
                fixed({"play": 5, "put on": 2}),
                entity("artist"),
                fixed({"songs": 2, "hits": 1}, dropout=0.4),
            ),
        ),
        "hotel": East(
            "hotel",
            pick_one(
                order(
                    fixed({"book a room in": 2}),
                    entity("city"),
                    weight=0.5,
                ),
                order(
                    fixed({"find": 1, "show": 1}),
                    fixed({"hotels near": 2}),
                    entity("city"),
                    fixed({"for": 1}, dropout=0.5),
                    entity("month"),
                    weight=0.5,
                ),
            ),
        ),
    }
    lexicon = EntityLexicon()
    for city in ("oslo", "paris", "new york", "rome", "cairo"):
        lexicon.add("city", city)
    for month in ("May", "June", "October"):
        lexicon.add("month", month)
    for day in ("1st", "2nd", "21st"):
        lexicon.add("day", day)
    for artist in ("prince", "queen", "abba"):
        lexicon.add("artist", artist)
    return trees, lexicon


def random_tree_with_budget(
    seed: int,
    max_paths: int,
    *,
    allow_dropout: bool = True,
    with_entities: bool = True,
    max_depth: int = 3,
) -> East:
    """First random tree at/under the path budget, scanning seeds from `seed`."""
    attempt = seed
    while True:
        tree = random_tree(
            attempt,
            allow_dropout=allow_dropout,
            with_entities=with_entities,
            max_depth=max_depth,
        )
        if structural_path_count(tree, with_dropout=allow_dropout) <= max_paths:
            return tree
        attempt += 10_000
