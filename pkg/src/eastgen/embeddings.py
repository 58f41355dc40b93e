"""Word-vector table with exact cosine-similarity nearest-neighbor lookup.

The file format is the common text convention: one ``token v1 v2 ... vD``
row per line, space-separated, no header. Lookups are exact scans over the
full table; no approximate indexing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmbeddingFormatError, OutOfVocabularyError

log = logging.getLogger(__name__)


@dataclass
class EmbeddingTable:
    """Immutable token -> vector mapping plus a unit-normalized matrix for KNN."""

    dimension: int
    tokens: list[str]
    matrix: np.ndarray  # shape (n, dimension), float64
    index: dict[str, int] = field(repr=False)
    unit: np.ndarray = field(repr=False)  # row-normalized copy of matrix
    skipped_zero_rows: int = 0

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def vectors(self) -> dict[str, np.ndarray]:
        """Token -> raw vector view (materialized on demand)."""
        return {t: self.matrix[i] for t, i in self.index.items()}

    def vector(self, token: str) -> np.ndarray:
        try:
            return self.matrix[self.index[token]]
        except KeyError:
            raise OutOfVocabularyError(token) from None


def _make_table(tokens: list[str], rows: list[np.ndarray], dimension: int,
                skipped: int) -> EmbeddingTable:
    matrix = np.vstack(rows) if rows else np.zeros((0, dimension))
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    unit = matrix / norms if len(rows) else matrix
    return EmbeddingTable(
        dimension=dimension,
        tokens=tokens,
        matrix=matrix,
        index={t: i for i, t in enumerate(tokens)},
        unit=unit,
        skipped_zero_rows=skipped,
    )


def load_embeddings(text: str) -> EmbeddingTable:
    """Parse embedding rows; first occurrence wins for duplicate tokens.

    Zero-norm rows are rejected with a warning (their count is kept on the
    table); a row whose width disagrees with the established dimension is
    an error naming the offending line.
    """
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    dimension: int | None = None
    skipped = 0

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.rstrip().split(" ")
        if len(parts) < 2:
            raise EmbeddingFormatError("expected 'token v1 ... vD'", lineno)
        token = parts[0]
        try:
            values = np.array([float(v) for v in parts[1:]], dtype=np.float64)
        except ValueError as exc:
            raise EmbeddingFormatError(f"non-numeric component: {exc}", lineno) from exc
        if dimension is None:
            dimension = len(values)
        elif len(values) != dimension:
            raise EmbeddingFormatError(
                f"dimension {len(values)} != established {dimension}", lineno
            )
        if token in seen:
            continue
        if not np.any(values):
            skipped += 1
            log.warning("skipping zero vector for token %r (line %d)", token, lineno)
            continue
        seen.add(token)
        tokens.append(token)
        rows.append(values)

    if dimension is None:
        raise EmbeddingFormatError("no embedding rows found", 1)
    return _make_table(tokens, rows, dimension, skipped)


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """dot(a, b) / (|a| * |b|); arguments must be same-length and nonzero."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"length mismatch: {va.shape} vs {vb.shape}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm vector")
    return float(np.dot(va, vb) / (na * nb))


def k_nearest(table: EmbeddingTable, query: str, k: int) -> list[tuple[str, float]]:
    """The k most cosine-similar tokens to `query`, excluding the query itself.

    Descending similarity; exact ties break by lexicographic token order.
    Raises OutOfVocabularyError when the query has no vector.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if query not in table.index:
        raise OutOfVocabularyError(query)
    qi = table.index[query]
    sims = table.unit @ table.unit[qi]
    sims[qi] = -np.inf  # exclude the query from its own neighborhood

    n = len(table.tokens)
    if n - 1 <= k:
        candidates = [i for i in range(n) if i != qi]
    else:
        # widen the kth-value cut to every exact tie before ordering
        top = np.argpartition(sims, -k)[-k:]
        kth = sims[top].min()
        candidates = np.flatnonzero(sims >= kth).tolist()
    candidates.sort(key=lambda i: (-sims[i], table.tokens[i]))
    return [(table.tokens[i], float(sims[i])) for i in candidates[:k]]


def k_nearest_among(
    table: EmbeddingTable, query: str, k: int, pool: Sequence[str]
) -> list[tuple[str, float]]:
    """k_nearest restricted to a candidate pool (e.g. a slot's lexicon)."""
    if query not in table.index:
        raise OutOfVocabularyError(query)
    q = table.unit[table.index[query]]
    scored = [
        (t, float(table.unit[table.index[t]] @ q))
        for t in dict.fromkeys(pool)
        if t != query and t in table.index
    ]
    scored.sort(key=lambda ts: (-ts[1], ts[0]))
    return scored[:k]
