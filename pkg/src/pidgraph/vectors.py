"""Exact cosine-similarity search over node embeddings.

Two named indexes exist per graph: global_semantic_index over whole-flowsheet
descriptions and local_semantic_index over neighborhood descriptions. Search
is exhaustive (no approximation) so results are reproducible; ties break by
node id ascending.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, ValidationError
from .graph import PropertyGraph


class IndexName(str, Enum):
    GLOBAL = "global_semantic_index"
    LOCAL = "local_semantic_index"


@dataclass
class ScoredNode:
    node_id: str
    score: float
    node_labels: list[str]
    content: str


def cosine_similarity(a, b) -> float:
    """(a.b)/(|a||b|); requires equal dimensions and non-zero operands."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise ValidationError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    if not (np.all(np.isfinite(va)) and np.all(np.isfinite(vb))):
        raise ValidationError("embedding entries must be finite")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine similarity undefined for a zero vector")
    return float(np.dot(va, vb) / (na * nb))


class VectorIndex:
    """Immutable list of (node id, embedding) with exact top-k search."""

    def __init__(self, name: IndexName, entries: list[tuple[str, list[float]]]):
        self.name = name
        self.node_ids = [node_id for node_id, _ in entries]
        if len(set(self.node_ids)) != len(self.node_ids):
            raise ValidationError("duplicate node id in vector index")
        if entries:
            self._matrix = np.asarray([vec for _, vec in entries], dtype=np.float64)
            if self._matrix.ndim != 2:
                raise ValidationError("index vectors must share one dimension")
            self._norms = np.linalg.norm(self._matrix, axis=1)
        else:
            self._matrix = np.zeros((0, 0))
            self._norms = np.zeros(0)

    def __len__(self) -> int:
        return len(self.node_ids)

    @property
    def dim(self) -> int:
        return self._matrix.shape[1] if len(self.node_ids) else 0

    def top_k(self, query, k: int) -> list[tuple[str, float]]:
        """min(k, n) (node id, score) pairs, score non-increasing, id tiebreak."""
        if len(self.node_ids) == 0:
            raise ConfigurationError(f"vector index {self.name.value} is empty")
        if k < 1:
            raise ValidationError("k must be >= 1")
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (self.dim,):
            raise ValidationError(f"query dimension {q.shape} does not match index dim {self.dim}")
        qn = float(np.linalg.norm(q))
        if qn == 0.0:
            raise ValidationError("cosine similarity undefined for a zero query")
        scores = (self._matrix @ q) / (self._norms * qn)
        scores = np.clip(scores, -1.0, 1.0)
        order = sorted(range(len(scores)), key=lambda i: (-scores[i], self.node_ids[i]))
        return [(self.node_ids[i], float(scores[i])) for i in order[:k]]


def build_indexes(graph: PropertyGraph) -> dict[IndexName, VectorIndex]:
    """Rebuild both named indexes from a graph's node embeddings."""
    global_entries = []
    local_entries = []
    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        if node.global_embedding is not None:
            global_entries.append((node_id, node.global_embedding))
        if node.local_embedding is not None:
            local_entries.append((node_id, node.local_embedding))
    return {
        IndexName.GLOBAL: VectorIndex(IndexName.GLOBAL, global_entries),
        IndexName.LOCAL: VectorIndex(IndexName.LOCAL, local_entries),
    }
