"""Exact top-k cosine nearest-neighbor search over id-keyed vectors."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class VectorIndex:
    dim: int
    ids: list  # sorted ascending; row i of matrix belongs to ids[i]
    matrix: np.ndarray  # unit-normalized rows
    skipped_ids: list = field(default_factory=list)

    def __len__(self):
        return len(self.ids)

    def __contains__(self, id_):
        return id_ in self._pos

    def __post_init__(self):
        self._pos = {id_: i for i, id_ in enumerate(self.ids)}

    def vector(self, id_):
        return self.matrix[self._pos[id_]]


def build(vectors):
    """Build an index from (id, vector) pairs; zero vectors are skipped.

    Vectors are L2-normalized on insert. Duplicate ids and dimension
    mismatches are errors.
    """
    seen = set()
    dim = None
    kept = []
    skipped = []
    for id_, vec in vectors:
        vec = np.asarray(vec, dtype=np.float64)
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise ValueError(
                f"dimension mismatch for id '{id_}': expected {dim}, got {vec.shape[0]}")
        if id_ in seen:
            raise ValueError(f"duplicate id '{id_}'")
        seen.add(id_)
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            skipped.append(id_)
            continue
        kept.append((id_, vec / norm))
    kept.sort(key=lambda kv: kv[0])
    ids = [id_ for id_, _ in kept]
    matrix = np.array([v for _, v in kept]) if kept else np.zeros((0, dim or 0))
    return VectorIndex(dim=dim or 0, ids=ids, matrix=matrix, skipped_ids=skipped)


def query_topk(index, probe, k, exclude=()):
    """Top-k entries by cosine similarity, ties broken by ascending id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    probe = np.asarray(probe, dtype=np.float64)
    norm = np.linalg.norm(probe)
    if norm == 0.0:
        raise ValueError("probe vector is zero")
    if len(index) == 0:
        return []
    sims = index.matrix @ (probe / norm)
    # Rows are stored in ascending id order, so a stable sort on -sim breaks
    # ties by id for free.
    order = np.argsort(-sims, kind="stable")
    exclude = set(exclude)
    out = []
    for i in order:
        id_ = index.ids[i]
        if id_ in exclude:
            continue
        out.append((id_, float(sims[i])))
        if len(out) == k:
            break
    return out


def batch_query(index, probes, k, exclude=()):
    return [query_topk(index, p, k, exclude) for p in probes]


def cosine_distance(similarity):
    return 1.0 - similarity
