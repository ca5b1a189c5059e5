"""The five batch sampling strategies and labeling-round orchestration."""

import json
from dataclasses import dataclass, field

import numpy as np

from . import nnindex
from .classifier import POSITIVE, LabeledExample, featurize_many, margins

STRATEGIES = ("random", "nn_comment", "certainty", "uncertainty", "nn_user", "seed")


@dataclass
class SamplingBatch:
    strategy: str
    comment_ids: list
    round: int = 0
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {"strategy": self.strategy, "round": self.round,
                "params": self.params, "comment_ids": self.comment_ids}

    @classmethod
    def from_dict(cls, d):
        return cls(strategy=d["strategy"], comment_ids=list(d["comment_ids"]),
                   round=d.get("round", 0), params=d.get("params", {}))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class LabeledPool:
    examples: list = field(default_factory=list)
    round_counter: int = 0

    @property
    def labeled_ids(self):
        return {ex.comment_id for ex in self.examples}

    def counts(self):
        pos = sum(1 for ex in self.examples if ex.label == POSITIVE)
        return pos, len(self.examples) - pos

    def positive_ids(self):
        return [ex.comment_id for ex in self.examples if ex.label == POSITIVE]

    def export(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for ex in self.examples:
                fh.write(json.dumps(ex.to_dict()) + "\n")

    @classmethod
    def load(cls, path):
        pool = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    ex = LabeledExample.from_dict(json.loads(line))
                    pool.examples.append(ex)
                    pool.round_counter = max(pool.round_counter, ex.round)
        return pool


def random_sample(unlabeled_ids, n, seed):
    """Uniform sample without replacement, deterministic given the seed."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    ids = sorted(unlabeled_ids)
    if not ids:
        raise ValueError("unlabeled pool is empty")
    rng = np.random.default_rng(seed)
    take = min(n, len(ids))
    chosen = rng.choice(len(ids), size=take, replace=False)
    return SamplingBatch(strategy="random",
                         comment_ids=[ids[i] for i in chosen],
                         params={"n": n, "seed": seed})


def nn_comment_sample(seed_positive_ids, per_seed_k, index, labeled_ids):
    """Per-seed top-k cosine neighbors, union deduplicated in (seed, rank) order."""
    if per_seed_k < 1:
        raise ValueError(f"per_seed_k must be >= 1, got {per_seed_k}")
    exclude = set(labeled_ids) | set(seed_positive_ids)
    out = []
    seen = set()
    for sid in seed_positive_ids:
        if sid not in index:
            raise ValueError(f"seed '{sid}' has no vector in the index")
        for nid, _sim in nnindex.query_topk(index, index.vector(sid), per_seed_k, exclude):
            if nid not in seen:
                seen.add(nid)
                out.append(nid)
    return SamplingBatch(strategy="nn_comment", comment_ids=out,
                         params={"per_seed_k": per_seed_k,
                                 "seeds": list(seed_positive_ids)})


def nn_comment_sample_pooled(seed_positive_ids, total_k, index, labeled_ids):
    """Alternative global top-k over the max similarity to any seed."""
    if total_k < 1:
        raise ValueError(f"total_k must be >= 1, got {total_k}")
    exclude = set(labeled_ids) | set(seed_positive_ids)
    best = {}
    for sid in seed_positive_ids:
        if sid not in index:
            raise ValueError(f"seed '{sid}' has no vector in the index")
        for nid, sim in nnindex.query_topk(index, index.vector(sid),
                                           total_k + len(exclude), exclude):
            if nid not in best or sim > best[nid]:
                best[nid] = sim
    ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))[:total_k]
    return SamplingBatch(strategy="nn_comment", comment_ids=[nid for nid, _ in ranked],
                         params={"total_k": total_k, "pooled": True,
                                 "seeds": list(seed_positive_ids)})


def _probabilities(model, calibration, comments, space, table=None):
    X = featurize_many(comments, space, table)
    return np.asarray(calibration.prob(margins(model, X)))


def certainty_sample(model, calibration, corpus, unlabeled_ids, k, space, table=None):
    """The k unlabeled comments with highest predicted minority-class probability."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ids = sorted(unlabeled_ids)
    if not ids:
        raise ValueError("unlabeled pool is empty")
    probs = _probabilities(model, calibration, [corpus.comments[i] for i in ids],
                           space, table)
    order = np.argsort(-probs, kind="stable")  # ids sorted, so ties break by id
    chosen = [ids[i] for i in order[:k]]
    return SamplingBatch(strategy="certainty", comment_ids=chosen, params={"k": k})


def uncertainty_sample(model, calibration, corpus, unlabeled_ids, k, space, table=None):
    """The k unlabeled comments with probability closest to 0.5."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ids = sorted(unlabeled_ids)
    if not ids:
        raise ValueError("unlabeled pool is empty")
    probs = _probabilities(model, calibration, [corpus.comments[i] for i in ids],
                           space, table)
    order = np.argsort(np.abs(probs - 0.5), kind="stable")
    chosen = [ids[i] for i in order[:k]]
    return SamplingBatch(strategy="uncertainty", comment_ids=chosen, params={"k": k})


def user_nn_sample(model, calibration, corpus, user_index, labeled_ids,
                   space, table=None, k=10, m=10, n_comments=300, seed=0):
    """Sample comments from users whose embeddings neighbor the authors of the
    top-k predicted positives.

    Steps: top-k positive unlabeled comments -> unique author set -> m user
    nearest neighbors per author (author excluded) -> pool of the neighbors'
    unlabeled comments -> uniform sample of n_comments.
    """
    unlabeled = sorted(set(corpus.comments) - set(labeled_ids))
    if not unlabeled:
        raise ValueError("unlabeled pool is empty")
    probs = _probabilities(model, calibration, [corpus.comments[i] for i in unlabeled],
                           space, table)
    order = np.argsort(-probs, kind="stable")
    top = [(unlabeled[i], float(probs[i])) for i in order[:k] if probs[i] >= 0.5]
    if not top:
        raise ValueError("no positive predictions among unlabeled comments")
    authors = []
    for cid, _p in top:
        uid = corpus.comments[cid].user_id
        if uid not in authors:
            authors.append(uid)
    neighbor_users = set()
    for uid in authors:
        if uid not in user_index:
            continue
        for nid, _sim in nnindex.query_topk(user_index, user_index.vector(uid),
                                            m, exclude={uid}):
            neighbor_users.add(nid)
    candidate_pool = sorted(
        cid for uid in neighbor_users for cid in corpus.users[uid].comment_ids
        if cid not in labeled_ids)
    candidate_pool = sorted(set(candidate_pool))
    if not candidate_pool:
        raise ValueError("neighbor users have no unlabeled comments")
    rng = np.random.default_rng(seed)
    take = min(n_comments, len(candidate_pool))
    chosen = rng.choice(len(candidate_pool), size=take, replace=False)
    return SamplingBatch(
        strategy="nn_user",
        comment_ids=[candidate_pool[i] for i in chosen],
        params={"k": k, "m": m, "n_comments": n_comments, "seed": seed,
                "top_authors": authors,
                "n_neighbor_users": len(neighbor_users)})


def run_round(pool, batch, resolved_labels):
    """Fold a labeled batch into the pool with provenance; returns the pool."""
    batch_ids = set(batch.comment_ids)
    extra = set(resolved_labels) - batch_ids
    if extra:
        raise ValueError(f"labels for ids outside the batch: {sorted(extra)}")
    missing = batch_ids - set(resolved_labels)
    if missing:
        raise ValueError(f"missing labels for batch ids: {sorted(missing)}")
    already = batch_ids & pool.labeled_ids
    if already:
        raise ValueError(f"ids already labeled: {sorted(already)}")
    pool.round_counter += 1
    for cid in batch.comment_ids:
        pool.examples.append(LabeledExample(
            comment_id=cid, label=resolved_labels[cid],
            round=pool.round_counter, strategy=batch.strategy))
    return pool
