"""Sentiment lexicon induction by seed-anchored random walks on a word
similarity graph, and lexicon-based comment scoring."""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .corpus import tokenize
from .embeddings import effective_word_vector

# Hand-picked seed polarity words for the induction walk.
DEFAULT_POSITIVE_SEEDS = ["peace", "great", "peaceful", "accept", "kind",
                          "thank", "love", "care", "humanity", "innocent"]
DEFAULT_NEGATIVE_SEEDS = ["terrorist", "genocide", "war", "hate", "bad",
                          "violence", "rape", "illegal", "evil", "shame"]


@dataclass
class SeedSet:
    positive: list
    negative: list

    def __post_init__(self):
        overlap = set(self.positive) & set(self.negative)
        if overlap:
            raise ValueError(f"seed sets overlap: {sorted(overlap)}")


@dataclass
class Lexicon:
    scores: dict  # token -> standardized score, positive = favorable
    config: dict = field(default_factory=dict)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for token in sorted(self.scores):
                fh.write(f"{token} {self.scores[token]!r}\n")

    @classmethod
    def load(cls, path):
        scores = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                parts = line.split()
                if len(parts) == 2:
                    scores[parts[0]] = float(parts[1])
        return cls(scores=scores)


def _similarity_graph(vectors, graph_k):
    """Symmetric kNN graph with edge weight max(0, cosine similarity)."""
    n, _ = vectors.shape
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    unit = vectors / norms
    sims = unit @ unit.T
    np.fill_diagonal(sims, -np.inf)
    k = min(graph_k, n - 1)
    rows, cols, vals = [], [], []
    for i in range(n):
        nbrs = np.argpartition(-sims[i], k - 1)[:k] if k > 0 else []
        for j in nbrs:
            w = max(0.0, sims[i, j])
            if w > 0.0:
                rows.append(i)
                cols.append(j)
                vals.append(w)
    W = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    W = W.maximum(W.T)  # symmetrize by union
    return W


def _row_normalize(W):
    out_weight = np.asarray(W.sum(axis=1)).ravel()
    n = W.shape[0]
    # Isolated nodes get a self-loop so the matrix stays row-stochastic.
    isolated = np.where(out_weight == 0.0)[0]
    if len(isolated):
        W = W + sp.coo_matrix((np.ones(len(isolated)), (isolated, isolated)),
                              shape=(n, n)).tocsr()
        out_weight = np.asarray(W.sum(axis=1)).ravel()
    D_inv = sp.diags(1.0 / out_weight)
    return D_inv @ W


def random_walk_with_restart(T, seed_indices, beta, tol=1e-8, max_iter=10_000):
    """Stationary distribution of p <- beta * T^T p + (1-beta) * s."""
    n = T.shape[0]
    s = np.zeros(n)
    s[list(seed_indices)] = 1.0 / len(seed_indices)
    p = s.copy()
    Tt = T.T.tocsr()
    for _ in range(max_iter):
        nxt = beta * (Tt @ p) + (1.0 - beta) * s
        if np.abs(nxt - p).sum() < tol:
            return nxt
        p = nxt
    return p


def induce_lexicon(table, seeds, graph_k=25, restart_beta=0.9):
    """Propagate seed polarity through the embedding similarity graph.

    Raw polarity of a word is p+/(p+ + p-) over the two restart walks;
    final scores are z-standardized over the vocabulary.
    """
    vocab = sorted(table.word_vectors)
    if not vocab:
        raise ValueError("embedding table has an empty vocabulary")
    tok2id = {t: i for i, t in enumerate(vocab)}

    def surviving(tokens, polarity):
        kept = [t for t in tokens if t in tok2id]
        dropped = sorted(set(tokens) - set(kept))
        if dropped:
            warnings.warn(f"{polarity} seeds missing from vocabulary, dropped: {dropped}")
        return kept

    pos = surviving(seeds.positive, "positive")
    neg = surviving(seeds.negative, "negative")
    if not pos or not neg:
        raise ValueError("at least one seed per polarity must survive vocabulary lookup")

    vectors = np.array([effective_word_vector(table, t) for t in vocab])
    W = _similarity_graph(vectors, graph_k)
    T = _row_normalize(W)
    p_pos = random_walk_with_restart(T, [tok2id[t] for t in pos], restart_beta)
    p_neg = random_walk_with_restart(T, [tok2id[t] for t in neg], restart_beta)
    total = p_pos + p_neg
    raw = np.where(total > 0.0, p_pos / np.where(total > 0.0, total, 1.0), 0.5)
    mean = raw.mean()
    std = raw.std()
    if std < 1e-15:
        warnings.warn("degenerate polarity distribution; all scores set to 0")
        scores = np.zeros(len(raw))
    else:
        scores = (raw - mean) / std
    return Lexicon(
        scores={t: float(scores[i]) for t, i in tok2id.items()},
        config={"graph_k": graph_k, "restart_beta": restart_beta,
                "positive_seeds": pos, "negative_seeds": neg})


def raw_polarity(table, seeds, graph_k=25, restart_beta=0.9):
    """Unstandardized p+/(p+ + p-) per token, for inspection and tests."""
    vocab = sorted(table.word_vectors)
    tok2id = {t: i for i, t in enumerate(vocab)}
    pos = [t for t in seeds.positive if t in tok2id]
    neg = [t for t in seeds.negative if t in tok2id]
    if not pos or not neg:
        raise ValueError("at least one seed per polarity must survive vocabulary lookup")
    vectors = np.array([effective_word_vector(table, t) for t in vocab])
    T = _row_normalize(_similarity_graph(vectors, graph_k))
    p_pos = random_walk_with_restart(T, [tok2id[t] for t in pos], restart_beta)
    p_neg = random_walk_with_restart(T, [tok2id[t] for t in neg], restart_beta)
    total = p_pos + p_neg
    raw = np.where(total > 0.0, p_pos / np.where(total > 0.0, total, 1.0), 0.5)
    return {t: float(raw[i]) for t, i in tok2id.items()}


def score_comment(lexicon, comment):
    """Sum of token scores; unknown tokens contribute 0."""
    return float(sum(lexicon.scores.get(t, 0.0) for t in tokenize(comment.text)))


def classify_sentiment(score, cutoff=3.0):
    if score > cutoff:
        return "positive"
    if score < -cutoff:
        return "negative"
    return "neutral"
