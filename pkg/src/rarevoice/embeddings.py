"""Subword-aware word embeddings and comment/user vector composition.

Training is skip-gram with negative sampling over word vectors plus hashed
character n-gram bucket vectors. A token's effective vector is its word
vector (if in vocabulary) plus the sum of its subword bucket vectors, so
out-of-vocabulary spellings still land near their correctly spelled forms.
"""

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import tokenize

# Minibatch size for the vectorized trainer. Larger batches amortize numpy
# overhead but apply more stale gradient per step; 256 keeps small-vocab
# corpora stable at the default learning rate.
_BATCH_SIZE = 256

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _U64
    return h


def subword_ngrams(token, min_n, max_n):
    """Character n-grams of '<token>' (with boundary markers), lengths min_n..max_n."""
    padded = f"<{token}>"
    grams = []
    for n in range(min_n, max_n + 1):
        for i in range(len(padded) - n + 1):
            grams.append(padded[i:i + n])
    return grams


def subword_buckets(token, min_n, max_n, bucket_count):
    return [fnv1a_64(g.encode("utf-8")) % bucket_count
            for g in subword_ngrams(token, min_n, max_n)]


@dataclass
class TrainConfig:
    dim: int = 100
    epochs: int = 5
    window: int = 5
    negative_samples: int = 5
    learning_rate: float = 0.05
    min_count: int = 2
    bucket_count: int = 200_000
    subword_range: tuple = (3, 6)
    rng_seed: int = 0

    def validate(self):
        for name in ("dim", "epochs", "window", "negative_samples", "min_count", "bucket_count"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        min_n, max_n = self.subword_range
        if not (0 < min_n <= max_n):
            raise ValueError("subword_range must satisfy 0 < min_n <= max_n")


@dataclass
class EmbeddingTable:
    dim: int
    word_vectors: dict
    bucket_vectors: np.ndarray | None
    bucket_count: int
    subword_range: tuple
    epoch_losses: list = field(default_factory=list)

    @property
    def has_subwords(self):
        return self.bucket_vectors is not None


@dataclass
class CommentVector:
    comment_id: str
    values: np.ndarray
    normalized: bool
    usable: bool = True


@dataclass
class UserVector:
    user_id: str
    values: np.ndarray
    comment_count: int


def _pairs_for_sentence(ids, window, rng):
    """(center, context) skip-gram pairs with a per-center dynamic window."""
    pairs = []
    n = len(ids)
    widths = rng.integers(1, window + 1, size=n)
    for i in range(n):
        b = widths[i]
        lo, hi = max(0, i - b), min(n, i + b + 1)
        for j in range(lo, hi):
            if j != i:
                pairs.append((ids[i], ids[j]))
    return pairs


def train_embeddings(corpus, config=None):
    """Train an EmbeddingTable; bit-reproducible for a fixed rng_seed."""
    config = config or TrainConfig()
    config.validate()
    if not corpus.comments:
        raise ValueError("cannot train embeddings on an empty corpus")

    sentences = [tokenize(c.text) for c in corpus.comments.values()]
    freq = Counter(t for s in sentences for t in s)
    vocab = sorted(t for t, f in freq.items() if f >= config.min_count)
    tok2id = {t: i for i, t in enumerate(vocab)}
    V = len(vocab)
    B = config.bucket_count
    dim = config.dim
    min_n, max_n = config.subword_range

    rng = np.random.Generator(np.random.PCG64(config.rng_seed))
    bound = 0.5 / dim
    # Parameter matrix: rows 0..V-1 are word vectors, V..V+B-1 bucket vectors.
    P = rng.uniform(-bound, bound, size=(V + B, dim))
    C = np.zeros((max(V, 1), dim))

    srcs = []
    for i, tok in enumerate(vocab):
        buckets = subword_buckets(tok, min_n, max_n, B)
        srcs.append(np.array([i] + [V + b for b in buckets], dtype=np.int64))

    epoch_losses = []
    if V > 0:
        id_sentences = [[tok2id[t] for t in s if t in tok2id] for s in sentences]
        id_sentences = [s for s in id_sentences if len(s) >= 2]
        counts = np.array([freq[t] for t in vocab], dtype=np.float64)
        noise = counts ** 0.75
        noise_cdf = np.cumsum(noise / noise.sum())

        # One pass to count pairs so the learning rate can decay linearly.
        total_pairs = 0
        for s in id_sentences:
            total_pairs += sum(min(len(s) - 1, 2 * config.window) for _ in s)
        total_pairs = max(total_pairs, 1) * config.epochs

        K = config.negative_samples
        lr0 = config.learning_rate
        seen = 0
        batch = _BATCH_SIZE
        for _ in range(config.epochs):
            pairs = []
            for s in id_sentences:
                pairs.extend(_pairs_for_sentence(s, config.window, rng))
            if not pairs:
                epoch_losses.append(0.0)
                continue
            centers = np.array([p[0] for p in pairs], dtype=np.int64)
            contexts = np.array([p[1] for p in pairs], dtype=np.int64)
            loss_sum = 0.0
            for start in range(0, len(centers), batch):
                c = centers[start:start + batch]
                t = contexts[start:start + batch]
                m = len(c)
                lr = lr0 * max(1.0 - seen / total_pairs, 1e-4)
                seen += m
                u = rng.random((m, K))
                negs = np.searchsorted(noise_cdf, u)
                targets = np.concatenate([t[:, None], negs], axis=1)
                labels = np.zeros((m, K + 1))
                labels[:, 0] = 1.0

                rows = np.concatenate([srcs[i] for i in c])
                n_src = np.array([len(srcs[i]) for i in c], dtype=np.float64)
                seg = np.repeat(np.arange(m), n_src.astype(np.int64))
                X = np.zeros((m, dim))
                np.add.at(X, seg, P[rows])

                O = C[targets]
                scores = np.einsum("md,mkd->mk", X, O)
                p = 1.0 / (1.0 + np.exp(-np.clip(scores, -30, 30)))
                loss_sum += float(
                    -(np.log(np.where(labels > 0, p, 1.0 - p) + 1e-12)).sum())
                g = p - labels
                gX = np.einsum("mk,mkd->md", g, O)
                gO = g[:, :, None] * X[:, None, :]
                np.subtract.at(C, targets.ravel(),
                               lr * gO.reshape(-1, dim))
                # Distribute the input gradient across the word + subword rows
                # so the step on the composed vector stays at lr.
                np.subtract.at(P, rows, (lr / n_src[seg])[:, None] * gX[seg])
            epoch_losses.append(loss_sum / len(centers))

    word_vectors = {tok: P[i].copy() for tok, i in tok2id.items()}
    return EmbeddingTable(
        dim=dim,
        word_vectors=word_vectors,
        bucket_vectors=P[V:].copy(),
        bucket_count=B,
        subword_range=(min_n, max_n),
        epoch_losses=epoch_losses,
    )


def effective_word_vector(table, token):
    """Word vector plus subword bucket sum; zero vector when nothing applies."""
    vec = np.zeros(table.dim)
    wv = table.word_vectors.get(token)
    if wv is not None:
        vec = vec + wv
    if table.has_subwords:
        buckets = subword_buckets(token, *table.subword_range, table.bucket_count)
        for b in buckets:
            vec = vec + table.bucket_vectors[b]
    return vec


def comment_embedding(table, comment, normalize=True):
    tokens = tokenize(comment.text)
    values = np.zeros(table.dim)
    if tokens:
        for t in tokens:
            values += effective_word_vector(table, t)
        values /= len(tokens)
    norm = np.linalg.norm(values)
    if norm == 0.0:
        return CommentVector(comment.id, values, normalized=False, usable=False)
    if normalize:
        values = values / norm
    return CommentVector(comment.id, values, normalized=normalize)


def compose_comment_vectors(table, comments, normalize=True):
    """Batch comment composition with a per-token cache of effective vectors."""
    cache = {}
    out = {}
    for comment in comments:
        tokens = tokenize(comment.text)
        values = np.zeros(table.dim)
        for t in tokens:
            vec = cache.get(t)
            if vec is None:
                vec = effective_word_vector(table, t)
                cache[t] = vec
            values += vec
        if tokens:
            values /= len(tokens)
        norm = np.linalg.norm(values)
        if norm == 0.0:
            out[comment.id] = CommentVector(comment.id, values, normalized=False,
                                            usable=False)
        else:
            out[comment.id] = CommentVector(
                comment.id, values / norm if normalize else values,
                normalized=normalize)
    return out


def user_embedding(table, comments):
    """Mean of the user's L2-normalized comment vectors; skips unusable ones."""
    if not comments:
        raise ValueError("user_embedding requires at least one comment")
    user_id = comments[0].user_id
    vectors = []
    for c in comments:
        cv = comment_embedding(table, c, normalize=True)
        if cv.usable:
            vectors.append(cv.values)
    if not vectors:
        raise ValueError(f"user '{user_id}' has no usable comment vectors")
    return UserVector(user_id, np.mean(vectors, axis=0), comment_count=len(vectors))


def save_vectors(path, vectors, dim):
    """Write the text vector format: '<count> <dim>' then '<key> v1 .. vdim'."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(vectors)} {dim}\n")
        for key in sorted(vectors):
            vals = " ".join(repr(float(x)) for x in vectors[key])
            fh.write(f"{key} {vals}\n")


def load_vectors(path):
    """Read the text vector format back into (dict, dim)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        count, dim = int(header[0]), int(header[1])
        out = {}
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"bad vector line for key {parts[0]!r}")
            out[parts[0]] = np.array([float(x) for x in parts[1:]])
    if len(out) != count:
        raise ValueError(f"header declared {count} vectors, found {len(out)}")
    return out, dim


def save_table(path, table):
    """Persist effective vectors for every vocabulary token (word-vector mode)."""
    effective = {tok: effective_word_vector(table, tok) for tok in table.word_vectors}
    save_vectors(path, effective, table.dim)


def load_table(path):
    """Load pretrained word vectors; subword buckets unavailable in this mode."""
    vectors, dim = load_vectors(path)
    return EmbeddingTable(
        dim=dim,
        word_vectors=vectors,
        bucket_vectors=None,
        bucket_count=0,
        subword_range=(0, 0),
    )
