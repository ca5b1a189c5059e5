"""N-gram featurization, linear max-margin training, Platt calibration and
the repeated random-split evaluation protocol."""

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.stats import rankdata

from .corpus import tokenize
from .embeddings import comment_embedding

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass
class LabeledExample:
    comment_id: str
    label: str
    round: int = 0
    strategy: str = "seed"
    annotator_labels: list = field(default_factory=list)

    def to_dict(self):
        return {
            "comment_id": self.comment_id,
            "label": self.label,
            "round": self.round,
            "strategy": self.strategy,
            "annotator_labels": [list(x) for x in self.annotator_labels],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            comment_id=d["comment_id"],
            label=d["label"],
            round=d.get("round", 0),
            strategy=d.get("strategy", "seed"),
            annotator_labels=[tuple(x) for x in d.get("annotator_labels", [])],
        )


@dataclass
class FeatureSpace:
    ngram_vocab: dict  # n-gram tuple -> index
    embedding_dims: int
    min_df: int
    # The embedding block is unit-norm while n-gram counts have L2 norm around
    # sqrt(3 * tokens); this factor keeps the two blocks comparable for the SVM.
    embedding_scale: float = 8.0

    @property
    def size(self):
        return len(self.ngram_vocab) + self.embedding_dims


@dataclass
class SvmConfig:
    regularization: float = 1e-4
    epochs: int = 15
    learning_rate: float = 0.1
    rng_seed: int = 0


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    train_config: SvmConfig


@dataclass
class Calibration:
    A: float
    B: float

    def prob(self, margin):
        z = np.clip(self.A * np.asarray(margin, dtype=np.float64) + self.B, -500, 500)
        return 1.0 / (1.0 + np.exp(z))


@dataclass
class MetricsReport:
    precision: tuple
    recall: tuple
    accuracy: tuple
    f1: tuple
    auc: tuple
    n_splits: int

    def to_dict(self):
        d = {name: {"mean": pair[0], "std": pair[1]}
             for name, pair in (("precision", self.precision), ("recall", self.recall),
                                ("accuracy", self.accuracy), ("f1", self.f1),
                                ("auc", self.auc))}
        d["n_splits"] = self.n_splits
        return d


def comment_ngrams(text, max_n=3):
    tokens = tokenize(text)
    grams = []
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            grams.append(tuple(tokens[i:i + n]))
    return grams


def fit_feature_space(examples, corpus, min_df=2, with_embeddings=False, embedding_dim=0):
    """Vocabulary of 1-3-grams occurring in >= min_df training comments."""
    if not examples:
        raise ValueError("cannot fit a feature space on zero examples")
    doc_freq = Counter()
    for ex in examples:
        text = corpus.comments[ex.comment_id].text
        doc_freq.update(set(comment_ngrams(text)))
    vocab = sorted(g for g, df in doc_freq.items() if df >= min_df)
    return FeatureSpace(
        ngram_vocab={g: i for i, g in enumerate(vocab)},
        embedding_dims=embedding_dim if with_embeddings else 0,
        min_df=min_df,
    )


def featurize(comment, space, table=None):
    """Sparse count vector over the n-gram vocab, plus an optional embedding block."""
    if space.embedding_dims > 0 and table is None:
        raise ValueError("feature space has an embedding block but no table was given")
    idx, val = [], []
    for g, count in Counter(comment_ngrams(comment.text)).items():
        j = space.ngram_vocab.get(g)
        if j is not None:
            idx.append(j)
            val.append(float(count))
    if space.embedding_dims > 0:
        cv = comment_embedding(table, comment, normalize=True)
        base = len(space.ngram_vocab)
        for d in range(space.embedding_dims):
            if cv.values[d] != 0.0:
                idx.append(base + d)
                val.append(float(cv.values[d]) * space.embedding_scale)
    return sp.csr_matrix((val, (np.zeros(len(idx), dtype=int), idx)),
                         shape=(1, space.size))


def featurize_many(comments, space, table=None):
    rows = [featurize(c, space, table) for c in comments]
    if not rows:
        return sp.csr_matrix((0, space.size))
    return sp.vstack(rows, format="csr")


def hinge_objective(w, b, X, y, lam):
    """lam/2 ||w||^2 + mean hinge loss; y in {-1,+1}."""
    margins = y * (X @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    return 0.5 * lam * float(w @ w) + float(hinge.mean())


def hinge_subgradient(w, b, X, y, lam):
    """Full-batch subgradient of hinge_objective w.r.t. (w, b)."""
    margins = y * (X @ w + b)
    viol = margins < 1.0
    n = len(y)
    if sp.issparse(X):
        Xv = X[viol]
        yv = y[viol]
        gw = lam * w - np.asarray(Xv.multiply(yv[:, None]).sum(axis=0)).ravel() / n
    else:
        gw = lam * w - (y[viol][:, None] * X[viol]).sum(axis=0) / n
    gb = -y[viol].sum() / n
    return gw, gb


def train(X, y, config=None):
    """Seeded stochastic subgradient descent on the regularized hinge objective.

    X is a csr matrix, y in {-1,+1}. Weight scaling keeps each update O(nnz).
    """
    config = config or SvmConfig()
    y = np.asarray(y, dtype=np.float64)
    if len(set(y.tolist())) < 2:
        raise ValueError("training data must contain both classes")
    X = sp.csr_matrix(X)
    n, d = X.shape
    rng = np.random.Generator(np.random.PCG64(config.rng_seed))
    v = np.zeros(d)
    a = 1.0  # w = a * v
    b = 0.0
    lam = config.regularization
    lr0 = config.learning_rate
    indptr, indices, data = X.indptr, X.indices, X.data
    t = 0
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for i in order:
            t += 1
            eta = lr0 / (1.0 + lr0 * lam * t)
            idx = indices[indptr[i]:indptr[i + 1]]
            vals = data[indptr[i]:indptr[i + 1]]
            margin = y[i] * (a * float(v[idx] @ vals) + b)
            a *= (1.0 - eta * lam)
            if a < 1e-9:
                v *= a
                a = 1.0
            if margin < 1.0:
                v[idx] += (eta * y[i] / a) * vals
                b += eta * y[i]
    return LinearModel(weights=a * v, bias=b, train_config=config)


def train_examples(examples, corpus, space, config=None, table=None):
    comments = [corpus.comments[ex.comment_id] for ex in examples]
    X = featurize_many(comments, space, table)
    y = np.array([1.0 if ex.label == POSITIVE else -1.0 for ex in examples])
    return train(X, y, config)


def margins(model, X):
    return np.asarray(X @ model.weights).ravel() + model.bias


def calibrate(model_margins, y):
    """Platt sigmoid fit by regularized maximum likelihood over margins.

    y in {-1,+1}; returns Calibration with p = 1/(1+exp(A*s+B)), A < 0 when
    margins are positively associated with the positive class.
    """
    f = np.asarray(model_margins, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n_pos = int((y > 0).sum())
    n_neg = int((y <= 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("calibration data must contain both classes")
    # Platt's smoothed targets act as the regularizer.
    t = np.where(y > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def nll(theta):
        A, B = theta
        z = np.clip(A * f + B, -500, 500)
        # p = 1/(1+e^z); -[t log p + (1-t) log(1-p)] = t*log(1+e^z) + (1-t)*(log(1+e^z) - z)
        log1pez = np.logaddexp(0.0, z)
        return float((log1pez - (1.0 - t) * z).sum())

    def grad(theta):
        A, B = theta
        z = np.clip(A * f + B, -500, 500)
        p = 1.0 / (1.0 + np.exp(z))
        g = t - p  # d nll / dz, since d/dz log(1+e^z) = 1 - p
        return np.array([float(g @ f), float(g.sum())])

    x0 = np.array([0.0, np.log((n_neg + 1.0) / (n_pos + 1.0))])
    res = minimize(nll, x0, jac=grad, method="BFGS")
    return Calibration(A=float(res.x[0]), B=float(res.x[1]))


def predict(model, calibration, comment, space, table=None):
    x = featurize(comment, space, table)
    if x.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"feature size {x.shape[1]} does not match model size {model.weights.shape[0]}")
    s = float(margins(model, x)[0])
    p = float(calibration.prob(s))
    return s, p, POSITIVE if p >= 0.5 else NEGATIVE


def evaluate(predictions):
    """Single-split metrics from (prob, gold_label) pairs; positive-class P/R/F1.

    AUC is the Mann-Whitney rank statistic with ties counted 0.5; reported as
    None when the gold labels are single-class.
    """
    probs = np.array([p for p, _ in predictions], dtype=np.float64)
    gold = np.array([1 if g == POSITIVE else 0 for _, g in predictions])
    pred = (probs >= 0.5).astype(int)
    tp = int(((pred == 1) & (gold == 1)).sum())
    fp = int(((pred == 1) & (gold == 0)).sum())
    fn = int(((pred == 0) & (gold == 1)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    accuracy = float((pred == gold).mean()) if len(gold) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    n_pos = int(gold.sum())
    n_neg = len(gold) - n_pos
    if n_pos and n_neg:
        ranks = rankdata(probs)
        auc = (float(ranks[gold == 1].sum()) - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)
    else:
        auc = None
    return {"precision": precision, "recall": recall, "accuracy": accuracy,
            "f1": f1, "auc": auc}


def repeated_eval(X, y, n_splits=100, train_fraction=0.9, seed=0,
                  config=None, calib_fraction=0.1):
    """Mean/std metrics over repeated random train/test splits.

    Each split derives its RNG from (seed, split index); splits without both
    classes in train are redrawn.
    """
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    n_train = int(round(n * train_fraction))
    if n_train < 2 or n_train >= n:
        raise ValueError("dataset too small for the requested train fraction")
    if len(set(y.tolist())) < 2:
        raise ValueError("dataset must contain both classes")
    X = sp.csr_matrix(X)
    per_metric = {m: [] for m in ("precision", "recall", "accuracy", "f1", "auc")}
    for split in range(n_splits):
        rng = np.random.default_rng([seed, split])
        for attempt in range(1000):
            order = rng.permutation(n)
            tr, te = order[:n_train], order[n_train:]
            if len(set(y[tr].tolist())) == 2:
                break
        else:
            raise ValueError("could not draw a split with both classes in train")
        # Hold out a slice of train for Platt calibration.
        n_cal = max(2, int(round(len(tr) * calib_fraction)))
        cal, fit = tr[:n_cal], tr[n_cal:]
        if len(set(y[fit].tolist())) < 2 or len(set(y[cal].tolist())) < 2:
            cal, fit = tr, tr  # tiny datasets: calibrate on train itself
        model = train(X[fit], y[fit], config)
        calib = calibrate(margins(model, X[cal]), y[cal])
        probs = calib.prob(margins(model, X[te]))
        preds = [(float(p), POSITIVE if yy > 0 else NEGATIVE)
                 for p, yy in zip(probs, y[te])]
        metrics = evaluate(preds)
        for m, v in metrics.items():
            if v is not None:
                per_metric[m].append(v)

    def stat(values):
        if not values:
            return (0.0, 0.0)
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        return (mean, std)

    return MetricsReport(
        precision=stat(per_metric["precision"]),
        recall=stat(per_metric["recall"]),
        accuracy=stat(per_metric["accuracy"]),
        f1=stat(per_metric["f1"]),
        auc=stat(per_metric["auc"]),
        n_splits=n_splits,
    )


def cohen_kappa(labels_a, labels_b):
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e) for binary labels."""
    if len(labels_a) != len(labels_b):
        raise ValueError("label lists must have equal length")
    if not labels_a:
        raise ValueError("label lists must be non-empty")
    n = len(labels_a)
    p_o = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    cats = set(labels_a) | set(labels_b)
    p_e = sum((labels_a.count(c) / n) * (labels_b.count(c) / n) for c in cats)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def save_model(path, model, calibration, space):
    """Versioned JSON model file; floats round-trip exactly via repr."""
    payload = {
        "version": 1,
        "ngram_vocab": {" ".join(g): i for g, i in space.ngram_vocab.items()},
        "embedding_dims": space.embedding_dims,
        "min_df": space.min_df,
        "embedding_scale": space.embedding_scale,
        "weights": [float(w) for w in model.weights],
        "bias": float(model.bias),
        "calibration": {"A": calibration.A, "B": calibration.B},
        "train_config": {
            "regularization": model.train_config.regularization,
            "epochs": model.train_config.epochs,
            "learning_rate": model.train_config.learning_rate,
            "rng_seed": model.train_config.rng_seed,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("version") != 1:
        raise ValueError(f"unsupported model file version {payload.get('version')!r}")
    space = FeatureSpace(
        ngram_vocab={tuple(k.split(" ")): i for k, i in payload["ngram_vocab"].items()},
        embedding_dims=payload["embedding_dims"],
        min_df=payload["min_df"],
        embedding_scale=payload.get("embedding_scale", 8.0),
    )
    model = LinearModel(
        weights=np.array(payload["weights"], dtype=np.float64),
        bias=float(payload["bias"]),
        train_config=SvmConfig(**payload["train_config"]),
    )
    calib = Calibration(A=payload["calibration"]["A"], B=payload["calibration"]["B"])
    return model, calib, space
