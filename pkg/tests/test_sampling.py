import numpy as np
import pytest

from rarevoice import nnindex
from rarevoice.classifier import (Calibration, LinearModel, SvmConfig,
                                  featurize_many, fit_feature_space,
                                  LabeledExample, calibrate, margins, train)
from rarevoice.corpus import Comment, Corpus
from rarevoice.sampling import (LabeledPool, SamplingBatch, certainty_sample,
                                nn_comment_sample, random_sample, run_round,
                                uncertainty_sample, user_nn_sample)
from synth import make_corpus, planted_seed_ids, positive_fraction


def small_model(corpus, oracle, seed=0):
    """Train a quick n-gram model on a few hundred oracle-labeled comments."""
    rng = np.random.default_rng(seed)
    ids = sorted(corpus.comments)
    chosen = [ids[i] for i in rng.choice(len(ids), size=400, replace=False)]
    examples = [LabeledExample(cid, oracle[cid]) for cid in chosen]
    space = fit_feature_space(examples, corpus, min_df=2)
    X = featurize_many([corpus.comments[c] for c in chosen], space)
    y = np.array([1.0 if oracle[c] == "positive" else -1.0 for c in chosen])
    model = train(X, y, SvmConfig(epochs=10))
    calib = calibrate(margins(model, X), y)
    return model, calib, space, set(chosen)


class TestRandomSample:
    def test_whole_pool_when_n_large(self):
        batch = random_sample({"a", "b", "c"}, 10, seed=0)
        assert sorted(batch.comment_ids) == ["a", "b", "c"]

    def test_deterministic(self):
        ids = {f"c{i}" for i in range(100)}
        b1 = random_sample(ids, 10, seed=5)
        b2 = random_sample(ids, 10, seed=5)
        assert b1.comment_ids == b2.comment_ids

    def test_empty_pool_error(self):
        with pytest.raises(ValueError):
            random_sample(set(), 5, seed=0)

    def test_binomial_positive_fraction(self):
        corpus, oracle = make_corpus(n_comments=3000, pos_fraction=0.10, seed=0)
        fractions = [positive_fraction(
            random_sample(set(corpus.comments), 300, seed=s).comment_ids, oracle)
            for s in range(20)]
        # 2-sigma binomial band around the planted rate.
        assert abs(np.mean(fractions) - 0.10) < 0.04

    def test_no_duplicates(self):
        batch = random_sample({f"c{i}" for i in range(50)}, 30, seed=1)
        assert len(batch.comment_ids) == len(set(batch.comment_ids))


class TestNNCommentSample:
    def index_of(self, vectors):
        return nnindex.build(vectors)

    def test_disjoint_neighbor_lists_give_full_batch(self):
        # 6 isolated clusters of 51 near-identical vectors each.
        rng = np.random.default_rng(0)
        vectors = []
        for c in range(6):
            center = np.zeros(12)
            center[2 * c] = 1.0
            for i in range(51):
                vectors.append((f"s{c}" if i == 0 else f"c{c}_{i:02d}",
                                center + 0.001 * rng.normal(size=12)))
        index = self.index_of(vectors)
        seeds = [f"s{c}" for c in range(6)]
        batch = nn_comment_sample(seeds, 50, index, labeled_ids=set(seeds))
        assert len(batch.comment_ids) == 300

    def test_identical_neighbor_lists_dedup(self):
        rng = np.random.default_rng(1)
        base = rng.normal(size=8)
        vectors = [("s1", base + 0.001), ("s2", base - 0.001)]
        vectors += [(f"n{i}", base + 0.01 * rng.normal(size=8)) for i in range(10)]
        index = self.index_of(vectors)
        batch = nn_comment_sample(["s1", "s2"], 5, index, labeled_ids={"s1", "s2"})
        assert len(batch.comment_ids) == 5

    def test_seed_without_vector_error(self):
        index = self.index_of([("a", [1.0, 0.0])])
        with pytest.raises(ValueError, match="missing"):
            nn_comment_sample(["missing"], 5, index, set())

    def test_excludes_labeled_and_seeds(self):
        index = self.index_of([("a", [1.0, 0.0]), ("b", [1.0, 0.1]),
                               ("c", [1.0, 0.2])])
        batch = nn_comment_sample(["a"], 5, index, labeled_ids={"b"})
        assert set(batch.comment_ids) == {"c"}

    def test_id_set_invariant_to_seed_order(self):
        rng = np.random.default_rng(2)
        vectors = [(f"x{i}", rng.normal(size=6)) for i in range(50)]
        index = self.index_of(vectors)
        b1 = nn_comment_sample(["x0", "x1"], 5, index, set())
        b2 = nn_comment_sample(["x1", "x0"], 5, index, set())
        assert set(b1.comment_ids) == set(b2.comment_ids)


@pytest.fixture(scope="module")
def setup():
    corpus, oracle = make_corpus(n_comments=2000, pos_fraction=0.10, seed=3)
    model, calib, space, labeled = small_model(corpus, oracle)
    return corpus, oracle, model, calib, space, labeled


class TestModelDrivenSampling:
    def test_certainty_hand_ordering(self):
        corpus = Corpus()
        for cid, text in [("a", "q q"), ("b", "q z"), ("c", "z z")]:
            corpus.comments[cid] = Comment(cid, "v", "u", text, is_english=True)
        space = fit_feature_space([LabeledExample("a", "positive"),
                                   LabeledExample("c", "negative")], corpus, 1)
        # Weight +1 on token q: margin = count of q.
        w = np.zeros(space.size)
        w[space.ngram_vocab[("q",)]] = 1.0
        model = LinearModel(weights=w, bias=0.0, train_config=SvmConfig())
        calib = Calibration(A=-1.0, B=0.0)
        batch = certainty_sample(model, calib, corpus, {"a", "b", "c"}, 2, space)
        assert batch.comment_ids == ["a", "b"]

    def test_uncertainty_hand_ordering(self):
        corpus = Corpus()
        for cid, text in [("a", "q"), ("b", "q q q q"), ("c", "z")]:
            corpus.comments[cid] = Comment(cid, "v", "u", text, is_english=True)
        space = fit_feature_space([LabeledExample("a", "positive"),
                                   LabeledExample("c", "negative")], corpus, 1)
        w = np.zeros(space.size)
        w[space.ngram_vocab[("q",)]] = 1.0
        model = LinearModel(weights=w, bias=-0.9, train_config=SvmConfig())
        calib = Calibration(A=-1.0, B=0.0)
        # margins: a=0.1, b=3.1, c=-0.9 -> |p-0.5| smallest for a.
        batch = uncertainty_sample(model, calib, corpus, {"a", "b", "c"}, 1, space)
        assert batch.comment_ids == ["a"]

    def test_uncertainty_tie_by_id(self):
        corpus = Corpus()
        for cid, text in [("a", "q"), ("b", "z")]:
            corpus.comments[cid] = Comment(cid, "v", "u", text, is_english=True)
        space = fit_feature_space([LabeledExample("a", "positive"),
                                   LabeledExample("b", "negative")], corpus, 1)
        w = np.zeros(space.size)
        w[space.ngram_vocab[("q",)]] = 2.0
        model = LinearModel(weights=w, bias=-1.0, train_config=SvmConfig())
        calib = Calibration(A=-1.0, B=0.0)
        # margins a=+1, b=-1: equal distance from 0.5 probability.
        batch = uncertainty_sample(model, calib, corpus, {"a", "b"}, 2, space)
        assert batch.comment_ids == ["a", "b"]

    def test_certainty_reproducible(self, setup):
        corpus, oracle, model, calib, space, labeled = setup
        unlabeled = set(corpus.comments) - labeled
        b1 = certainty_sample(model, calib, corpus, unlabeled, 50, space)
        b2 = certainty_sample(model, calib, corpus, unlabeled, 50, space)
        assert b1.comment_ids == b2.comment_ids

    def test_certainty_enriches_positives(self, setup):
        corpus, oracle, model, calib, space, labeled = setup
        unlabeled = set(corpus.comments) - labeled
        batch = certainty_sample(model, calib, corpus, unlabeled, 100, space)
        assert positive_fraction(batch.comment_ids, oracle) > 0.5

    def test_k_larger_than_pool(self, setup):
        corpus, oracle, model, calib, space, labeled = setup
        batch = certainty_sample(model, calib, corpus, {"c000000", "c000001"},
                                 99, space)
        assert len(batch.comment_ids) == 2


class TestRunRound:
    def test_seed_round(self):
        pool = LabeledPool()
        batch = SamplingBatch(strategy="seed",
                              comment_ids=[f"p{i}" for i in range(6)]
                              + [f"n{i}" for i in range(5)])
        labels = {f"p{i}": "positive" for i in range(6)}
        labels |= {f"n{i}": "negative" for i in range(5)}
        run_round(pool, batch, labels)
        assert len(pool.examples) == 11
        assert pool.counts() == (6, 5)
        assert pool.round_counter == 1

    def test_relabeling_is_error(self):
        pool = LabeledPool()
        batch = SamplingBatch(strategy="random", comment_ids=["a"])
        run_round(pool, batch, {"a": "positive"})
        with pytest.raises(ValueError, match="already labeled"):
            run_round(pool, SamplingBatch(strategy="random", comment_ids=["a"]),
                      {"a": "negative"})

    def test_label_outside_batch_error(self):
        pool = LabeledPool()
        batch = SamplingBatch(strategy="random", comment_ids=["a"])
        with pytest.raises(ValueError, match="outside"):
            run_round(pool, batch, {"a": "positive", "b": "negative"})

    def test_missing_label_error(self):
        pool = LabeledPool()
        batch = SamplingBatch(strategy="random", comment_ids=["a", "b"])
        with pytest.raises(ValueError, match="missing"):
            run_round(pool, batch, {"a": "positive"})

    def test_paper_shaped_certainty_round(self):
        pool = LabeledPool()
        pre = SamplingBatch(strategy="seed",
                            comment_ids=[f"x{i:04d}" for i in range(826)])
        labels = {f"x{i:04d}": ("positive" if i < 164 else "negative")
                  for i in range(826)}
        run_round(pool, pre, labels)
        assert pool.counts() == (164, 662)
        cert = SamplingBatch(strategy="certainty",
                             comment_ids=[f"y{i:04d}" for i in range(1000)])
        labels = {f"y{i:04d}": ("positive" if i < 611 else "negative")
                  for i in range(1000)}
        run_round(pool, cert, labels)
        assert pool.counts() == (775, 1051)

    def test_pool_export_round_trip(self, tmp_path):
        pool = LabeledPool()
        run_round(pool, SamplingBatch(strategy="random", comment_ids=["a", "b"]),
                  {"a": "positive", "b": "negative"})
        path = tmp_path / "pool.jsonl"
        pool.export(path)
        loaded = LabeledPool.load(path)
        assert [e.to_dict() for e in loaded.examples] == \
               [e.to_dict() for e in pool.examples]
        assert loaded.round_counter == 1


class TestUserNNSample:
    def test_planted_sympathetic_community(self):
        corpus, oracle = make_corpus(n_comments=3000, pos_fraction=0.10, seed=5,
                                     sympathetic_users=True)
        model, calib, space, labeled = small_model(corpus, oracle, seed=5)
        # User vectors from a bag-of-oracle proxy: use n-gram margins per user.
        from rarevoice.embeddings import (TrainConfig, compose_comment_vectors,
                                          train_embeddings, user_embedding)
        table = train_embeddings(corpus, TrainConfig(
            dim=24, epochs=1, window=3, min_count=2, bucket_count=2000,
            rng_seed=0))
        uvecs = []
        for uid in corpus.users:
            try:
                uv = user_embedding(table, corpus.comments_by_user(uid))
            except ValueError:
                continue
            uvecs.append((uid, uv.values))
        user_index = nnindex.build(uvecs)
        batch = user_nn_sample(model, calib, corpus, user_index, labeled,
                               space, k=10, m=10, n_comments=300, seed=0)
        rand = random_sample(set(corpus.comments) - labeled, 300, seed=0)
        assert positive_fraction(batch.comment_ids, oracle) >= \
            2 * positive_fraction(rand.comment_ids, oracle)

    def test_unique_author_count_recorded(self):
        corpus, oracle = make_corpus(n_comments=1000, pos_fraction=0.10, seed=7,
                                     sympathetic_users=True)
        model, calib, space, labeled = small_model(corpus, oracle, seed=7)
        rng = np.random.default_rng(0)
        uvecs = [(uid, rng.normal(size=8)) for uid in corpus.users]
        user_index = nnindex.build(uvecs)
        batch = user_nn_sample(model, calib, corpus, user_index, labeled,
                               space, k=10, m=10, n_comments=50, seed=0)
        assert 1 <= len(batch.params["top_authors"]) <= 10
        assert batch.params["n_neighbor_users"] <= \
            10 * len(batch.params["top_authors"])

    def test_batch_disjoint_from_labeled(self):
        corpus, oracle = make_corpus(n_comments=1000, pos_fraction=0.10, seed=7,
                                     sympathetic_users=True)
        model, calib, space, labeled = small_model(corpus, oracle, seed=7)
        rng = np.random.default_rng(0)
        user_index = nnindex.build([(uid, rng.normal(size=8))
                                    for uid in corpus.users])
        batch = user_nn_sample(model, calib, corpus, user_index, labeled,
                               space, k=10, m=10, n_comments=50, seed=0)
        assert set(batch.comment_ids) & labeled == set()
