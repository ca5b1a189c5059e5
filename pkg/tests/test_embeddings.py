import numpy as np
import pytest

from rarevoice.corpus import Comment, Corpus
from rarevoice.embeddings import (CommentVector, EmbeddingTable, TrainConfig,
                                  comment_embedding, compose_comment_vectors,
                                  effective_word_vector, fnv1a_64, load_table,
                                  save_table, subword_ngrams, train_embeddings,
                                  user_embedding)
from synth import cooccurrence_corpus

TOY_CONFIG = TrainConfig(dim=24, epochs=3, window=3, negative_samples=5,
                         learning_rate=0.05, min_count=2, bucket_count=5000,
                         subword_range=(3, 6), rng_seed=1)


@pytest.fixture(scope="module")
def toy_table():
    corpus = cooccurrence_corpus(n_sentences=4000, seed=0)
    return train_embeddings(corpus, TOY_CONFIG)


def manual_table(vectors, dim=2):
    return EmbeddingTable(dim=dim, word_vectors={k: np.array(v, dtype=float)
                                                 for k, v in vectors.items()},
                          bucket_vectors=None, bucket_count=0, subword_range=(0, 0))


def make_comment(cid, text):
    return Comment(cid, "v", "u", text)


class TestSubwords:
    def test_ngram_enumeration(self):
        grams = subword_ngrams("ab", 3, 4)
        assert grams == ["<ab", "ab>", "<ab>"]

    def test_fnv1a_known_value(self):
        # FNV-1a 64-bit of empty input is the offset basis.
        assert fnv1a_64(b"") == 0xCBF29CE484222325
        assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C


class TestTraining:
    def test_cooccurring_words_closer_than_unrelated(self, toy_table):
        def cos(a, b):
            va = effective_word_vector(toy_table, a)
            vb = effective_word_vector(toy_table, b)
            return va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb))
        assert cos("apple", "fruit") > cos("apple", "rock")

    def test_subword_bridging_of_misspellings(self, toy_table):
        va = effective_word_vector(toy_table, "bhudists")
        vb = effective_word_vector(toy_table, "buddhists")
        sim = va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb))
        assert sim > 0.5

    def test_same_seed_bit_identical(self):
        corpus = cooccurrence_corpus(n_sentences=200, seed=0)
        cfg = TrainConfig(dim=8, epochs=1, window=2, bucket_count=100, rng_seed=7)
        t1 = train_embeddings(corpus, cfg)
        t2 = train_embeddings(corpus, cfg)
        assert set(t1.word_vectors) == set(t2.word_vectors)
        for tok in t1.word_vectors:
            assert np.array_equal(t1.word_vectors[tok], t2.word_vectors[tok])
        assert np.array_equal(t1.bucket_vectors, t2.bucket_vectors)

    def test_min_count_above_all_frequencies(self):
        corpus = cooccurrence_corpus(n_sentences=20, seed=0)
        cfg = TrainConfig(dim=4, epochs=1, window=2, bucket_count=50,
                          min_count=10_000, rng_seed=0)
        table = train_embeddings(corpus, cfg)
        assert table.word_vectors == {}
        assert table.bucket_vectors.shape == (50, 4)

    def test_empty_corpus_error(self):
        with pytest.raises(ValueError):
            train_embeddings(Corpus(), TOY_CONFIG)

    def test_invalid_dim(self):
        with pytest.raises(ValueError):
            TrainConfig(dim=0).validate()

    def test_loss_non_increasing_within_tolerance(self, toy_table):
        losses = toy_table.epoch_losses
        assert len(losses) == TOY_CONFIG.epochs
        for prev, nxt in zip(losses, losses[1:]):
            assert nxt <= prev * 1.05


class TestEffectiveVector:
    def test_consistent_between_calls(self, toy_table):
        a = effective_word_vector(toy_table, "apple")
        b = effective_word_vector(toy_table, "apple")
        assert np.array_equal(a, b)

    def test_oov_without_subwords_is_zero(self):
        table = manual_table({"a": [1.0, 0.0]})
        assert np.array_equal(effective_word_vector(table, "zz"), np.zeros(2))

    def test_in_vocab_equals_word_plus_subwords(self, toy_table):
        tok = "apple"
        expected = toy_table.word_vectors[tok].copy()
        from rarevoice.embeddings import subword_buckets
        for b in subword_buckets(tok, *toy_table.subword_range,
                                 toy_table.bucket_count):
            expected = expected + toy_table.bucket_vectors[b]
        assert np.allclose(effective_word_vector(toy_table, tok), expected)


class TestCommentEmbedding:
    def test_single_token(self):
        table = manual_table({"hello": [3.0, 4.0]})
        cv = comment_embedding(table, make_comment("c", "hello"), normalize=True)
        assert np.allclose(cv.values, [0.6, 0.8])
        assert cv.normalized and cv.usable

    def test_two_token_average_unnormalized(self):
        table = manual_table({"a": [1.0, 0.0], "b": [0.0, 1.0]})
        cv = comment_embedding(table, make_comment("c", "a b"), normalize=False)
        assert np.allclose(cv.values, [0.5, 0.5])

    def test_empty_comment_flagged(self):
        table = manual_table({"a": [1.0, 0.0]})
        cv = comment_embedding(table, make_comment("c", "..."), normalize=True)
        assert not cv.usable
        assert np.array_equal(cv.values, np.zeros(2))

    def test_normalized_norm_within_tolerance(self, toy_table):
        cv = comment_embedding(toy_table, make_comment("c", "apple fruit w01"))
        assert abs(np.linalg.norm(cv.values) - 1.0) < 1e-6

    def test_compose_matches_single(self, toy_table):
        comments = [make_comment("c1", "apple fruit"), make_comment("c2", "rock w03")]
        composed = compose_comment_vectors(toy_table, comments)
        for c in comments:
            single = comment_embedding(toy_table, c)
            assert np.allclose(composed[c.id].values, single.values)


class TestUserEmbedding:
    def test_single_comment(self):
        table = manual_table({"a": [2.0, 0.0]})
        uv = user_embedding(table, [make_comment("c", "a")])
        assert np.allclose(uv.values, [1.0, 0.0])
        assert uv.comment_count == 1

    def test_two_comment_mean(self):
        table = manual_table({"a": [1.0, 0.0], "b": [0.0, 1.0]})
        uv = user_embedding(table, [make_comment("c1", "a"), make_comment("c2", "b")])
        assert np.allclose(uv.values, [0.5, 0.5])

    def test_permutation_invariance_exact(self):
        table = manual_table({"a": [1.0, 2.0], "b": [3.0, 1.0], "c": [0.5, 0.5]})
        comments = [make_comment(f"c{i}", t) for i, t in enumerate(["a", "b", "c"])]
        u1 = user_embedding(table, comments)
        u2 = user_embedding(table, comments[::-1])
        assert np.array_equal(u1.values, u2.values)

    def test_no_usable_comments_error(self):
        table = manual_table({"a": [1.0, 0.0]})
        with pytest.raises(ValueError, match="u"):
            user_embedding(table, [make_comment("c", "???")])


class TestSaveLoad:
    def test_round_trip(self, toy_table, tmp_path):
        path = tmp_path / "vectors.txt"
        save_table(path, toy_table)
        loaded = load_table(path)
        assert loaded.dim == toy_table.dim
        assert not loaded.has_subwords
        for tok in toy_table.word_vectors:
            assert np.array_equal(loaded.word_vectors[tok],
                                  effective_word_vector(toy_table, tok))
