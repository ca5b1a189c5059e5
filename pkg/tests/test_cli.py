import json

import numpy as np
import pytest
from click.testing import CliRunner

from rarevoice.cli import main

POS_WORDS = ["support", "help", "kind", "stand", "rights", "protect"]
BG_WORDS = ["market", "weather", "game", "music", "score", "travel",
            "river", "garden", "coffee", "cinema"]


def build_corpus_file(path, n=200, n_pos=60, seed=0):
    """Line-delimited corpus with a planted positive vocabulary; every comment
    carries enough function words to pass the language filter."""
    rng = np.random.default_rng(seed)
    oracle = {}
    with open(path, "w", encoding="utf-8") as fh:
        for v in range(4):
            fh.write(json.dumps({"kind": "video", "id": f"v{v}",
                                 "channel_id": f"ch{v % 2}", "title": f"video {v}",
                                 "views": 100 * (v + 1), "likes": 10, "dislikes": 1,
                                 "comment_count": 0}) + "\n")
        for i in range(n):
            positive = i < n_pos
            vocab = POS_WORDS if positive else BG_WORDS
            words = [vocab[int(rng.integers(0, len(vocab)))] for _ in range(6)]
            text = "the " + " ".join(words) + " of it"
            cid = f"c{i:04d}"
            oracle[cid] = "positive" if positive else "negative"
            fh.write(json.dumps({"kind": "comment", "id": cid,
                                 "video_id": f"v{i % 4}", "user_id": f"u{i % 30}",
                                 "text": text}) + "\n")
    return oracle


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    corpus = root / "corpus.jsonl"
    oracle = build_corpus_file(corpus)
    pool = root / "pool.jsonl"
    with open(pool, "w", encoding="utf-8") as fh:
        for i in range(0, 200, 2):
            cid = f"c{i:04d}"
            fh.write(json.dumps({"comment_id": cid, "label": oracle[cid],
                                 "round": 1, "strategy": "seed",
                                 "annotator_labels": []}) + "\n")
    return root, corpus, pool, oracle


def run(args):
    return CliRunner().invoke(main, args)


def ok(result):
    assert result.exit_code == 0, result.output + str(result.exception)
    return result


class TestPipeline:
    def test_ingest(self, workspace):
        root, corpus, _, _ = workspace
        manifest = root / "manifest.json"
        r = ok(run(["ingest", "--input", str(corpus), "--manifest", str(manifest)]))
        assert "ingested 200 comments" in r.output
        payload = json.loads(manifest.read_text())
        assert payload["n_comments"] == 200
        assert payload["n_videos"] == 4
        assert payload["line_errors"] == []

    def test_embed_train_compose_index(self, workspace):
        root, corpus, _, _ = workspace
        vecs = root / "words.vec"
        ok(run(["embed-train", "--corpus", str(corpus), "--out", str(vecs),
                "--dim", "16", "--epochs", "2", "--buckets", "2000",
                "--min-count", "2"]))
        assert vecs.exists()
        comment_vecs = root / "comments.vec"
        r = ok(run(["embed-compose", "--corpus", str(corpus),
                    "--vectors", str(vecs), "--out", str(comment_vecs),
                    "--level", "comment"]))
        assert "composed 200 comment vectors" in r.output
        user_vecs = root / "users.vec"
        r = ok(run(["embed-compose", "--corpus", str(corpus),
                    "--vectors", str(vecs), "--out", str(user_vecs),
                    "--level", "user"]))
        assert "composed 30 user vectors" in r.output
        index = root / "index.vec"
        ok(run(["index-build", "--vectors", str(comment_vecs),
                "--out", str(index)]))

    def test_lexicon_induce(self, workspace):
        root, corpus, _, _ = workspace
        vecs = root / "words.vec"
        seeds = root / "seeds.json"
        seeds.write_text(json.dumps({"positive": ["support", "help"],
                                     "negative": ["market", "weather"]}))
        lex = root / "lexicon.txt"
        ok(run(["lexicon-induce", "--vectors", str(vecs), "--out", str(lex),
                "--seeds", str(seeds), "--graph-k", "5"]))
        scores = {}
        for line in lex.read_text().splitlines():
            tok, val = line.rsplit(" ", 1)
            scores[tok] = float(val)
        assert scores["support"] > scores["market"]

    def test_analyze_commands(self, workspace):
        root, corpus, _, _ = workspace
        out = root / "template.json"
        ok(run(["analyze", "template", "--corpus", str(corpus),
                "--template", "the", "--out", str(out)]))
        assert json.loads(out.read_text())["following_tokens"]
        out = root / "rank.json"
        r = ok(run(["analyze", "ngram-rank", "--corpus", str(corpus),
                    "--phrase", "of it", "--out", str(out)]))
        assert "rank 1" in r.output
        channels = root / "channels.txt"
        channels.write_text("ch0\n")
        out = root / "partition.json"
        r = ok(run(["analyze", "partition", "--corpus", str(corpus),
                    "--channels", str(channels), "--out", str(out)]))
        assert "2 / 2" in r.output
        out = root / "overlap.json"
        ok(run(["analyze", "overlap", "--corpus", str(corpus),
                "--channels", str(channels), "--out", str(out)]))
        assert 0.0 <= json.loads(out.read_text())["jaccard"] <= 1.0
        out = root / "dominant.json"
        ok(run(["analyze", "dominant", "--corpus", str(corpus),
                "--channels", str(channels), "--out", str(out)]))
        out = root / "vstats.json"
        ok(run(["analyze", "video-stats", "--corpus", str(corpus),
                "--out", str(out)]))
        assert json.loads(out.read_text())["views"]["mean"] == 250.0
        out = root / "sentiment.json"
        ok(run(["analyze", "sentiment", "--corpus", str(corpus),
                "--lexicon", str(root / "lexicon.txt"), "--out", str(out)]))
        shares = json.loads(out.read_text())
        assert shares["positive"] + shares["negative"] + shares["neutral"] == \
               pytest.approx(1.0)

    def test_train_eval_rank(self, workspace):
        root, corpus, pool, oracle = workspace
        model = root / "model.json"
        r = ok(run(["train", "--corpus", str(corpus), "--pool", str(pool),
                    "--min-df", "1", "--out", str(model)]))
        assert "trained on" in r.output
        report = root / "metrics.json"
        r = ok(run(["eval", "--corpus", str(corpus), "--pool", str(pool),
                    "--min-df", "1", "--splits", "5", "--out", str(report)]))
        payload = json.loads(report.read_text())
        assert payload["f1"]["mean"] > 0.8  # planted vocabulary is separable
        ranked = root / "ranked.json"
        ok(run(["rank", "--corpus", str(corpus), "--model", str(model),
                "--pool", str(pool), "--top", "20", "--out", str(ranked)]))
        items = json.loads(ranked.read_text())["items"]
        assert len(items) == 20
        top_ids = [it["comment_id"] for it in items[:10]]
        hits = sum(1 for cid in top_ids if oracle[cid] == "positive")
        assert hits >= 8

    def test_sampling_commands(self, workspace):
        root, corpus, pool, _ = workspace
        batch = root / "batch_random.json"
        r = ok(run(["sample", "random", "--corpus", str(corpus),
                    "--pool", str(pool), "--n", "25", "--seed", "7",
                    "--out", str(batch)]))
        payload = json.loads(batch.read_text())
        assert len(payload["comment_ids"]) == 25
        assert payload["round"] == 2
        seeds = root / "seed_ids.json"
        seeds.write_text(json.dumps(["c0000", "c0001"]))
        nn_batch = root / "batch_nn.json"
        ok(run(["sample", "nn-comment", "--vectors", str(root / "comments.vec"),
                "--seeds", str(seeds), "--k-per-seed", "5",
                "--out", str(nn_batch)]))
        ids = json.loads(nn_batch.read_text())["comment_ids"]
        assert 5 <= len(ids) <= 10
        for strategy in ("certainty", "uncertainty"):
            out = root / f"batch_{strategy}.json"
            ok(run(["sample", strategy, "--corpus", str(corpus),
                    "--model", str(root / "model.json"), "--pool", str(pool),
                    "--k", "10", "--out", str(out)]))
            assert len(json.loads(out.read_text())["comment_ids"]) == 10
        out = root / "batch_user.json"
        ok(run(["sample", "nn-user", "--corpus", str(corpus),
                "--model", str(root / "model.json"),
                "--user-vectors", str(root / "users.vec"),
                "--pool", str(pool), "--k", "3", "--m", "3",
                "--n-comments", "15", "--out", str(out)]))
        assert json.loads(out.read_text())["comment_ids"]

    def test_label_round_trip(self, workspace):
        root, corpus, _, oracle = workspace
        batch_path = root / "batch_random.json"
        batch_ids = json.loads(batch_path.read_text())["comment_ids"]
        log = root / "labels.jsonl"
        with open(log, "w", encoding="utf-8") as fh:
            for annotator in ("ann_a", "ann_b"):
                for cid in batch_ids:
                    fh.write(json.dumps({"comment_id": cid,
                                         "annotator_id": annotator,
                                         "label": oracle[cid], "round": 2,
                                         "recorded_at": 0.0}) + "\n")
        r = ok(run(["kappa", "--log", str(log), "--round", "2",
                    "--annotators", "ann_a,ann_b"]))
        assert "kappa 1.0000" in r.output
        exported = root / "labels_export.jsonl"
        r = ok(run(["export", "--log", str(log), "--round", "2",
                    "--out", str(exported)]))
        assert f"exported {2 * len(batch_ids)} label records" in r.output
        pool_out = root / "pool2.jsonl"
        r = ok(run(["resolve", "--batch", str(batch_path), "--log", str(log),
                    "--annotators", "ann_a,ann_b",
                    "--pool", str(root / "pool.jsonl"),
                    "--out", str(pool_out)]))
        assert "(0 skipped)" in r.output
        lines = pool_out.read_text().strip().splitlines()
        assert len(lines) == 100 + len(batch_ids)


class TestErrors:
    def test_domain_error_exits_one_with_json(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        result = run(["train", "--corpus", str(empty),
                      "--pool", str(empty), "--out", str(tmp_path / "m.json")])
        assert result.exit_code == 1
        payload = json.loads(result.stderr.strip().splitlines()[-1])
        assert payload["code"] == "error"

    def test_usage_error_exits_two(self):
        assert run(["train"]).exit_code == 2

    def test_missing_file_exits_two(self, tmp_path):
        result = run(["ingest", "--input", str(tmp_path / "nope.jsonl"),
                      "--manifest", str(tmp_path / "m.json")])
        assert result.exit_code == 2
