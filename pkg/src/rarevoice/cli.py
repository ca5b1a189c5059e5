"""Command-line driver for the full pipeline."""

import functools
import json
import sys

import click
import numpy as np

from . import analytics, embeddings, nnindex, sampling
from .classifier import (LabeledExample, SvmConfig, calibrate, cohen_kappa,
                         featurize_many, fit_feature_space, load_model, margins,
                         repeated_eval, save_model, train as train_svm)
from .corpus import ingest as ingest_stream
from .labeling import AdjudicationRecord, LabelLog, rank_wild, resolve_round
from .lexicon import (DEFAULT_NEGATIVE_SEEDS, DEFAULT_POSITIVE_SEEDS, Lexicon,
                      SeedSet, induce_lexicon)
from .sampling import LabeledPool, SamplingBatch


def fail(code, message, **details):
    sys.stderr.write(json.dumps({"code": code, "message": message,
                                 "details": details}) + "\n")
    sys.exit(1)


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, OSError, KeyError) as exc:
            fail("error", str(exc))
    return wrapper


def load_corpus(path):
    with open(path, encoding="utf-8") as fh:
        return ingest_stream(fh)


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)


@click.group()
def main():
    """Rare-class active-learning workbench."""


@main.command("ingest")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", required=True, type=click.Path())
@guarded
def cmd_ingest(input_path, manifest):
    """Ingest a line-delimited JSON corpus and write its manifest."""
    corpus = load_corpus(input_path)
    write_json(manifest, corpus.report.to_dict())
    click.echo(f"ingested {corpus.report.n_comments} comments, "
               f"{corpus.report.n_videos} videos, {corpus.report.n_users} users")


@main.command("embed-train")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--dim", default=100, show_default=True)
@click.option("--epochs", default=5, show_default=True)
@click.option("--window", default=5, show_default=True)
@click.option("--negative", default=5, show_default=True)
@click.option("--lr", default=0.05, show_default=True)
@click.option("--min-count", default=2, show_default=True)
@click.option("--buckets", default=200_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@guarded
def cmd_embed_train(corpus_path, out, dim, epochs, window, negative, lr,
                    min_count, buckets, seed):
    """Train subword embeddings and save the vocabulary vectors."""
    corpus = load_corpus(corpus_path)
    config = embeddings.TrainConfig(dim=dim, epochs=epochs, window=window,
                                    negative_samples=negative, learning_rate=lr,
                                    min_count=min_count, bucket_count=buckets,
                                    rng_seed=seed)
    table = embeddings.train_embeddings(corpus, config)
    embeddings.save_table(out, table)
    click.echo(f"trained {len(table.word_vectors)} word vectors (dim {dim})")


@main.command("embed-compose")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--vectors", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--level", type=click.Choice(["comment", "user"]), default="comment",
              show_default=True)
@guarded
def cmd_embed_compose(corpus_path, vectors, out, level):
    """Compose comment or user vectors from saved word vectors."""
    corpus = load_corpus(corpus_path)
    table = embeddings.load_table(vectors)
    composed = {}
    if level == "comment":
        for comment in corpus.comments.values():
            cv = embeddings.comment_embedding(table, comment, normalize=True)
            if cv.usable:
                composed[cv.comment_id] = cv.values
    else:
        for uid in corpus.users:
            comments = corpus.comments_by_user(uid)
            try:
                uv = embeddings.user_embedding(table, comments)
            except ValueError:
                continue
            composed[uid] = uv.values
    embeddings.save_vectors(out, composed, table.dim)
    click.echo(f"composed {len(composed)} {level} vectors")


@main.command("index-build")
@click.option("--vectors", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_index_build(vectors, out):
    """Normalize a vector store into an index file."""
    vecs, dim = embeddings.load_vectors(vectors)
    index = nnindex.build(list(vecs.items()))
    embeddings.save_vectors(out, {i: index.vector(i) for i in index.ids}, dim)
    click.echo(f"indexed {len(index)} vectors "
               f"({len(index.skipped_ids)} zero vectors skipped)")


@main.command("lexicon-induce")
@click.option("--vectors", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--seeds", "seeds_path", type=click.Path(exists=True),
              help="JSON file {positive: [...], negative: [...]}; built-in seeds by default.")
@click.option("--graph-k", default=25, show_default=True)
@click.option("--beta", default=0.9, show_default=True)
@guarded
def cmd_lexicon_induce(vectors, out, seeds_path, graph_k, beta):
    """Induce a sentiment lexicon from word vectors by label propagation."""
    table = embeddings.load_table(vectors)
    if seeds_path:
        with open(seeds_path, encoding="utf-8") as fh:
            obj = json.load(fh)
        seeds = SeedSet(positive=obj["positive"], negative=obj["negative"])
    else:
        seeds = SeedSet(positive=DEFAULT_POSITIVE_SEEDS,
                        negative=DEFAULT_NEGATIVE_SEEDS)
    lex = induce_lexicon(table, seeds, graph_k=graph_k, restart_beta=beta)
    lex.save(out)
    click.echo(f"induced lexicon over {len(lex.scores)} tokens")


@main.group("analyze")
def analyze():
    """Descriptive corpus analyses."""


@analyze.command("template")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--template", "template_str", required=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_template(corpus_path, template_str, out):
    corpus = load_corpus(corpus_path)
    template = template_str.split()
    counts = analytics.template_following_tokens(corpus, template)
    write_json(out, {"template": template, "following_tokens": counts})
    click.echo(f"{len(counts)} distinct following tokens")


@analyze.command("ngram-rank")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--phrase", required=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_ngram_rank(corpus_path, phrase, out):
    corpus = load_corpus(corpus_path)
    result = analytics.ngram_rank(corpus, phrase.split())
    write_json(out, {"phrase": phrase.split(),
                     "result": result if result else "absent"})
    click.echo("absent" if result is None else
               f"rank {result['rank']} of {result['unique_ngrams']} "
               f"(percentile {result['percentile']:.2f})")


@analyze.command("partition")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--channels", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_partition(corpus_path, channels, out):
    corpus = load_corpus(corpus_path)
    with open(channels, encoding="utf-8") as fh:
        channel_ids = [line.strip() for line in fh if line.strip()]
    part = analytics.partition_videos(corpus, channel_ids)
    write_json(out, {"roh_channel_ids": channel_ids,
                     "roh_video_ids": sorted(part.roh_video_ids),
                     "other_video_ids": sorted(part.other_video_ids)})
    click.echo(f"partition sizes: {len(part.roh_video_ids)} / {len(part.other_video_ids)}")


def _load_partition(corpus, channels_path):
    with open(channels_path, encoding="utf-8") as fh:
        channel_ids = [line.strip() for line in fh if line.strip()]
    return analytics.partition_videos(corpus, channel_ids)


@analyze.command("overlap")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--channels", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_overlap(corpus_path, channels, out):
    corpus = load_corpus(corpus_path)
    result = analytics.user_overlap(corpus, _load_partition(corpus, channels))
    write_json(out, result)
    click.echo(f"jaccard {result['jaccard']:.4f}")


@analyze.command("dominant")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--channels", required=True, type=click.Path(exists=True))
@click.option("--threshold", default=0.8, show_default=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_dominant(corpus_path, channels, threshold, out):
    corpus = load_corpus(corpus_path)
    result = analytics.dominant_side_users(corpus, _load_partition(corpus, channels),
                                           threshold)
    write_json(out, {"threshold": threshold,
                     "roh_to_other": sorted(result.roh_to_other),
                     "other_to_roh": sorted(result.other_to_roh)})
    click.echo(f"{len(result.roh_to_other)} roh-dominant, "
               f"{len(result.other_to_roh)} other-dominant users")


@analyze.command("sentiment")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", required=True, type=click.Path(exists=True))
@click.option("--cutoff", default=3.0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_sentiment(corpus_path, lexicon_path, cutoff, out):
    corpus = load_corpus(corpus_path)
    lex = Lexicon.load(lexicon_path)
    pos, neg, neu = analytics.sentiment_share(
        list(corpus.comments.values()), lex, cutoff)
    write_json(out, {"cutoff": cutoff, "positive": pos, "negative": neg,
                     "neutral": neu})
    click.echo(f"pos {pos:.3f} / neg {neg:.3f} / neutral {neu:.3f}")


@analyze.command("video-stats")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_video_stats(corpus_path, out):
    corpus = load_corpus(corpus_path)
    stats = analytics.video_stats(corpus)
    write_json(out, {f: {"mean": m, "std": s} for f, (m, s) in stats.items()})
    click.echo("wrote video stats")


def _load_pool(path):
    return LabeledPool.load(path) if path else LabeledPool()


def _load_bundle(model_path, vectors_path):
    model, calib, space = load_model(model_path)
    table = embeddings.load_table(vectors_path) if vectors_path else None
    return model, calib, space, table


@main.group("sample")
def sample():
    """Generate a sampling batch."""


@sample.command("random")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--pool", "pool_path", type=click.Path(exists=True))
@click.option("--n", default=300, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_sample_random(corpus_path, pool_path, n, seed, out):
    corpus = load_corpus(corpus_path)
    pool = _load_pool(pool_path)
    unlabeled = set(corpus.comments) - pool.labeled_ids
    batch = sampling.random_sample(unlabeled, n, seed)
    batch.round = pool.round_counter + 1
    batch.save(out)
    click.echo(f"sampled {len(batch.comment_ids)} comments")


@sample.command("nn-comment")
@click.option("--vectors", required=True, type=click.Path(exists=True),
              help="Comment vector store.")
@click.option("--seeds", "seeds_path", required=True, type=click.Path(exists=True),
              help="JSON list of positive seed comment ids.")
@click.option("--k-per-seed", default=50, show_default=True)
@click.option("--pool", "pool_path", type=click.Path(exists=True))
@click.option("--pooled", is_flag=True,
              help="Use a global top-(k*seeds) over max seed similarity instead.")
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_sample_nn_comment(vectors, seeds_path, k_per_seed, pool_path, pooled, out):
    vecs, _dim = embeddings.load_vectors(vectors)
    index = nnindex.build(list(vecs.items()))
    with open(seeds_path, encoding="utf-8") as fh:
        seed_ids = json.load(fh)
    pool = _load_pool(pool_path)
    if pooled:
        batch = sampling.nn_comment_sample_pooled(
            seed_ids, k_per_seed * len(seed_ids), index, pool.labeled_ids)
    else:
        batch = sampling.nn_comment_sample(seed_ids, k_per_seed, index,
                                           pool.labeled_ids)
    batch.round = pool.round_counter + 1
    batch.save(out)
    click.echo(f"sampled {len(batch.comment_ids)} comments")


def _model_batch_command(strategy):
    @click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
    @click.option("--model", "model_path", required=True, type=click.Path(exists=True))
    @click.option("--vectors", "vectors_path", type=click.Path(exists=True))
    @click.option("--pool", "pool_path", type=click.Path(exists=True))
    @click.option("--k", default=1000, show_default=True)
    @click.option("--out", required=True, type=click.Path())
    @guarded
    def cmd(corpus_path, model_path, vectors_path, pool_path, k, out):
        corpus = load_corpus(corpus_path)
        model, calib, space, table = _load_bundle(model_path, vectors_path)
        pool = _load_pool(pool_path)
        unlabeled = set(corpus.comments) - pool.labeled_ids
        fn = (sampling.certainty_sample if strategy == "certainty"
              else sampling.uncertainty_sample)
        batch = fn(model, calib, corpus, unlabeled, k, space, table)
        batch.round = pool.round_counter + 1
        batch.save(out)
        click.echo(f"sampled {len(batch.comment_ids)} comments")
    return cmd


sample.command("certainty")(_model_batch_command("certainty"))
sample.command("uncertainty")(_model_batch_command("uncertainty"))


@sample.command("nn-user")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--vectors", "vectors_path", type=click.Path(exists=True))
@click.option("--user-vectors", required=True, type=click.Path(exists=True))
@click.option("--pool", "pool_path", type=click.Path(exists=True))
@click.option("--k", default=10, show_default=True)
@click.option("--m", default=10, show_default=True)
@click.option("--n-comments", default=300, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_sample_nn_user(corpus_path, model_path, vectors_path, user_vectors,
                       pool_path, k, m, n_comments, seed, out):
    corpus = load_corpus(corpus_path)
    model, calib, space, table = _load_bundle(model_path, vectors_path)
    uvecs, _dim = embeddings.load_vectors(user_vectors)
    user_index = nnindex.build(list(uvecs.items()))
    pool = _load_pool(pool_path)
    batch = sampling.user_nn_sample(model, calib, corpus, user_index,
                                    pool.labeled_ids, space, table,
                                    k=k, m=m, n_comments=n_comments, seed=seed)
    batch.round = pool.round_counter + 1
    batch.save(out)
    click.echo(f"sampled {len(batch.comment_ids)} comments")


@main.command("resolve")
@click.option("--batch", "batch_path", required=True, type=click.Path(exists=True))
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--adjudications", "adj_path", type=click.Path(exists=True))
@click.option("--annotators", required=True, help="Comma-separated pair of ids.")
@click.option("--pool", "pool_path", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_resolve(batch_path, log_path, adj_path, annotators, pool_path, out):
    """Resolve a labeled round into the pool export."""
    batch = SamplingBatch.load(batch_path)
    log = LabelLog(log_path)
    adjudications = []
    if adj_path:
        with open(adj_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    adjudications.append(AdjudicationRecord.from_dict(json.loads(line)))
    annotator_ids = [a.strip() for a in annotators.split(",")]
    resolved, skipped = resolve_round(log, adjudications, batch.round,
                                      batch.comment_ids, annotator_ids)
    pool = _load_pool(pool_path)
    batch.comment_ids = [c for c in batch.comment_ids if c not in skipped]
    sampling.run_round(pool, batch, resolved)
    pool.export(out)
    pos, neg = pool.counts()
    click.echo(f"pool now {pos} positives / {neg} negatives "
               f"({len(skipped)} skipped)")


@main.command("train")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--vectors", "vectors_path", type=click.Path(exists=True),
              help="Enable the embedding feature block from this vector store.")
@click.option("--min-df", default=2, show_default=True)
@click.option("--reg", default=1e-4, show_default=True)
@click.option("--epochs", default=15, show_default=True)
@click.option("--lr", default=0.1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--calib-frac", default=0.1, show_default=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_train(corpus_path, pool_path, vectors_path, min_df, reg, epochs, lr,
              seed, calib_frac, out):
    """Train and calibrate the linear classifier on the labeled pool."""
    corpus = load_corpus(corpus_path)
    pool = LabeledPool.load(pool_path)
    table = embeddings.load_table(vectors_path) if vectors_path else None
    space = fit_feature_space(pool.examples, corpus, min_df=min_df,
                              with_embeddings=table is not None,
                              embedding_dim=table.dim if table else 0)
    comments = [corpus.comments[ex.comment_id] for ex in pool.examples]
    X = featurize_many(comments, space, table)
    y = np.array([1.0 if ex.label == "positive" else -1.0 for ex in pool.examples])
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(y))
    n_cal = max(2, int(round(len(y) * calib_frac)))
    cal, fit = order[:n_cal], order[n_cal:]
    if len(set(y[fit].tolist())) < 2 or len(set(y[cal].tolist())) < 2:
        cal, fit = order, order
    config = SvmConfig(regularization=reg, epochs=epochs, learning_rate=lr,
                       rng_seed=seed)
    model = train_svm(X[fit], y[fit], config)
    calib = calibrate(margins(model, X[cal]), y[cal])
    save_model(out, model, calib, space)
    click.echo(f"trained on {len(fit)} examples, {space.size} features")


@main.command("eval")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--vectors", "vectors_path", type=click.Path(exists=True))
@click.option("--min-df", default=2, show_default=True)
@click.option("--splits", default=100, show_default=True)
@click.option("--train-frac", default=0.9, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_eval(corpus_path, pool_path, vectors_path, min_df, splits, train_frac,
             seed, out):
    """Repeated random-split evaluation; writes the metrics report."""
    corpus = load_corpus(corpus_path)
    pool = LabeledPool.load(pool_path)
    table = embeddings.load_table(vectors_path) if vectors_path else None
    space = fit_feature_space(pool.examples, corpus, min_df=min_df,
                              with_embeddings=table is not None,
                              embedding_dim=table.dim if table else 0)
    comments = [corpus.comments[ex.comment_id] for ex in pool.examples]
    X = featurize_many(comments, space, table)
    y = np.array([1.0 if ex.label == "positive" else -1.0 for ex in pool.examples])
    report = repeated_eval(X, y, n_splits=splits, train_fraction=train_frac,
                           seed=seed)
    write_json(out, report.to_dict())
    click.echo(f"F1 {report.f1[0]:.4f} +/- {report.f1[1]:.4f} over {splits} splits")


@main.command("rank")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--vectors", "vectors_path", type=click.Path(exists=True))
@click.option("--pool", "pool_path", type=click.Path(exists=True))
@click.option("--top", default=100, show_default=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_rank(corpus_path, model_path, vectors_path, pool_path, top, out):
    """Export the top unlabeled comments ranked by predicted probability."""
    corpus = load_corpus(corpus_path)
    model, calib, space, table = _load_bundle(model_path, vectors_path)
    pool = _load_pool(pool_path)
    ranked = rank_wild(model, calib, corpus, pool.labeled_ids, space, table,
                       top_n=top)
    write_json(out, {"items": [
        {"comment_id": cid, "prob_positive": p,
         "text": corpus.comments[cid].text} for cid, p in ranked]})
    click.echo(f"ranked {len(ranked)} comments")


@main.command("serve")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--batch", "batch_path", required=True, type=click.Path(exists=True))
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--adjudications", "adj_path", type=click.Path())
@click.option("--annotators", required=True, help="Comma-separated pair of ids.")
@click.option("--model", "model_path", type=click.Path(exists=True))
@click.option("--vectors", "vectors_path", type=click.Path(exists=True))
@click.option("--pool", "pool_path", type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@guarded
def cmd_serve(corpus_path, batch_path, log_path, adj_path, annotators,
              model_path, vectors_path, pool_path, host, port):
    """Run the annotation HTTP service."""
    import uvicorn

    from .service import create_app

    corpus = load_corpus(corpus_path)
    batch = SamplingBatch.load(batch_path)
    bundle = _load_bundle(model_path, vectors_path) if model_path else None
    pool = _load_pool(pool_path)
    app = create_app(corpus, batch, log_path,
                     [a.strip() for a in annotators.split(",")],
                     adjudications_path=adj_path, model_bundle=bundle,
                     labeled_ids=pool.labeled_ids)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("export")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--round", "round_", type=int)
@click.option("--out", required=True, type=click.Path())
@guarded
def cmd_export(log_path, round_, out):
    """Export the label log (optionally one round) as line-delimited JSON."""
    log = LabelLog(log_path)
    records = log.records if round_ is None else log.for_round(round_)
    with open(out, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict()) + "\n")
    click.echo(f"exported {len(records)} label records")


@main.command("kappa")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--round", "round_", required=True, type=int)
@click.option("--annotators", required=True)
@guarded
def cmd_kappa(log_path, round_, annotators):
    """Inter-annotator agreement for one round."""
    log = LabelLog(log_path)
    a, b = [x.strip() for x in annotators.split(",")]
    per = log.by_annotator(round_)
    ids = sorted(set(per.get(a, {})) & set(per.get(b, {})))
    ids = [c for c in ids if per[a][c] != "skip" and per[b][c] != "skip"]
    if not ids:
        fail("no_overlap", "no commonly labeled, non-skipped items")
    kappa = cohen_kappa([per[a][c] for c in ids], [per[b][c] for c in ids])
    click.echo(f"kappa {kappa:.4f} over {len(ids)} items")


if __name__ == "__main__":
    main()
