"""Descriptive corpus analyses: templates, n-gram ranks, video partitions,
user overlap and lexicon-based sentiment shares."""

from dataclasses import dataclass

import numpy as np

from .corpus import ngram_counts, tokenize
from .lexicon import classify_sentiment, score_comment


@dataclass
class VideoPartition:
    roh_video_ids: set
    other_video_ids: set
    roh_channel_ids: list


@dataclass
class DominantSideUsers:
    roh_to_other: set
    other_to_roh: set
    threshold: float


def template_following_tokens(corpus, template):
    """Counts of the token immediately following each template occurrence."""
    if not template:
        raise ValueError("template must have at least one token")
    template = [t.lower() for t in template]
    n = len(template)
    counts = {}
    for comment in corpus.english_comments():
        tokens = tokenize(comment.text)
        for i in range(len(tokens) - n):  # occurrences at comment end excluded
            if tokens[i:i + n] == template:
                nxt = tokens[i + n]
                counts[nxt] = counts.get(nxt, 0) + 1
    return counts


def ngram_rank(corpus, phrase):
    """1-based frequency rank of a phrase among its n-gram class.

    Ties share the best (smallest) rank; percentile = 100*(1-(rank-1)/unique).
    Returns None when the phrase does not occur.
    """
    phrase = tuple(t.lower() for t in phrase)
    n = len(phrase)
    counts = ngram_counts(corpus, n)
    unique = len(counts)
    freq = counts.get(phrase)
    if freq is None:
        return None
    rank = 1 + sum(1 for c in counts.values() if c > freq)
    percentile = 100.0 * (1.0 - (rank - 1) / unique)
    return {"rank": rank, "unique_ngrams": unique, "percentile": percentile}


def partition_videos(corpus, roh_channel_ids):
    if not roh_channel_ids:
        raise ValueError("channel list must be non-empty")
    channels = set(roh_channel_ids)
    roh = {v.id for v in corpus.videos.values() if v.channel_id in channels}
    other = set(corpus.videos) - roh
    return VideoPartition(roh_video_ids=roh, other_video_ids=other,
                          roh_channel_ids=list(roh_channel_ids))


def _commenters(corpus, video_ids):
    return {c.user_id for c in corpus.comments.values() if c.video_id in video_ids}


def user_overlap(corpus, partition):
    """Commenter-set sizes on each side plus their Jaccard similarity."""
    roh_users = _commenters(corpus, partition.roh_video_ids)
    other_users = _commenters(corpus, partition.other_video_ids)
    if not roh_users and not other_users:
        raise ValueError("no commenters on either partition side")
    both = roh_users & other_users
    union = roh_users | other_users
    return {
        "n_roh_users": len(roh_users),
        "n_other_users": len(other_users),
        "n_both": len(both),
        "jaccard": len(both) / len(union),
    }


def dominant_side_users(corpus, partition, threshold=0.8):
    """Users commenting on both sides whose comment share on one side is
    strictly above the threshold."""
    if not 0.5 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0.5, 1], got {threshold}")
    side_counts = {}
    for comment in corpus.comments.values():
        if comment.video_id in partition.roh_video_ids:
            side = 0
        elif comment.video_id in partition.other_video_ids:
            side = 1
        else:
            continue
        counts = side_counts.setdefault(comment.user_id, [0, 0])
        counts[side] += 1
    roh_to_other = set()
    other_to_roh = set()
    for uid, (n_roh, n_other) in side_counts.items():
        if n_roh == 0 or n_other == 0:
            continue
        frac_roh = n_roh / (n_roh + n_other)
        if frac_roh > threshold:
            roh_to_other.add(uid)
        elif 1.0 - frac_roh > threshold:
            other_to_roh.add(uid)
    return DominantSideUsers(roh_to_other=roh_to_other, other_to_roh=other_to_roh,
                             threshold=threshold)


def sentiment_share(comments, lexicon, cutoff=3.0):
    if not comments:
        raise ValueError("sentiment_share requires at least one comment")
    tally = {"positive": 0, "negative": 0, "neutral": 0}
    for comment in comments:
        tally[classify_sentiment(score_comment(lexicon, comment), cutoff)] += 1
    n = len(comments)
    return (tally["positive"] / n, tally["negative"] / n, tally["neutral"] / n)


def video_stats(corpus):
    """Per-field (mean, sample std) over all videos; std 0 when n == 1."""
    if not corpus.videos:
        raise ValueError("corpus has no videos")
    out = {}
    for fieldname in ("views", "likes", "dislikes", "comment_count"):
        values = np.array([getattr(v, fieldname) for v in corpus.videos.values()],
                          dtype=np.float64)
        std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        out[fieldname] = (float(values.mean()), std)
    return out
