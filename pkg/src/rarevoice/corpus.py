"""Corpus ingestion, tokenization, language filtering and n-gram statistics."""

import json
import re
from collections import Counter
from dataclasses import dataclass, field

TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Fixed built-in list of English function words used by the language filter.
ENGLISH_FUNCTION_WORDS = frozenset(
    """
    the a an and or but if then else when while of to in on at by for with
    from as is are was were be been being am do does did have has had not
    no nor so yet this that these those it its they them their there here
    he she him her his hers we us our you your i me my mine who whom which
    what all any some most more much many few about into over under again
    will would can could shall should may might must than too very just
    """.split()
)


class IngestError(ValueError):
    """Raised when the ingest stream contains an unrecoverable conflict."""


@dataclass
class Comment:
    id: str
    video_id: str
    user_id: str
    text: str
    posted_at: float | None = None
    is_english: bool | None = None


@dataclass
class Video:
    id: str
    channel_id: str
    title: str
    views: int = 0
    likes: int = 0
    dislikes: int = 0
    comment_count: int = 0


@dataclass
class UserRecord:
    id: str
    comment_ids: list[str] = field(default_factory=list)


@dataclass
class IngestReport:
    n_comments: int = 0
    n_videos: int = 0
    n_users: int = 0
    line_errors: list[tuple[int, str]] = field(default_factory=list)
    dangling_videos: list[str] = field(default_factory=list)
    dangling_users: list[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "n_comments": self.n_comments,
            "n_videos": self.n_videos,
            "n_users": self.n_users,
            "line_errors": [{"line": ln, "error": msg} for ln, msg in self.line_errors],
            "dangling_videos": self.dangling_videos,
            "dangling_users": self.dangling_users,
        }


@dataclass
class Corpus:
    comments: dict[str, Comment] = field(default_factory=dict)
    videos: dict[str, Video] = field(default_factory=dict)
    users: dict[str, UserRecord] = field(default_factory=dict)
    report: IngestReport = field(default_factory=IngestReport)

    def comments_by_user(self, user_id):
        user = self.users.get(user_id)
        if user is None:
            return []
        return [self.comments[cid] for cid in user.comment_ids]

    def english_comments(self, threshold=0.15):
        """Comments passing the language filter; caches the flag on each comment."""
        out = []
        for comment in self.comments.values():
            if comment.is_english is None:
                comment.is_english = filter_english(comment, threshold)
            if comment.is_english:
                out.append(comment)
        return out


def tokenize(text):
    """Lowercase and split on anything that is not a Unicode letter or digit."""
    return TOKEN_RE.findall(text.lower())


def filter_english(comment, stopword_ratio_threshold=0.15):
    """Heuristic language filter: ratio of English function words among tokens.

    Comments with fewer than 3 tokens pass by default.
    """
    if not 0.0 <= stopword_ratio_threshold <= 1.0:
        raise ValueError(f"threshold must be in [0,1], got {stopword_ratio_threshold}")
    tokens = tokenize(comment.text)
    if len(tokens) < 3:
        return True
    hits = sum(1 for t in tokens if t in ENGLISH_FUNCTION_WORDS)
    return hits / len(tokens) >= stopword_ratio_threshold


COMMENT_FIELDS = ("id", "video_id", "user_id", "text")
VIDEO_FIELDS = ("id", "channel_id", "title", "views", "likes", "dislikes", "comment_count")


def _parse_comment(obj):
    for f in COMMENT_FIELDS:
        if f not in obj:
            raise ValueError(f"comment record missing field '{f}'")
    text = str(obj["text"])
    if not text.strip():
        raise ValueError("comment text empty after trim")
    return Comment(
        id=str(obj["id"]),
        video_id=str(obj["video_id"]),
        user_id=str(obj["user_id"]),
        text=text,
        posted_at=obj.get("posted_at"),
    )


def _parse_video(obj):
    for f in VIDEO_FIELDS:
        if f not in obj:
            raise ValueError(f"video record missing field '{f}'")
    counts = {f: int(obj[f]) for f in ("views", "likes", "dislikes", "comment_count")}
    for name, value in counts.items():
        if value < 0:
            raise ValueError(f"video field '{name}' negative")
    return Video(id=str(obj["id"]), channel_id=str(obj["channel_id"]),
                 title=str(obj["title"]), **counts)


def _payload_equal(a, b):
    da, db = dict(vars(a)), dict(vars(b))
    da.pop("is_english", None)
    db.pop("is_english", None)
    return da == db


def ingest(lines):
    """Build a Corpus from an iterable of line-delimited JSON records.

    Malformed lines are collected in the report with their 1-based line number;
    duplicate ids with conflicting payloads abort with IngestError.
    """
    corpus = Corpus()
    explicit_users = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            kind = obj.get("kind")
            if kind == "comment":
                rec = _parse_comment(obj)
                prev = corpus.comments.get(rec.id)
                if prev is not None:
                    if not _payload_equal(prev, rec):
                        raise IngestError(
                            f"line {lineno}: duplicate comment id '{rec.id}' with conflicting payload")
                    continue
                corpus.comments[rec.id] = rec
            elif kind == "video":
                rec = _parse_video(obj)
                prev = corpus.videos.get(rec.id)
                if prev is not None:
                    if vars(prev) != vars(rec):
                        raise IngestError(
                            f"line {lineno}: duplicate video id '{rec.id}' with conflicting payload")
                    continue
                corpus.videos[rec.id] = rec
            elif kind == "user":
                if "id" not in obj:
                    raise ValueError("user record missing field 'id'")
                uid = str(obj["id"])
                cids = [str(c) for c in obj.get("comment_ids", [])]
                prev = explicit_users.get(uid)
                if prev is not None:
                    if prev != cids:
                        raise IngestError(
                            f"line {lineno}: duplicate user id '{uid}' with conflicting payload")
                    continue
                explicit_users[uid] = cids
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except IngestError:
            raise
        except (ValueError, TypeError) as exc:
            corpus.report.line_errors.append((lineno, str(exc)))

    # Users derivable from comments; explicit user records are merged on top.
    for comment in corpus.comments.values():
        corpus.users.setdefault(comment.user_id, UserRecord(id=comment.user_id))
        corpus.users[comment.user_id].comment_ids.append(comment.id)
    for uid, cids in explicit_users.items():
        if uid not in corpus.users:
            corpus.users[uid] = UserRecord(id=uid, comment_ids=list(cids))

    dangling_videos = set()
    dangling_users = set()
    for comment in corpus.comments.values():
        if corpus.videos and comment.video_id not in corpus.videos:
            dangling_videos.add(comment.video_id)
    for uid, user in corpus.users.items():
        for cid in user.comment_ids:
            if cid not in corpus.comments:
                dangling_users.add(uid)
    corpus.report.dangling_videos = sorted(dangling_videos)
    corpus.report.dangling_users = sorted(dangling_users)
    corpus.report.n_comments = len(corpus.comments)
    corpus.report.n_videos = len(corpus.videos)
    corpus.report.n_users = len(corpus.users)
    return corpus


def ngram_counts(corpus, n, threshold=0.15):
    """Frequency table of token n-grams over English-filtered comments.

    N-grams never cross comment boundaries.
    """
    if not 1 <= n <= 4:
        raise ValueError(f"n must be in 1..4, got {n}")
    counts = Counter()
    for comment in corpus.english_comments(threshold):
        tokens = tokenize(comment.text)
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i:i + n])] += 1
    return counts
