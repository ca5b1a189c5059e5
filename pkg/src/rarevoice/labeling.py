"""Append-only label log, round resolution with adjudication, and
confidence-ranked review of unlabeled comments."""

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from .classifier import featurize_many, margins

VALID_LABELS = ("positive", "negative", "skip")

# Checklist shown to annotators: what counts as supportive speech for the
# persecuted minority, and what does not.
DEFINITION_CHECKLIST = {
    "positive_criteria": [
        "actively seeks to help one or more persons of the oppressed minority",
        "urges other people or organizations to help the oppressed minority",
        "urges others to come forward and assist or take a humane stance",
        "advocates for the oppressed community's rights",
        "condemns the atrocities against the oppressed",
        "sympathizes with the oppressed community's plight",
    ],
    "negative_criteria": [
        "expresses violent intent or broad bias against any religious community",
        "calls for aggressive action against the oppressed community",
        "demonstrates whataboutism",
        "paints the community as a threat",
        "shows solidarity with the oppressors",
    ],
}

CATEGORY_TAGS = ["active_help", "appeal_to_organizations", "humanitarian_call",
                 "vocalize_rights", "condemn_oppressor", "express_sympathy"]


@dataclass
class LabelRecord:
    comment_id: str
    annotator_id: str
    label: str
    round: int
    recorded_at: float

    def to_dict(self):
        return dict(vars(self))

    @classmethod
    def from_dict(cls, d):
        return cls(comment_id=d["comment_id"], annotator_id=d["annotator_id"],
                   label=d["label"], round=d["round"], recorded_at=d["recorded_at"])


@dataclass
class AdjudicationRecord:
    comment_id: str
    resolved_label: str
    round: int
    note: str = ""

    def to_dict(self):
        return dict(vars(self))

    @classmethod
    def from_dict(cls, d):
        return cls(comment_id=d["comment_id"], resolved_label=d["resolved_label"],
                   round=d["round"], note=d.get("note", ""))


class LabelLog:
    """Line-delimited JSON log; every append is flushed and fsynced before
    the call returns, so an acknowledged write survives a restart."""

    def __init__(self, path):
        self.path = path
        self.records = []
        self._seen = set()
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = LabelRecord.from_dict(json.loads(line))
                        self.records.append(rec)
                        self._seen.add((rec.comment_id, rec.annotator_id, rec.round))

    def append(self, comment_id, annotator_id, label, round_):
        if label not in VALID_LABELS:
            raise ValueError(f"invalid label {label!r}")
        key = (comment_id, annotator_id, round_)
        if key in self._seen:
            raise ValueError(
                f"duplicate label for comment '{comment_id}' by '{annotator_id}' in round {round_}")
        rec = LabelRecord(comment_id=comment_id, annotator_id=annotator_id,
                          label=label, round=round_, recorded_at=time.time())
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec.to_dict()) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.records.append(rec)
        self._seen.add(key)
        return rec

    def for_round(self, round_):
        return [r for r in self.records if r.round == round_]

    def by_annotator(self, round_):
        out = {}
        for r in self.for_round(round_):
            out.setdefault(r.annotator_id, {})[r.comment_id] = r.label
        return out


class UnresolvedDisagreements(ValueError):
    def __init__(self, comment_ids):
        self.comment_ids = sorted(comment_ids)
        super().__init__(f"unresolved disagreements for ids: {self.comment_ids}")


def resolve_round(log, adjudications, round_, batch_ids, annotators):
    """Resolve a round's labels into {comment_id: label}, excluding skips.

    Agreement wins directly; disagreement requires an adjudication record.
    Returns (resolved, skipped_ids).
    """
    if len(annotators) != 2:
        raise ValueError("exactly two annotators are required")
    per_annotator = log.by_annotator(round_)
    a, b = annotators
    labels_a = per_annotator.get(a, {})
    labels_b = per_annotator.get(b, {})
    adj = {r.comment_id: r for r in adjudications if r.round == round_}
    resolved = {}
    skipped = []
    unresolved = []
    for cid in batch_ids:
        la, lb = labels_a.get(cid), labels_b.get(cid)
        if la == "skip" or lb == "skip":
            skipped.append(cid)
            continue
        if la is None or lb is None:
            raise ValueError(f"comment '{cid}' not labeled by both annotators")
        if la == lb:
            resolved[cid] = la
        elif cid in adj:
            resolved[cid] = adj[cid].resolved_label
        else:
            unresolved.append(cid)
    if unresolved:
        raise UnresolvedDisagreements(unresolved)
    return resolved, skipped


def rank_wild(model, calibration, corpus, labeled_ids, space, table=None, top_n=100):
    """Unlabeled comments ranked by predicted positive probability, ties by id."""
    ids = sorted(set(corpus.comments) - set(labeled_ids))
    if not ids:
        return []
    X = featurize_many([corpus.comments[i] for i in ids], space, table)
    probs = np.asarray(calibration.prob(margins(model, X)))
    order = np.argsort(-probs, kind="stable")
    return [(ids[i], float(probs[i])) for i in order[:top_n]]
