"""HTTP annotation service: serves batches, records labels durably, reports
agreement and disagreements, accepts adjudications and exposes the
confidence-ranked review list."""

import json
import os

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .classifier import cohen_kappa
from .labeling import (AdjudicationRecord, DEFINITION_CHECKLIST, LabelLog,
                       VALID_LABELS, rank_wild)


class LabelPost(BaseModel):
    comment_id: str
    label: str
    annotator: str


class AdjudicatePost(BaseModel):
    comment_id: str
    resolved_label: str
    note: str = ""


class ApiError(Exception):
    def __init__(self, status, code, message, details=None):
        self.status = status
        self.code = code
        self.message = message
        self.details = details or {}


def _round_state(state):
    """Per-annotator label maps for the current round, plus completion flag."""
    per = state["log"].by_annotator(state["batch"].round)
    batch_ids = state["batch"].comment_ids
    done = all(
        all(cid in per.get(a, {}) for cid in batch_ids)
        for a in state["annotators"])
    return per, done


def create_app(corpus, batch, log_path, annotators, adjudications_path=None,
               model_bundle=None, labeled_ids=()):
    """Build the FastAPI app.

    model_bundle, when present, is (model, calibration, space, table) and
    enables GET /api/rank.
    """
    state = {
        "corpus": corpus,
        "batch": batch,
        "log": LabelLog(log_path),
        "annotators": list(annotators),
        "adjudications_path": adjudications_path,
        "model_bundle": model_bundle,
        "labeled_ids": set(labeled_ids),
    }
    app = FastAPI(title="rarevoice annotation service")
    app.state.rv = state

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "details": exc.details})

    def load_adjudications():
        path = state["adjudications_path"]
        records = []
        if path and os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        records.append(AdjudicationRecord.from_dict(json.loads(line)))
        return records

    @app.get("/api/batch")
    def get_batch(annotator: str = Query(...)):
        batch_ = state["batch"]
        per, _done = _round_state(state)
        mine = per.get(annotator, {})
        items = []
        for pos, cid in enumerate(batch_.comment_ids, start=1):
            items.append({
                "comment_id": cid,
                "text": state["corpus"].comments[cid].text,
                "position": pos,
                "labeled_by_me": cid in mine,
            })
        return {
            "round": batch_.round,
            "strategy": batch_.strategy,
            "items": items,
            "progress": {"labeled": len(mine), "total": len(items)},
        }

    @app.post("/api/labels")
    def post_label(body: LabelPost):
        batch_ = state["batch"]
        if body.comment_id not in set(batch_.comment_ids):
            raise ApiError(422, "outside_batch",
                           "comment id is not part of the current batch",
                           {"comment_id": body.comment_id})
        if body.label not in VALID_LABELS:
            raise ApiError(422, "invalid_label",
                           f"label must be one of {list(VALID_LABELS)}",
                           {"label": body.label})
        if body.annotator not in state["annotators"]:
            raise ApiError(422, "unknown_annotator", "unknown annotator id",
                           {"annotator": body.annotator})
        try:
            rec = state["log"].append(body.comment_id, body.annotator,
                                      body.label, batch_.round)
        except ValueError as exc:
            raise ApiError(409, "duplicate_label", str(exc),
                           {"comment_id": body.comment_id})
        return {"status": "recorded", "recorded_at": rec.recorded_at}

    @app.get("/api/progress")
    def get_progress():
        per, done = _round_state(state)
        total = len(state["batch"].comment_ids)
        return {
            "round": state["batch"].round,
            "total": total,
            "per_annotator": {a: len(per.get(a, {})) for a in state["annotators"]},
            "round_complete": done,
        }

    @app.get("/api/agreement")
    def get_agreement():
        per, done = _round_state(state)
        if not done:
            return {"status": "pending"}
        a, b = state["annotators"]
        ids = [cid for cid in state["batch"].comment_ids
               if per[a][cid] != "skip" and per[b][cid] != "skip"]
        if not ids:
            return {"status": "complete", "kappa": None, "n_items": 0}
        kappa = cohen_kappa([per[a][c] for c in ids], [per[b][c] for c in ids])
        return {"status": "complete", "kappa": kappa, "n_items": len(ids)}

    @app.get("/api/disagreements")
    def get_disagreements():
        per, done = _round_state(state)
        if not done:
            # Labels stay hidden until both annotators finish (independence).
            return {"status": "pending", "items": []}
        a, b = state["annotators"]
        adj = {r.comment_id for r in load_adjudications()
               if r.round == state["batch"].round}
        items = []
        for cid in state["batch"].comment_ids:
            la, lb = per[a][cid], per[b][cid]
            if la != lb and la != "skip" and lb != "skip":
                items.append({
                    "comment_id": cid,
                    "text": state["corpus"].comments[cid].text,
                    "label_a": la,
                    "label_b": lb,
                    "resolved": cid in adj,
                })
        return {"status": "complete", "items": items}

    @app.post("/api/adjudicate")
    def post_adjudicate(body: AdjudicatePost):
        per, done = _round_state(state)
        if not done:
            raise ApiError(409, "round_incomplete",
                           "cannot adjudicate before both annotators finish")
        a, b = state["annotators"]
        cid = body.comment_id
        if cid not in set(state["batch"].comment_ids):
            raise ApiError(422, "outside_batch",
                           "comment id is not part of the current batch",
                           {"comment_id": cid})
        if per[a].get(cid) == per[b].get(cid):
            raise ApiError(422, "no_disagreement",
                           "annotators agree on this comment", {"comment_id": cid})
        if body.resolved_label not in ("positive", "negative"):
            raise ApiError(422, "invalid_label",
                           "resolved label must be positive or negative",
                           {"label": body.resolved_label})
        rec = AdjudicationRecord(comment_id=cid, resolved_label=body.resolved_label,
                                 round=state["batch"].round, note=body.note)
        path = state["adjudications_path"]
        if path:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec.to_dict()) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        return {"status": "recorded"}

    @app.get("/api/rank")
    def get_rank(top: int = 100):
        bundle = state["model_bundle"]
        if bundle is None:
            raise ApiError(503, "no_model", "no trained model is loaded")
        model, calibration, space, table = bundle
        ranked = rank_wild(model, calibration, state["corpus"],
                           state["labeled_ids"], space, table, top_n=top)
        return {"items": [
            {"comment_id": cid,
             "text": state["corpus"].comments[cid].text,
             "prob_positive": prob}
            for cid, prob in ranked]}

    @app.get("/api/definition")
    def get_definition():
        return DEFINITION_CHECKLIST

    return app
