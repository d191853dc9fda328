"""HTTP annotation service for the five-tier human-rating workflow.

Raters see model-masked items in independent seeded shuffled orders; every
accepted rating is appended atomically to a JSONL store, which is the single
source of truth for progress and export.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .evalharness import RatingGrade, RatingRecord, rating_to_json, rubric_text
from .feedback import doc_to_json, parse_feedback


@dataclass(frozen=True)
class AnnotationItem:
    """One unit of rating work; model_id is hidden from raters."""

    item_id: str
    essay: str
    feedback: str  # canonical serialized feedback text
    model_id: str


def load_items_jsonl(path: str | Path) -> list[AnnotationItem]:
    items = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            items.append(
                AnnotationItem(
                    item_id=str(obj["item_id"]),
                    essay=str(obj["essay"]),
                    feedback=str(obj["feedback"]),
                    model_id=str(obj.get("model_id", "")),
                )
            )
    return items


class RatingStore:
    """Append-only JSONL store; (item_id, rater_id) is the uniqueness key."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: list[RatingRecord] = []
        self._keys: set[tuple[str, str]] = set()
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        record = RatingRecord(**_record_kwargs(json.loads(line)))
                        self._records.append(record)
                        self._keys.add((record.item_id, record.rater_id))

    def existing(self, item_id: str, rater_id: str) -> RatingRecord | None:
        with self._lock:
            if (item_id, rater_id) not in self._keys:
                return None
            for record in self._records:
                if record.item_id == item_id and record.rater_id == rater_id:
                    return record
        return None

    def add(self, record: RatingRecord) -> bool:
        """Append a record; False when the (item, rater) pair is already rated."""
        with self._lock:
            key = (record.item_id, record.rater_id)
            if key in self._keys:
                return False
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(rating_to_json(record), ensure_ascii=False, sort_keys=True))
                fh.write("\n")
                fh.flush()
            self._records.append(record)
            self._keys.add(key)
            return True

    def records(self) -> list[RatingRecord]:
        with self._lock:
            return list(self._records)

    def rated_items(self, rater_id: str) -> set[str]:
        with self._lock:
            return {item for item, rater in self._keys if rater == rater_id}


def _record_kwargs(obj: dict) -> dict:
    return {
        "item_id": obj["item_id"],
        "model_id": obj.get("model_id", ""),
        "rater_id": obj["rater_id"],
        "grade": RatingGrade(obj["grade"]),
        "note": obj.get("note", "") or "",
        "timestamp": obj.get("timestamp", "") or "",
    }


def rater_order(items: list[AnnotationItem], rater_id: str, seed: int) -> list[AnnotationItem]:
    """Per-rater item order: a seeded hash permutation independent across raters."""
    return sorted(
        items,
        key=lambda item: hashlib.sha256(
            f"{seed}\x1f{rater_id}\x1f{item.item_id}".encode("utf-8")
        ).hexdigest(),
    )


def build_app(
    items: list[AnnotationItem],
    store: RatingStore,
    seed: int = 0,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    if not items:
        raise ValueError("annotation service needs at least one item")
    by_id = {item.item_id: item for item in items}
    if len(by_id) != len(items):
        raise ValueError("duplicate item_id in annotation items")
    rubric = rubric_text()

    app = FastAPI(title="syntaxforge annotation", docs_url=None, redoc_url=None)

    def progress_for(rater_id: str) -> dict:
        done = len(store.rated_items(rater_id) & set(by_id))
        return {"done": done, "total": len(items)}

    @app.get("/api/items/next")
    def next_item(rater: str = Query(default="")):
        if not rater:
            return JSONResponse({"error": "missing rater id"}, status_code=400)
        rated = store.rated_items(rater)
        for item in rater_order(items, rater, seed):
            if item.item_id in rated:
                continue
            doc = parse_feedback(item.feedback)
            return {
                "item_id": item.item_id,
                "essay": item.essay,
                "feedback": doc_to_json(doc),
                "rubric_text": rubric,
                "progress": progress_for(rater),
            }
        return {"done": True, "progress": progress_for(rater)}

    @app.post("/api/ratings")
    async def post_rating(request: Request):
        body = await request.json()
        item_id = str(body.get("item_id", ""))
        rater = str(body.get("rater", ""))
        grade_raw = str(body.get("grade", ""))
        note = str(body.get("note", "") or "")
        if not rater:
            return JSONResponse({"error": "missing rater id"}, status_code=400)
        try:
            grade = RatingGrade(grade_raw)
        except ValueError:
            valid = ", ".join(g.value for g in RatingGrade)
            return JSONResponse(
                {"error": f"invalid grade '{grade_raw}': must be one of {valid}"},
                status_code=400,
            )
        item = by_id.get(item_id)
        if item is None:
            return JSONResponse({"error": f"unknown item '{item_id}'"}, status_code=404)
        record = RatingRecord(
            item_id=item_id,
            model_id=item.model_id,
            rater_id=rater,
            grade=grade,
            note=note,
            timestamp=datetime.now(timezone.utc).isoformat(),
        )
        if not store.add(record):
            existing = store.existing(item_id, rater)
            return JSONResponse(
                {
                    "error": "already_rated",
                    "existing_grade": existing.grade.value if existing else None,
                },
                status_code=409,
            )
        return JSONResponse({"ok": True, "recorded": rating_to_json(record)}, status_code=201)

    @app.get("/api/progress")
    def progress():
        raters = sorted({record.rater_id for record in store.records()})
        return {
            "total": len(items),
            "raters": {rater: progress_for(rater) for rater in raters},
        }

    @app.get("/api/export")
    def export():
        lines = [
            json.dumps(rating_to_json(record), ensure_ascii=False, sort_keys=True)
            for record in store.records()
        ]
        body = "\n".join(lines)
        if body:
            body += "\n"
        return PlainTextResponse(body, media_type="application/x-ndjson")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve_annotation(
    bind: str,
    items: list[AnnotationItem],
    store_path: str | Path,
    seed: int = 0,
    ui_dir: str | Path | None = None,
) -> None:
    """Run the annotation service until interrupted."""
    import uvicorn

    host, _, port = bind.partition(":")
    app = build_app(items, RatingStore(store_path), seed=seed, ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or "8400"), log_level="info")
