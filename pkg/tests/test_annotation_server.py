from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from syntaxforge.annotation_server import (
    AnnotationItem,
    RatingStore,
    build_app,
    load_items_jsonl,
    rater_order,
)
from syntaxforge.evalharness import RatingGrade, aggregate_ratings, read_ratings_jsonl
from syntaxforge.feedback import CATEGORY_ORDER, FeedbackItem, SyntaxCategory, serialize_feedback


def make_items(n: int, model: str = "model-x") -> list[AnnotationItem]:
    items = []
    for i in range(n):
        feedback = serialize_feedback(
            [FeedbackItem(SyntaxCategory.PUNCTUATION, "dont", "don't", "apostrophe")]
        )
        items.append(
            AnnotationItem(
                item_id=f"it{i}",
                essay=f"Essay {i} body. We dont rush.",
                feedback=feedback,
                model_id=model,
            )
        )
    return items


@pytest.fixture
def client(tmp_path):
    store = RatingStore(tmp_path / "ratings.jsonl")
    app = build_app(make_items(3), store, seed=11)
    return TestClient(app)


def post_rating(client, item_id, rater, grade, note=""):
    return client.post(
        "/api/ratings",
        json={"item_id": item_id, "rater": rater, "grade": grade, "note": note},
    )


class TestNextItem:
    def test_serves_item_with_rubric_and_progress(self, client):
        body = client.get("/api/items/next", params={"rater": "r1"}).json()
        assert body["item_id"].startswith("it")
        assert "RATING-A" in body["rubric_text"]
        assert body["progress"] == {"done": 0, "total": 3}
        groups = body["feedback"]["items"]
        assert groups[0]["category"] == "Punctuation"

    def test_model_identity_is_masked(self, client):
        body = client.get("/api/items/next", params={"rater": "r1"}).json()
        assert "model" not in json.dumps(body)

    def test_missing_rater_is_rejected(self, client):
        assert client.get("/api/items/next").status_code == 400

    def test_completion_state(self, client):
        for _ in range(3):
            item = client.get("/api/items/next", params={"rater": "r1"}).json()
            assert post_rating(client, item["item_id"], "r1", "B").status_code == 201
        body = client.get("/api/items/next", params={"rater": "r1"}).json()
        assert body["done"] is True
        assert body["progress"] == {"done": 3, "total": 3}

    def test_per_rater_orders_are_independent(self, tmp_path):
        items = make_items(12)
        order_a = [i.item_id for i in rater_order(items, "rater-a", seed=5)]
        order_b = [i.item_id for i in rater_order(items, "rater-b", seed=5)]
        assert sorted(order_a) == sorted(order_b)
        assert order_a != order_b  # 1/12! chance of collision by construction
        assert order_a == [i.item_id for i in rater_order(items, "rater-a", seed=5)]


class TestPostRating:
    def test_round_trip_to_export(self, client):
        assert post_rating(client, "it1", "r1", "B").status_code == 201
        export = client.get("/api/export").text
        lines = [json.loads(l) for l in export.splitlines() if l]
        assert len(lines) == 1
        assert lines[0]["item_id"] == "it1"
        assert lines[0]["grade"] == "B"
        assert lines[0]["model_id"] == "model-x"

    def test_duplicate_is_conflict_without_duplicate_storage(self, client):
        assert post_rating(client, "it1", "r1", "B").status_code == 201
        response = post_rating(client, "it1", "r1", "C")
        assert response.status_code == 409
        assert response.json()["existing_grade"] == "B"
        export = client.get("/api/export").text
        assert len([l for l in export.splitlines() if l]) == 1

    def test_invalid_grade_rejected(self, client):
        response = post_rating(client, "it1", "r1", "F")
        assert response.status_code == 400
        assert "A, B, C, D, E" in response.json()["error"]

    def test_unknown_item_not_found(self, client):
        assert post_rating(client, "missing", "r1", "A").status_code == 404

    def test_long_note_round_trips(self, client):
        note = "n" * 500
        assert post_rating(client, "it2", "r1", "D", note=note).status_code == 201
        lines = [json.loads(l) for l in client.get("/api/export").text.splitlines() if l]
        assert lines[0]["note"] == note


class TestProgressAndPersistence:
    def test_two_raters_three_items_each(self, tmp_path):
        store = RatingStore(tmp_path / "ratings.jsonl")
        app = build_app(make_items(3), store, seed=1)
        client = TestClient(app)
        for rater in ("r1", "r2"):
            for item in ("it0", "it1", "it2"):
                assert post_rating(client, item, rater, "B").status_code == 201
        progress = client.get("/api/progress").json()
        assert progress["total"] == 3
        assert progress["raters"] == {
            "r1": {"done": 3, "total": 3},
            "r2": {"done": 3, "total": 3},
        }
        export = client.get("/api/export").text
        assert len([l for l in export.splitlines() if l]) == 6

    def test_store_survives_restart(self, tmp_path):
        path = tmp_path / "ratings.jsonl"
        client1 = TestClient(build_app(make_items(2), RatingStore(path), seed=1))
        assert post_rating(client1, "it0", "r1", "A").status_code == 201
        # New app over the same store file: the rating persists and still conflicts.
        client2 = TestClient(build_app(make_items(2), RatingStore(path), seed=1))
        assert post_rating(client2, "it0", "r1", "B").status_code == 409
        body = client2.get("/api/items/next", params={"rater": "r1"}).json()
        assert body["item_id"] == "it1"

    def test_export_is_insertion_ordered_and_aggregatable(self, tmp_path):
        path = tmp_path / "ratings.jsonl"
        client = TestClient(build_app(make_items(4), RatingStore(path), seed=3))
        grades = ["A", "B", "B", "C"]
        for i, grade in enumerate(grades):
            post_rating(client, f"it{i}", "r1", grade)
        records = read_ratings_jsonl(path)
        assert [r.grade.value for r in records] == grades
        dist = aggregate_ratings(records)["model-x"]
        assert dist.counts[RatingGrade.B] == 2
        assert dist.percentages[RatingGrade.B] == 50.0


def test_load_items_jsonl(tmp_path):
    path = tmp_path / "items.jsonl"
    feedback = serialize_feedback([])
    path.write_text(
        json.dumps({"item_id": "a", "essay": "E", "feedback": feedback, "model_id": "m"}) + "\n",
        encoding="utf-8",
    )
    (item,) = load_items_jsonl(path)
    assert item.item_id == "a"
    assert item.model_id == "m"


def test_empty_feedback_groups_render_all_categories(tmp_path):
    store = RatingStore(tmp_path / "r.jsonl")
    items = [
        AnnotationItem(
            item_id="solo", essay="text", feedback=serialize_feedback([]), model_id="m"
        )
    ]
    client = TestClient(build_app(items, store, seed=0))
    body = client.get("/api/items/next", params={"rater": "r"}).json()
    assert body["feedback"]["items"] == []
    # The canonical text carries all seven headers even when empty.
    for category in CATEGORY_ORDER:
        assert category.value in items[0].feedback
