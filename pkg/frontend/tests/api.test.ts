import { describe, expect, it } from "vitest";

import { AnnotationApi, ApiError, ConflictError, NetworkError } from "../src/api.js";
import { isDone } from "../src/types.js";
import { FakeAnnotationServer, makeItems } from "./fakeServer.js";

function apiFor(server: FakeAnnotationServer): AnnotationApi {
  return new AnnotationApi("", server.fetch);
}

describe("AnnotationApi", () => {
  it("fetches the next item with rubric and progress", async () => {
    const api = apiFor(new FakeAnnotationServer(makeItems(2)));
    const response = await api.nextItem("r1");
    expect(isDone(response)).toBe(false);
    if (!isDone(response)) {
      expect(response.item_id).toMatch(/^it/);
      expect(response.rubric_text).toContain("RATING-A");
      expect(response.progress).toEqual({ done: 0, total: 2 });
    }
  });

  it("signals completion once everything is rated", async () => {
    const server = new FakeAnnotationServer(makeItems(1));
    const api = apiFor(server);
    await api.submitRating({ item_id: "it0", rater: "r1", grade: "B" });
    const response = await api.nextItem("r1");
    expect(isDone(response)).toBe(true);
    if (isDone(response)) {
      expect(response.progress).toEqual({ done: 1, total: 1 });
    }
  });

  it("raises ConflictError with the stored grade on duplicates", async () => {
    const server = new FakeAnnotationServer(makeItems(1));
    const api = apiFor(server);
    await api.submitRating({ item_id: "it0", rater: "r1", grade: "B" });
    await expect(
      api.submitRating({ item_id: "it0", rater: "r1", grade: "C" }),
    ).rejects.toSatisfy((e) => e instanceof ConflictError && e.existingGrade === "B");
    expect(server.records).toHaveLength(1);
  });

  it("surfaces server validation messages verbatim", async () => {
    const api = apiFor(new FakeAnnotationServer(makeItems(1)));
    // Bypass the type system deliberately: the server still refuses.
    const bad = { item_id: "it0", rater: "r1", grade: "F" as never };
    await expect(api.submitRating(bad)).rejects.toSatisfy(
      (e) => e instanceof ApiError && e.status === 400 && /one of A, B, C, D, E/.test(e.message),
    );
  });

  it("raises NetworkError when the server is unreachable", async () => {
    const server = new FakeAnnotationServer(makeItems(1));
    server.offline = true;
    const api = apiFor(server);
    await expect(api.nextItem("r1")).rejects.toBeInstanceOf(NetworkError);
  });

  it("reports per-rater progress", async () => {
    const server = new FakeAnnotationServer(makeItems(3));
    const api = apiFor(server);
    await api.submitRating({ item_id: "it0", rater: "r1", grade: "A" });
    await api.submitRating({ item_id: "it1", rater: "r1", grade: "B" });
    const progress = await api.progress();
    expect(progress.total).toBe(3);
    expect(progress.raters["r1"]).toEqual({ done: 2, total: 3 });
  });

  it("links the export endpoint", () => {
    expect(apiFor(new FakeAnnotationServer(makeItems(1))).exportUrl()).toBe("/api/export");
  });
});
