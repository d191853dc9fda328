import { describe, expect, it } from "vitest";

import { AnnotationApi } from "../src/api.js";
import { SessionController } from "../src/state.js";
import { FakeAnnotationServer, makeItems } from "./fakeServer.js";

function controllerFor(server: FakeAnnotationServer, rater = "r1"): SessionController {
  return new SessionController(new AnnotationApi("", server.fetch), rater);
}

describe("SessionController", () => {
  it("loads the first unrated item on start", async () => {
    const controller = controllerFor(new FakeAnnotationServer(makeItems(2)));
    await controller.start();
    expect(controller.session.phase).toBe("item");
    expect(controller.session.item?.item_id).toMatch(/^it/);
    expect(controller.session.progress).toEqual({ done: 0, total: 2 });
  });

  it("submits the selected grade and advances", async () => {
    const server = new FakeAnnotationServer(makeItems(2));
    const controller = controllerFor(server);
    await controller.start();
    const first = controller.session.item?.item_id;
    controller.selectGrade("B");
    await controller.confirm();
    expect(server.records).toHaveLength(1);
    expect(server.records[0]?.grade).toBe("B");
    expect(server.records[0]?.item_id).toBe(first);
    expect(controller.session.phase).toBe("item");
    expect(controller.session.item?.item_id).not.toBe(first);
    expect(controller.session.selected).toBeNull(); // selection resets per item
  });

  it("refuses to confirm without a selected grade", async () => {
    const server = new FakeAnnotationServer(makeItems(1));
    const controller = controllerFor(server);
    await controller.start();
    await controller.confirm();
    expect(server.records).toHaveLength(0);
    expect(controller.session.notice).toMatch(/pick a grade/);
  });

  it("reaches the completion state after the last item", async () => {
    const controller = controllerFor(new FakeAnnotationServer(makeItems(1)));
    await controller.start();
    controller.selectGrade("C");
    await controller.confirm();
    expect(controller.session.phase).toBe("complete");
    expect(controller.session.progress).toEqual({ done: 1, total: 1 });
  });

  it("shows the stored grade on conflict and advances", async () => {
    const server = new FakeAnnotationServer(makeItems(2));
    const controller = controllerFor(server);
    await controller.start();
    const first = controller.session.item?.item_id ?? "";
    // Same rater already rated this item in another tab.
    await new AnnotationApi("", server.fetch).submitRating({
      item_id: first,
      rater: "r1",
      grade: "D",
    });
    controller.selectGrade("A");
    await controller.confirm();
    expect(controller.session.notice).toMatch(/stored grade is D/);
    expect(server.records).toHaveLength(1); // nothing new stored
    expect(controller.session.item?.item_id).not.toBe(first);
  });

  it("keeps the selection when the network drops mid-submit", async () => {
    const server = new FakeAnnotationServer(makeItems(1));
    const controller = controllerFor(server);
    await controller.start();
    controller.selectGrade("E");
    server.offline = true;
    await controller.confirm();
    expect(controller.session.phase).toBe("item");
    expect(controller.session.selected).toBe("E");
    expect(controller.session.notice).toMatch(/cannot reach/);
    // Connectivity returns; the retry succeeds with no data lost.
    server.offline = false;
    await controller.confirm();
    expect(server.records).toHaveLength(1);
    expect(server.records[0]?.grade).toBe("E");
  });

  it("enters the error phase when loading fails, and can retry", async () => {
    const server = new FakeAnnotationServer(makeItems(1));
    server.offline = true;
    const controller = controllerFor(server);
    await controller.start();
    expect(controller.session.phase).toBe("error");
    server.offline = false;
    await controller.retry();
    expect(controller.session.phase).toBe("item");
  });

  it("round-trips a long note into the export", async () => {
    const server = new FakeAnnotationServer(makeItems(1));
    const controller = controllerFor(server);
    await controller.start();
    const note = "n".repeat(500);
    controller.setNote(note);
    controller.selectGrade("B");
    await controller.confirm();
    expect(server.records[0]?.note).toBe(note);
    const exportBody = await (await server.fetch("/api/export")).text();
    const lines = exportBody.trim().split("\n");
    expect(lines).toHaveLength(1);
    expect(JSON.parse(lines[0] ?? "")).toMatchObject({ note, grade: "B" });
  });

  it("ignores grade selection while a submission is in flight", async () => {
    const server = new FakeAnnotationServer(makeItems(2));
    const controller = controllerFor(server);
    await controller.start();
    controller.selectGrade("A");
    const pending = controller.confirm();
    controller.selectGrade("E"); // mid-flight; must not apply
    await pending;
    expect(server.records[0]?.grade).toBe("A");
  });

  it("notifies its render callback on every transition", async () => {
    const phases: string[] = [];
    const server = new FakeAnnotationServer(makeItems(1));
    const controller = new SessionController(
      new AnnotationApi("", server.fetch),
      "r1",
      (session) => phases.push(session.phase),
    );
    await controller.start();
    controller.selectGrade("B");
    await controller.confirm();
    expect(phases[0]).toBe("loading");
    expect(phases[phases.length - 1]).toBe("complete");
  });
});
