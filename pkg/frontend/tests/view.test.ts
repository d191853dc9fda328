import { describe, expect, it } from "vitest";

import type { Session } from "../src/state.js";
import type { ItemView } from "../src/types.js";
import { CATEGORY_ORDER } from "../src/types.js";
import { escapeHtml, groupFeedback, renderApp, renderItem } from "../src/view.js";

function itemFixture(): ItemView {
  return {
    item_id: "it1",
    essay: "We dont linger. A <tag> & \"quotes\".",
    feedback: {
      items: [
        {
          category: "Misspelled Words",
          original: "beleive",
          correction: "believe",
          explanation: "spelling",
        },
      ],
      warnings: [],
    },
    rubric_text: "RATING-A: exceptional\nRATING-E: deficient",
    progress: { done: 2, total: 5 },
  };
}

function sessionFixture(patch: Partial<Session> = {}): Session {
  return {
    rater: "r1",
    phase: "item",
    item: itemFixture(),
    selected: null,
    note: "",
    notice: null,
    submitting: false,
    progress: { done: 2, total: 5 },
    rubricOpen: true,
    error: null,
    ...patch,
  };
}

describe("groupFeedback", () => {
  it("always yields the seven categories in canonical order", () => {
    const groups = groupFeedback({ items: [], warnings: [] });
    expect([...groups.keys()]).toEqual([...CATEGORY_ORDER]);
    expect([...groups.values()].every((entries) => entries.length === 0)).toBe(true);
  });

  it("buckets entries under their category", () => {
    const groups = groupFeedback(itemFixture().feedback);
    expect(groups.get("Misspelled Words")).toHaveLength(1);
    expect(groups.get("Punctuation")).toHaveLength(0);
  });
});

describe("renderItem", () => {
  it("shows essay, grouped feedback, rubric, and progress", () => {
    const html = renderItem(sessionFixture());
    expect(html).toContain("rated 2/5");
    expect(html).toContain("beleive");
    expect(html).toContain("believe");
    for (const category of CATEGORY_ORDER) {
      expect(html).toContain(`<h3>${category}</h3>`);
    }
    expect(html).toContain("RATING-A");
  });

  it("renders empty groups as None", () => {
    const html = renderItem(sessionFixture());
    // Six of the seven groups are empty in the fixture.
    expect(html.match(/class="empty-group">None</g)).toHaveLength(6);
  });

  it("escapes essay markup", () => {
    const html = renderItem(sessionFixture());
    expect(html).not.toContain("<tag>");
    expect(html).toContain("&lt;tag&gt;");
  });

  it("marks the selected grade button", () => {
    const html = renderItem(sessionFixture({ selected: "B" }));
    expect(html).toContain('class="grade selected" data-grade="B"');
    expect(html).toContain('class="grade" data-grade="A"');
  });

  it("shows the conflict notice when set", () => {
    const html = renderItem(sessionFixture({ notice: "already rated: the stored grade is D" }));
    expect(html).toContain("stored grade is D");
  });

  it("never includes any model identity", () => {
    // The payload type has no model field; the rendering stays masked even
    // if a server bug leaked one, because the view only reads known fields.
    const leaky = sessionFixture();
    (leaky.item as unknown as Record<string, unknown>)["model_id"] = "secret-model";
    const html = renderItem(leaky);
    expect(html).not.toContain("secret-model");
  });
});

describe("renderApp", () => {
  it("renders each phase", () => {
    expect(renderApp(sessionFixture({ phase: "loading" }))).toContain("loading");
    expect(renderApp(sessionFixture())).toContain("Essay");
    expect(
      renderApp(sessionFixture({ phase: "complete", item: null, progress: { done: 5, total: 5 } })),
    ).toContain("5/5");
    expect(
      renderApp(sessionFixture({ phase: "error", error: "cannot reach the annotation server" })),
    ).toContain("cannot reach");
  });

  it("links the export from the completion screen", () => {
    const html = renderApp(sessionFixture({ phase: "complete", item: null }));
    expect(html).toContain("/api/export");
  });
});

describe("escapeHtml", () => {
  it("escapes the five metacharacters", () => {
    expect(escapeHtml(`<a href="x">&'b'</a>`)).toBe(
      "&lt;a href=&quot;x&quot;&gt;&amp;&#39;b&#39;&lt;/a&gt;",
    );
  });
});
