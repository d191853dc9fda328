import type { Session } from "./state.js";
import type { FeedbackEntry, FeedbackPayload } from "./types.js";
import { CATEGORY_ORDER, GRADES } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

/** Entries per category in canonical order; categories the payload never
 * mentions still appear (rendered as "None"). */
export function groupFeedback(payload: FeedbackPayload): Map<string, FeedbackEntry[]> {
  const groups = new Map<string, FeedbackEntry[]>();
  for (const category of CATEGORY_ORDER) {
    groups.set(category, []);
  }
  for (const entry of payload.items) {
    const bucket = groups.get(entry.category);
    if (bucket) {
      bucket.push(entry);
    } else {
      groups.set(entry.category, [entry]);
    }
  }
  return groups;
}

function renderFeedbackGroups(payload: FeedbackPayload): string {
  const sections: string[] = [];
  for (const [category, entries] of groupFeedback(payload)) {
    const body =
      entries.length === 0
        ? '<p class="empty-group">None</p>'
        : `<ul>${entries
            .map(
              (entry) =>
                `<li><span class="original">${escapeHtml(entry.original)}</span>` +
                ` &rarr; <span class="correction">${escapeHtml(entry.correction)}</span>` +
                `<span class="explanation">: ${escapeHtml(entry.explanation)}</span></li>`,
            )
            .join("")}</ul>`;
    sections.push(
      `<section class="feedback-group"><h3>${escapeHtml(category)}</h3>${body}</section>`,
    );
  }
  return sections.join("");
}

function renderRubric(rubricText: string, open: boolean): string {
  return (
    `<details class="rubric" id="rubric" ${open ? "open" : ""}>` +
    `<summary>Rating rubric (press ? to toggle)</summary>` +
    `<pre>${escapeHtml(rubricText)}</pre></details>`
  );
}

function renderGradeButtons(selected: string | null): string {
  return GRADES.map(
    (grade) =>
      `<button type="button" class="grade${selected === grade ? " selected" : ""}"` +
      ` data-grade="${grade}">${grade}</button>`,
  ).join("");
}

export function renderItem(session: Session): string {
  const item = session.item;
  if (item === null) {
    return "";
  }
  const notice = session.notice
    ? `<div class="notice" role="alert">${escapeHtml(session.notice)}</div>`
    : "";
  return `
<header>
  <span class="progress">rated ${session.progress.done}/${session.progress.total}</span>
  <span class="rater">rater: ${escapeHtml(session.rater)}</span>
</header>
${notice}
<main class="columns">
  <section class="essay-panel">
    <h2>Essay</h2>
    <p class="essay-text">${escapeHtml(item.essay)}</p>
  </section>
  <section class="feedback-panel">
    <h2>Syntax feedback</h2>
    ${renderFeedbackGroups(item.feedback)}
  </section>
</main>
${renderRubric(item.rubric_text, session.rubricOpen)}
<footer class="grading">
  <div class="grades">${renderGradeButtons(session.selected)}</div>
  <input type="text" id="note" placeholder="optional note" value="${escapeHtml(session.note)}" />
  <button type="button" id="confirm" ${session.submitting ? "disabled" : ""}>
    confirm (Enter)
  </button>
</footer>`;
}

export function renderComplete(session: Session): string {
  return `
<main class="complete">
  <h2>All items rated</h2>
  <p>You rated ${session.progress.done}/${session.progress.total} items. Thank you.</p>
  <p><a href="/api/export" download="ratings.jsonl">Download the ratings export</a></p>
</main>`;
}

export function renderError(session: Session): string {
  return `
<main class="error">
  <div class="notice" role="alert">${escapeHtml(session.error ?? "something went wrong")}</div>
  <p>Nothing was lost; every acknowledged rating is already stored on the server.</p>
  <button type="button" id="retry">retry</button>
</main>`;
}

export function renderApp(session: Session): string {
  switch (session.phase) {
    case "loading":
      return '<main class="loading"><p>loading&hellip;</p></main>';
    case "item":
      return renderItem(session);
    case "complete":
      return renderComplete(session);
    case "error":
      return renderError(session);
  }
}
