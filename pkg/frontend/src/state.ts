import { AnnotationApi, ConflictError, NetworkError } from "./api.js";
import type { Grade, ItemView, Progress } from "./types.js";
import { isDone } from "./types.js";

export type Phase = "loading" | "item" | "complete" | "error";

export interface Session {
  rater: string;
  phase: Phase;
  item: ItemView | null;
  selected: Grade | null;
  note: string;
  /** Transient banner: submission conflicts, validation messages. */
  notice: string | null;
  /** Set while a submission is in flight; blocks a second one. */
  submitting: boolean;
  progress: Progress;
  rubricOpen: boolean;
  error: string | null;
}

function initialSession(rater: string): Session {
  return {
    rater,
    phase: "loading",
    item: null,
    selected: null,
    note: "",
    notice: null,
    submitting: false,
    progress: { done: 0, total: 0 },
    rubricOpen: true,
    error: null,
  };
}

/**
 * Drives one rater's pass over the items. The server is the source of truth:
 * the controller holds no unsynced state once a submission is acknowledged,
 * so a mid-session refresh loses nothing.
 */
export class SessionController {
  session: Session;

  constructor(
    private readonly api: AnnotationApi,
    rater: string,
    private readonly onChange: (session: Session) => void = () => {},
  ) {
    this.session = initialSession(rater);
  }

  private update(patch: Partial<Session>): void {
    this.session = { ...this.session, ...patch };
    this.onChange(this.session);
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  async loadNext(): Promise<void> {
    this.update({ phase: "loading", notice: this.session.notice, error: null });
    try {
      const response = await this.api.nextItem(this.session.rater);
      if (isDone(response)) {
        this.update({
          phase: "complete",
          item: null,
          selected: null,
          note: "",
          progress: response.progress,
        });
        return;
      }
      this.update({
        phase: "item",
        item: response,
        selected: null,
        note: "",
        progress: response.progress,
      });
    } catch (cause) {
      const reason =
        cause instanceof NetworkError
          ? cause.message
          : `failed to load the next item (${String(cause)})`;
      this.update({ phase: "error", error: reason });
    }
  }

  selectGrade(grade: Grade): void {
    if (this.session.phase !== "item" || this.session.submitting) {
      return;
    }
    this.update({ selected: grade, notice: null });
  }

  setNote(note: string): void {
    if (this.session.phase !== "item") {
      return;
    }
    this.update({ note });
  }

  toggleRubric(): void {
    this.update({ rubricOpen: !this.session.rubricOpen });
  }

  /** Submit the selected grade; advances on success and on conflict. */
  async confirm(): Promise<void> {
    const { phase, item, selected, submitting, rater, note } = this.session;
    if (phase !== "item" || item === null || submitting) {
      return;
    }
    if (selected === null) {
      this.update({ notice: "pick a grade (A-E) before confirming" });
      return;
    }
    this.update({ submitting: true });
    try {
      await this.api.submitRating({
        item_id: item.item_id,
        rater,
        grade: selected,
        note,
      });
      this.update({ submitting: false, notice: null });
      await this.loadNext();
    } catch (cause) {
      if (cause instanceof ConflictError) {
        const stored = cause.existingGrade ?? "unknown";
        this.update({
          submitting: false,
          notice: `already rated: the stored grade is ${stored}`,
        });
        await this.loadNext();
        return;
      }
      if (cause instanceof NetworkError) {
        // Keep the selection; the rater retries without losing work.
        this.update({ submitting: false, notice: cause.message });
        return;
      }
      this.update({ submitting: false, notice: String(cause) });
    }
  }

  async retry(): Promise<void> {
    await this.loadNext();
  }
}
