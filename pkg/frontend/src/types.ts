export type Grade = "A" | "B" | "C" | "D" | "E";

export const GRADES: readonly Grade[] = ["A", "B", "C", "D", "E"];

/** The closed grade set is the only path to a Grade value at runtime. */
export function asGrade(value: string): Grade | null {
  const upper = value.toUpperCase();
  return (GRADES as readonly string[]).includes(upper) ? (upper as Grade) : null;
}

/** Server-side category order; empty groups render as "None". */
export const CATEGORY_ORDER: readonly string[] = [
  "Misspelled Words",
  "Conjunctions and Linking Phrases",
  "Modifiers",
  "Prepositions",
  "Modal Verbs",
  "Punctuation",
  "Articles",
];

export interface FeedbackEntry {
  category: string;
  original: string;
  correction: string;
  explanation: string;
}

export interface FeedbackPayload {
  items: FeedbackEntry[];
  warnings: string[];
}

export interface Progress {
  done: number;
  total: number;
}

export interface ItemView {
  item_id: string;
  essay: string;
  feedback: FeedbackPayload;
  rubric_text: string;
  progress: Progress;
}

export interface SessionDone {
  done: true;
  progress: Progress;
}

export type NextItemResponse = ItemView | SessionDone;

export function isDone(response: NextItemResponse): response is SessionDone {
  return (response as SessionDone).done === true;
}

export interface RatingSubmission {
  item_id: string;
  rater: string;
  grade: Grade;
  note?: string;
}

export interface ProgressReport {
  total: number;
  raters: Record<string, Progress>;
}
