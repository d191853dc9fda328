import type { Grade } from "./types.js";
import { asGrade } from "./types.js";

export type KeyAction =
  | { kind: "select"; grade: Grade }
  | { kind: "confirm" }
  | { kind: "toggle-rubric" };

/**
 * Keyboard-first grading: a-e select, Enter confirms, ? toggles the rubric.
 * Every other key maps to null, so no keystroke can produce an off-scale
 * grade.
 */
export function actionForKey(key: string): KeyAction | null {
  if (key === "Enter") {
    return { kind: "confirm" };
  }
  if (key === "?") {
    return { kind: "toggle-rubric" };
  }
  if (key.length === 1) {
    const grade = asGrade(key);
    if (grade !== null) {
      return { kind: "select", grade };
    }
  }
  return null;
}
