import { AnnotationApi } from "./api.js";
import { actionForKey } from "./keyboard.js";
import { SessionController } from "./state.js";
import { renderApp } from "./view.js";

function raterId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("rater");
  if (fromQuery) {
    return fromQuery;
  }
  let answer: string | null = null;
  while (!answer) {
    answer = window.prompt("rater id:");
  }
  const url = new URL(window.location.href);
  url.searchParams.set("rater", answer);
  window.history.replaceState(null, "", url.toString());
  return answer;
}

function isTypingTarget(target: EventTarget | null): boolean {
  return (
    target instanceof HTMLInputElement || target instanceof HTMLTextAreaElement
  );
}

function mount(root: HTMLElement): void {
  const controller = new SessionController(new AnnotationApi(), raterId(), (session) => {
    const focused = document.activeElement?.id;
    root.innerHTML = renderApp(session);
    if (focused === "note") {
      document.getElementById("note")?.focus();
    }
  });

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement | null;
    if (!target) {
      return;
    }
    const grade = target.closest<HTMLElement>("[data-grade]")?.dataset.grade;
    if (grade) {
      // data-grade values come from the fixed button set, but the
      // controller's Grade type is still enforced through actionForKey.
      const action = actionForKey(grade);
      if (action?.kind === "select") {
        controller.selectGrade(action.grade);
      }
      return;
    }
    if (target.closest("#confirm")) {
      void controller.confirm();
    } else if (target.closest("#retry")) {
      void controller.retry();
    }
  });

  root.addEventListener("input", (event) => {
    const target = event.target as HTMLElement | null;
    if (target instanceof HTMLInputElement && target.id === "note") {
      controller.setNote(target.value);
    }
  });

  window.addEventListener("keydown", (event) => {
    if (isTypingTarget(event.target) && event.key !== "Enter") {
      return;
    }
    const action = actionForKey(event.key);
    if (!action) {
      return;
    }
    event.preventDefault();
    if (action.kind === "select") {
      controller.selectGrade(action.grade);
    } else if (action.kind === "confirm") {
      void controller.confirm();
    } else {
      controller.toggleRubric();
    }
  });

  void controller.start();
}

const root = document.getElementById("app");
if (root) {
  mount(root);
}
