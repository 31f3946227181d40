/**
 * DOM layer: renders the pair screen (two topic buttons, a visually
 * de-emphasized Tie, a Skip), the progress counter and status toasts, and
 * wires clicks plus keyboard shortcuts to the session controller.
 */

import { AnnotationSession, PairView, keyToAction } from "./session.js";
import { TopicSide } from "./api.js";

export interface UiHandles {
  showPair: (view: PairView) => void;
  showNoWork: () => void;
  toast: (message: string) => void;
  setProgress: (count: number) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function topicButton(side: TopicSide, onPick: () => void): HTMLElement {
  const button = el("button", "topic-button");
  button.appendChild(el("span", "topic-label", side.slug));
  if (side.entity_url) {
    const link = el("a", "entity-link", "entity page");
    link.setAttribute("href", side.entity_url);
    link.setAttribute("target", "_blank");
    link.setAttribute("rel", "noopener");
    // Following the link must not count as a choice or lose the session.
    link.addEventListener("click", (event) => event.stopPropagation());
    button.appendChild(link);
  }
  button.addEventListener("click", onPick);
  return button;
}

export function mountUi(root: HTMLElement, session: AnnotationSession, prompt: string): UiHandles {
  root.replaceChildren();
  const header = el("header");
  header.appendChild(el("h1", undefined, prompt));
  const progress = el("span", "progress", "0 annotations");
  header.appendChild(progress);
  const stage = el("main", "stage");
  const toastBox = el("div", "toast");
  root.append(header, stage, toastBox);

  const handles: UiHandles = {
    showPair(view: PairView) {
      stage.replaceChildren();
      const row = el("div", "pair-row");
      row.appendChild(topicButton(view.left, () => void session.choose("left")));
      row.appendChild(topicButton(view.right, () => void session.choose("right")));
      stage.appendChild(row);
      const controls = el("div", "controls");
      const tie = el("button", "tie-button", "Tie (use rarely)");
      tie.addEventListener("click", () => void session.choose("tie"));
      const skip = el("button", "skip-button", "Skip");
      skip.addEventListener("click", () => void session.choose("skip"));
      controls.append(tie, skip);
      stage.appendChild(controls);
    },
    showNoWork() {
      stage.replaceChildren();
      const idle = el("div", "idle");
      idle.appendChild(el("p", undefined, "No pairs available right now."));
      const retry = el("button", "retry-button", "Check again");
      retry.addEventListener("click", () => void session.start());
      idle.appendChild(retry);
      stage.appendChild(idle);
    },
    toast(message: string) {
      const note = el("p", "toast-message", message);
      toastBox.appendChild(note);
      setTimeout(() => note.remove(), 4000);
    },
    setProgress(count: number) {
      progress.textContent = `${count} annotation${count === 1 ? "" : "s"}`;
    },
  };

  document.addEventListener("keydown", (event) => {
    const action = keyToAction(event.key);
    if (action !== null) {
      event.preventDefault();
      void session.choose(action);
    }
  });

  return handles;
}
