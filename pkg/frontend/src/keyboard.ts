// Keyboard-first adjudication: p/n/s submit a verdict for the selected
// queue item, j/k (or arrows) move the selection.

import type { QueueStore } from "./queueStore.js";
import type { VerdictLabel } from "./types.js";

const VERDICT_KEYS: Record<string, VerdictLabel> = {
  p: "positive",
  n: "negative",
  s: "skip",
};

export function handleKey(store: QueueStore, event: KeyboardEvent): boolean {
  const target = event.target as HTMLElement | null;
  if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) {
    return false;
  }
  const key = event.key.toLowerCase();
  if (key in VERDICT_KEYS) {
    void store.submitSelected(VERDICT_KEYS[key]);
    return true;
  }
  if (key === "j" || key === "arrowdown") {
    store.selectNext();
    return true;
  }
  if (key === "k" || key === "arrowup") {
    store.selectPrevious();
    return true;
  }
  return false;
}

export function attachKeyboard(store: QueueStore, win: Window = window): () => void {
  const listener = (event: KeyboardEvent) => {
    if (handleKey(store, event)) event.preventDefault();
  };
  win.addEventListener("keydown", listener);
  return () => win.removeEventListener("keydown", listener);
}
