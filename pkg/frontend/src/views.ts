// Render functions for the queue and feed. Everything displayed comes
// straight from server responses.

import { clear, el } from "./dom.js";
import type { QueueEntry, QueueStore } from "./queueStore.js";
import type { ArticleDetail, FeedItem, StageEntry, VerdictLabel } from "./types.js";

function scoreBadge(score: number): HTMLElement {
  return el("span", { class: "score", text: score.toFixed(3) });
}

function stageChips(stages: StageEntry[]): HTMLElement {
  return el("span", { class: "stages" }, stages.map((entry) =>
    el("span", {
      class: `chip ${entry.passed ? "pass" : "fail"}`,
      title: `${entry.stage}: ${entry.score.toFixed(4)} ${entry.passed ? "passed" : "failed"}`,
      text: `${entry.stage} ${entry.score.toFixed(2)}`,
    })));
}

function verdictButtons(
  entry: QueueEntry,
  onVerdict: (id: string, label: VerdictLabel) => void,
): HTMLElement {
  const make = (label: VerdictLabel, text: string) => {
    const button = el("button", { class: `verdict ${label}`, text });
    if (entry.state === "pending") button.disabled = true;
    button.addEventListener("click", () => onVerdict(entry.item.article_id, label));
    return button;
  };
  return el("span", { class: "verdicts" }, [
    make("positive", "Positive (p)"),
    make("negative", "Negative (n)"),
    make("skip", "Skip (s)"),
  ]);
}

function stateTag(entry: QueueEntry): HTMLElement | string {
  if (entry.state === "pending") {
    return el("span", { class: "state pending", text: "submitting..." });
  }
  if (entry.state === "failed") {
    return el("span", { class: "state failed", text: `failed: ${entry.error ?? "error"} (retry below)` });
  }
  return "";
}

export function renderQueue(
  container: HTMLElement,
  store: QueueStore,
  onVerdict: (id: string, label: VerdictLabel) => void,
): void {
  clear(container);
  if (store.banner) {
    const banner = el("div", { class: "banner", text: store.banner });
    const retry = el("button", { text: "Retry" });
    retry.addEventListener("click", () => void store.refresh());
    banner.append(" ", retry);
    container.append(banner);
  }
  if (store.notice) {
    const notice = el("div", { class: "notice", text: store.notice });
    const dismiss = el("button", { text: "Dismiss" });
    dismiss.addEventListener("click", () => store.clearNotice());
    notice.append(" ", dismiss);
    container.append(notice);
  }
  if (store.loaded && store.entries.length === 0) {
    container.append(el("div", { class: "empty", text: "Queue clear - nothing waiting for review." }));
    return;
  }
  const list = el("ul", { class: "queue" });
  store.entries.forEach((entry, index) => {
    const row = el("li", {
      class: `queue-item ${index === store.selected ? "selected" : ""} state-${entry.state}`,
      "data-article-id": entry.item.article_id,
    });
    row.addEventListener("click", () => store.select(index));
    const link = el("a", {
      href: entry.item.url, target: "_blank", rel: "noreferrer",
      text: entry.item.title,
    });
    row.append(
      el("div", { class: "title-line" }, [
        link, " ", el("span", { class: "source", text: entry.item.source }),
      ]),
      el("div", { class: "meta-line" }, [
        "mean ", scoreBadge(entry.item.mean_score), " ",
        stageChips(entry.item.stages), " ",
        el("span", { class: "enqueued", text: `queued ${entry.item.enqueued_at}` }),
      ]),
      el("div", { class: "action-line" }, [verdictButtons(entry, onVerdict), stateTag(entry)]),
    );
    list.append(row);
  });
  container.append(list);
}

export function renderFeed(
  container: HTMLElement,
  state: {
    date: string | null;
    articles: FeedItem[] | null;
    emptyMessage: string | null;
    detail: ArticleDetail | null;
  },
  onSelect: (id: string) => void,
): void {
  clear(container);
  if (state.emptyMessage) {
    container.append(el("div", { class: "empty", text: state.emptyMessage }));
    return;
  }
  if (!state.articles) {
    container.append(el("div", { class: "empty", text: "Pick a date or load the latest feed." }));
    return;
  }
  container.append(el("h3", { text: `Feed for ${state.date}` }));
  const list = el("ol", { class: "feed" });
  for (const item of state.articles) {
    const row = el("li", { class: "feed-item", "data-article-id": item.id });
    const link = el("a", { href: item.url, target: "_blank", rel: "noreferrer", text: item.title });
    const inspect = el("button", { class: "inspect", text: "Stages" });
    inspect.addEventListener("click", () => onSelect(item.id));
    row.append(link, " ", el("span", { class: "source", text: item.source }), " ",
               scoreBadge(item.mean_score), " ", inspect);
    list.append(row);
  }
  container.append(list);
  if (state.detail) {
    container.append(renderDetail(state.detail));
  }
}

export function renderDetail(detail: ArticleDetail): HTMLElement {
  const pane = el("div", { class: "detail" });
  pane.append(el("h4", { text: detail.title }));
  pane.append(el("div", { class: "meta", text: `${detail.source} - ${detail.verdict.final}` }));
  const table = el("table", { class: "trail" });
  table.append(el("tr", {}, [
    el("th", { text: "stage" }), el("th", { text: "score" }), el("th", { text: "result" }),
  ]));
  for (const entry of detail.verdict.entries) {
    table.append(el("tr", { class: entry.passed ? "pass" : "fail" }, [
      el("td", { text: entry.stage }),
      el("td", { text: entry.score.toFixed(4) }),
      el("td", { text: entry.passed ? "passed" : "failed" }),
    ]));
  }
  pane.append(table);
  return pane;
}
