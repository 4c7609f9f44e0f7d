import { ApiClient, ApiError, resolveBaseUrl } from "./api.js";
import { clear, el } from "./dom.js";
import { attachKeyboard } from "./keyboard.js";
import { QueueStore } from "./queueStore.js";
import type { ArticleDetail, FeedItem } from "./types.js";
import { renderFeed, renderQueue } from "./views.js";

type Tab = "queue" | "feed";

interface FeedState {
  date: string | null;
  articles: FeedItem[] | null;
  emptyMessage: string | null;
  detail: ArticleDetail | null;
}

export function startApp(root: HTMLElement, api: ApiClient): QueueStore {
  const store = new QueueStore(api);
  let tab: Tab = "queue";
  const feedState: FeedState = {
    date: null, articles: null, emptyMessage: null, detail: null,
  };

  const nav = el("nav", {}, []);
  const queueButton = el("button", { class: "tab active", text: "Curation queue" });
  const feedButton = el("button", { class: "tab", text: "Feed preview" });
  const dateInput = el("input", { type: "date", class: "feed-date" });
  const loadButton = el("button", { text: "Load feed" });
  nav.append(queueButton, feedButton, dateInput, loadButton);

  const body = el("main", {});
  const help = el("footer", {
    text: "Shortcuts: p positive, n negative, s skip, j/k move selection",
  });
  root.append(nav, body, help);

  function render(): void {
    queueButton.className = `tab ${tab === "queue" ? "active" : ""}`;
    feedButton.className = `tab ${tab === "feed" ? "active" : ""}`;
    clear(body);
    if (tab === "queue") {
      const container = el("section", { id: "queue-view" });
      renderQueue(container, store, (id, label) => void store.submit(id, label));
      body.append(container);
    } else {
      const container = el("section", { id: "feed-view" });
      renderFeed(container, feedState, (id) => void showDetail(id));
      body.append(container);
    }
  }

  async function loadFeed(date: string | null): Promise<void> {
    feedState.detail = null;
    try {
      const feed = await api.getFeed(date ?? undefined);
      feedState.date = feed.date;
      feedState.articles = feed.articles;
      feedState.emptyMessage = null;
    } catch (err) {
      feedState.articles = null;
      feedState.emptyMessage =
        err instanceof ApiError && err.status === 404
          ? `No feed published${date ? ` for ${date}` : ""}.`
          : `Could not load feed: ${(err as Error).message}`;
    }
    render();
  }

  async function showDetail(id: string): Promise<void> {
    try {
      feedState.detail = await api.getArticle(id);
    } catch (err) {
      feedState.emptyMessage = `Could not load article: ${(err as Error).message}`;
    }
    render();
  }

  queueButton.addEventListener("click", () => {
    tab = "queue";
    render();
  });
  feedButton.addEventListener("click", () => {
    tab = "feed";
    void loadFeed(dateInput.value || null);
  });
  loadButton.addEventListener("click", () => {
    tab = "feed";
    void loadFeed(dateInput.value || null);
  });

  store.subscribe(render);
  attachKeyboard(store);
  void store.refresh();
  render();
  return store;
}

// Browser entry point; tests import the pieces directly instead.
if (typeof document !== "undefined" && document.getElementById("app")) {
  const api = new ApiClient(resolveBaseUrl(window));
  startApp(document.getElementById("app") as HTMLElement, api);
}
