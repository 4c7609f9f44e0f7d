import { describe, expect, it } from "vitest";

import { QueueStore } from "../src/queueStore.js";
import { renderDetail, renderFeed, renderQueue } from "../src/views.js";
import { FakeApi, makeItem } from "./helpers.js";

async function storeWith(ids: string[]): Promise<QueueStore> {
  const api = new FakeApi();
  api.queue = ids.map((id) => makeItem(id));
  const store = new QueueStore(api);
  await store.refresh();
  return store;
}

describe("renderQueue", () => {
  it("renders one row per entry in queue order", async () => {
    const store = await storeWith(["a", "b", "c"]);
    const container = document.createElement("div");
    renderQueue(container, store, () => {});
    const rows = container.querySelectorAll("li.queue-item");
    expect(rows).toHaveLength(3);
    expect([...rows].map((r) => r.getAttribute("data-article-id"))).toEqual(
      ["a", "b", "c"]);
  });

  it("shows only server-derived stage scores", async () => {
    const store = await storeWith(["a"]);
    const container = document.createElement("div");
    renderQueue(container, store, () => {});
    const chips = container.querySelectorAll(".chip");
    expect(chips).toHaveLength(2);
    expect(chips[0].textContent).toContain("sequential 0.61");
    expect(chips[1].className).toContain("fail");
  });

  it("renders the explicit queue-clear state", async () => {
    const store = await storeWith([]);
    const container = document.createElement("div");
    renderQueue(container, store, () => {});
    expect(container.textContent).toMatch(/queue clear/i);
  });

  it("wires verdict buttons to the handler", async () => {
    const store = await storeWith(["a"]);
    const container = document.createElement("div");
    const calls: [string, string][] = [];
    renderQueue(container, store, (id, label) => calls.push([id, label]));
    (container.querySelector("button.verdict.positive") as HTMLButtonElement).click();
    expect(calls).toEqual([["a", "positive"]]);
  });

  it("disables buttons while a submission is pending", async () => {
    const store = await storeWith(["a"]);
    store.entries[0].state = "pending";
    const container = document.createElement("div");
    renderQueue(container, store, () => {});
    const buttons = container.querySelectorAll("button.verdict");
    expect([...buttons].every((b) => (b as HTMLButtonElement).disabled)).toBe(true);
    expect(container.textContent).toMatch(/submitting/);
  });

  it("offers retry on failure and a banner when unreachable", async () => {
    const store = await storeWith(["a"]);
    store.entries[0].state = "failed";
    store.entries[0].error = "boom";
    store.banner = "Server unreachable. Check that the API is running.";
    const container = document.createElement("div");
    renderQueue(container, store, () => {});
    expect(container.querySelector(".banner")?.textContent).toMatch(/unreachable/i);
    expect(container.textContent).toMatch(/failed: boom/);
  });
});

describe("renderFeed", () => {
  const articles = [
    { id: "x", title: "best story", url: "https://e/x", source: "s", mean_score: 0.9 },
    { id: "y", title: "good story", url: "https://e/y", source: "s", mean_score: 0.8 },
  ];

  it("lists articles in server order with scores", () => {
    const container = document.createElement("div");
    renderFeed(container,
               { date: "2024-06-05", articles, emptyMessage: null, detail: null },
               () => {});
    const rows = container.querySelectorAll("li.feed-item");
    expect(rows).toHaveLength(2);
    expect(rows[0].textContent).toContain("best story");
    expect(rows[0].textContent).toContain("0.900");
  });

  it("shows the empty state for an unpublished date", () => {
    const container = document.createElement("div");
    renderFeed(container,
               { date: null, articles: null,
                 emptyMessage: "No feed published for 1999-01-01.", detail: null },
               () => {});
    expect(container.textContent).toMatch(/no feed published/i);
  });

  it("renders the per-stage trail in the detail pane", () => {
    const detail = {
      id: "x", title: "best story", url: "https://e/x", source: "s",
      published_at: "", fetched_at: "",
      verdict: {
        final: "accepted", mean_score: 0.9,
        entries: [
          { stage: "sequential", score: 0.95, passed: true },
          { stage: "strict", score: 0.85, passed: true },
        ],
      },
    };
    const pane = renderDetail(detail);
    const cells = pane.querySelectorAll("td");
    expect(pane.textContent).toContain("accepted");
    expect(cells[0].textContent).toBe("sequential");
    expect(cells[1].textContent).toBe("0.9500");
  });
});
