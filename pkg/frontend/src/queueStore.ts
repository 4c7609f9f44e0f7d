// Queue state machine. All state shown is server-derived; the only
// mutation the app ever performs is POST /v1/queue/{id}/verdict, and at
// most one submission per article is in flight at any time.

import { ApiError } from "./api.js";
import type {
  QueueItem,
  QueueResponse,
  SubmissionState,
  VerdictAck,
  VerdictLabel,
} from "./types.js";

/** The slice of the API the queue needs; ApiClient satisfies it. */
export interface QueueApi {
  getQueue(): Promise<QueueResponse>;
  postVerdict(id: string, label: VerdictLabel): Promise<VerdictAck>;
}

export interface QueueEntry {
  item: QueueItem;
  state: SubmissionState;
  error?: string;
}

export type Listener = () => void;

export class QueueStore {
  entries: QueueEntry[] = [];
  selected = 0;
  /** Transient per-item message, e.g. a stale item vanishing. */
  notice: string | null = null;
  /** Set while the server is unreachable; cleared by a successful call. */
  banner: string | null = null;
  loaded = false;

  private listeners: Listener[] = [];

  constructor(private api: QueueApi) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  get selectedEntry(): QueueEntry | undefined {
    return this.entries[this.selected];
  }

  select(index: number): void {
    if (this.entries.length === 0) {
      this.selected = 0;
    } else {
      this.selected = Math.min(Math.max(index, 0), this.entries.length - 1);
    }
    this.notify();
  }

  selectNext(): void {
    this.select(this.selected + 1);
  }

  selectPrevious(): void {
    this.select(this.selected - 1);
  }

  async refresh(): Promise<void> {
    try {
      const queue = await this.api.getQueue();
      // Keep in-flight submission state across refreshes.
      const states = new Map(this.entries.map((e) => [e.item.article_id, e]));
      this.entries = queue.items.map((item) => ({
        item,
        state: states.get(item.article_id)?.state ?? "idle",
        error: states.get(item.article_id)?.error,
      }));
      this.banner = null;
      this.loaded = true;
      this.select(this.selected);
    } catch (err) {
      if (err instanceof ApiError && err.unreachable) {
        this.banner = "Server unreachable. Check that the API is running.";
      } else {
        this.banner = `Failed to load queue: ${(err as Error).message}`;
      }
      this.notify();
    }
  }

  private removeEntry(articleId: string): void {
    this.entries = this.entries.filter((e) => e.item.article_id !== articleId);
    this.select(this.selected);
  }

  /**
   * Submit a verdict for one article. Returns false when the submission
   * was suppressed because one is already in flight (double-press guard).
   */
  async submit(articleId: string, label: VerdictLabel): Promise<boolean> {
    const entry = this.entries.find((e) => e.item.article_id === articleId);
    if (!entry || entry.state === "pending" || entry.state === "confirmed") {
      return false;
    }
    entry.state = "pending";
    entry.error = undefined;
    this.notify();
    try {
      await this.api.postVerdict(articleId, label);
      entry.state = "confirmed";
      this.banner = null;
      this.removeEntry(articleId);
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        // Someone else adjudicated it; mirror the server.
        this.notice = "Item was already resolved elsewhere; removed.";
        this.removeEntry(articleId);
        return false;
      }
      entry.state = "failed";
      entry.error = err instanceof Error ? err.message : String(err);
      if (err instanceof ApiError && err.unreachable) {
        this.banner = "Server unreachable. Check that the API is running.";
      }
      this.notify();
      return false;
    }
  }

  submitSelected(label: VerdictLabel): Promise<boolean> {
    const entry = this.selectedEntry;
    if (!entry) return Promise.resolve(false);
    return this.submit(entry.item.article_id, label);
  }

  clearNotice(): void {
    this.notice = null;
    this.notify();
  }
}
