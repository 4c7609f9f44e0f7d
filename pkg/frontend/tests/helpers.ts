import type { QueueApi } from "../src/queueStore.js";
import type { QueueItem, QueueResponse, VerdictAck, VerdictLabel } from "../src/types.js";

export function makeItem(id: string, title = `story ${id}`): QueueItem {
  return {
    article_id: id,
    title,
    url: `https://ex.com/${id}`,
    source: "wire",
    mean_score: 0.5,
    enqueued_at: "2024-06-01T00:00:00+00:00",
    stages: [
      { stage: "sequential", score: 0.61, passed: true },
      { stage: "lstm", score: 0.42, passed: false },
    ],
  };
}

interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (err: unknown) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/** Scripted QueueApi: records calls, lets tests control each response. */
export class FakeApi implements QueueApi {
  queue: QueueItem[] = [];
  verdictCalls: { id: string; label: VerdictLabel }[] = [];
  failQueueWith: unknown = null;
  nextVerdict: Deferred<VerdictAck> | null = null;

  async getQueue(): Promise<QueueResponse> {
    if (this.failQueueWith) throw this.failQueueWith;
    return { items: [...this.queue], total: this.queue.length };
  }

  postVerdict(id: string, label: VerdictLabel): Promise<VerdictAck> {
    this.verdictCalls.push({ id, label });
    if (this.nextVerdict) {
      const pending = this.nextVerdict;
      this.nextVerdict = null;
      return pending.promise;
    }
    this.queue = this.queue.filter((q) => q.article_id !== id);
    return Promise.resolve({ status: "ok", article_id: id, queue_size: this.queue.length });
  }
}
