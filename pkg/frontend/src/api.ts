// Thin typed client over the service's REST endpoints. The base URL is
// the app's single configuration setting.

import type {
  ArticleDetail,
  FeedResponse,
  QueueResponse,
  VerdictAck,
  VerdictLabel,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }

  /** status 0 means the server never answered (network failure). */
  get unreachable(): boolean {
    return this.status === 0;
  }
}

const BASE_URL_KEY = "uplift.baseUrl";
export const DEFAULT_BASE_URL = "http://127.0.0.1:8765";

export function resolveBaseUrl(win: Pick<Window, "location" | "localStorage">): string {
  const fromQuery = new URLSearchParams(win.location.search).get("api");
  if (fromQuery) {
    win.localStorage.setItem(BASE_URL_KEY, fromQuery);
    return fromQuery;
  }
  return win.localStorage.getItem(BASE_URL_KEY) ?? DEFAULT_BASE_URL;
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, "unreachable", String(err));
    }
    if (!resp.ok) {
      let code = "error";
      let message = `HTTP ${resp.status}`;
      try {
        const body = await resp.json();
        code = body.error ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep the generic message
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  getQueue(): Promise<QueueResponse> {
    return this.request<QueueResponse>("/v1/queue");
  }

  getFeed(date?: string): Promise<FeedResponse> {
    const query = date ? `?date=${encodeURIComponent(date)}` : "";
    return this.request<FeedResponse>(`/v1/feed${query}`);
  }

  getArticle(id: string): Promise<ArticleDetail> {
    return this.request<ArticleDetail>(`/v1/articles/${encodeURIComponent(id)}`);
  }

  postVerdict(id: string, label: VerdictLabel): Promise<VerdictAck> {
    return this.request<VerdictAck>(`/v1/queue/${encodeURIComponent(id)}/verdict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ label }),
    });
  }
}
