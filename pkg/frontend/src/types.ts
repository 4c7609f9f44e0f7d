// Shapes mirror the server's JSON responses; the UI never derives scores
// on its own.

export interface StageEntry {
  stage: string;
  score: number;
  passed: boolean;
}

export interface QueueItem {
  article_id: string;
  title: string;
  url: string;
  source: string;
  mean_score: number;
  enqueued_at: string;
  stages: StageEntry[];
}

export interface QueueResponse {
  items: QueueItem[];
  total: number;
}

export interface FeedItem {
  id: string;
  title: string;
  url: string;
  source: string;
  mean_score: number;
}

export interface FeedResponse {
  date: string;
  articles: FeedItem[];
}

export interface VerdictTrail {
  entries: StageEntry[];
  final: string;
  mean_score: number;
  error?: string | null;
}

export interface ArticleDetail {
  id: string;
  title: string;
  url: string;
  source: string;
  published_at: string;
  fetched_at: string;
  verdict: VerdictTrail;
}

export interface VerdictAck {
  status: string;
  article_id: string;
  queue_size: number;
}

export type VerdictLabel = "positive" | "negative" | "skip";

export type SubmissionState = "idle" | "pending" | "confirmed" | "failed";
