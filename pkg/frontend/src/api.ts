/** Typed client for the review service's public HTTP endpoints. */

export interface ReviewCard {
  item_id: string;
  sentence: string;
  context: string[];
  context_offset: number;
  kind: string;
  proposed_class: string;
  score: number | null;
  doc_title: string;
  language: string;
  lease_expiry: number;
}

export interface NextResponse {
  empty: boolean;
  item: ReviewCard | null;
}

export interface DecisionResponse {
  item_id: string;
  provenance: string;
}

export interface ClassProgress {
  confirmed: number;
  rejected: number;
  pending: number;
  gold: number;
}

export interface KappaEntry {
  rater_a: string;
  rater_b: string;
  items: number;
  kappa: number;
}

export interface ProgressResponse {
  classes: Record<string, ClassProgress>;
  kappa: KappaEntry[];
}

export interface ServiceErrorBody {
  error: string;
  code: string;
}

export class ServiceError extends Error {
  constructor(public code: string, message: string, public status: number) {
    super(message);
    this.name = "ServiceError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = fetch,
    private token?: string,
  ) {}

  private headers(json: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["content-type"] = "application/json";
    if (this.token) h["x-auth-token"] = this.token;
    return h;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body = await response.json();
    if (!response.ok) {
      const err = body as ServiceErrorBody;
      throw new ServiceError(err.code ?? "unknown", err.error ?? "request failed", response.status);
    }
    return body as T;
  }

  nextCard(raterId: string): Promise<NextResponse> {
    const query = new URLSearchParams({ rater_id: raterId });
    return this.request(`/review/next?${query}`, { headers: this.headers(false) });
  }

  decide(itemId: string, decision: "confirm" | "reject", raterId: string): Promise<DecisionResponse> {
    return this.request(`/review/${encodeURIComponent(itemId)}/decision`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ decision, rater_id: raterId }),
    });
  }

  progress(): Promise<ProgressResponse> {
    return this.request("/review/progress", { headers: this.headers(false) });
  }

  search(q: string, topK = 10): Promise<{ results: unknown[] }> {
    const query = new URLSearchParams({ q, top_k: String(topK) });
    return this.request(`/search?${query}`, { headers: this.headers(false) });
  }
}
