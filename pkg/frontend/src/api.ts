/**
 * Typed client for the annotation service HTTP API.
 *
 * The UI talks to the service exclusively through these calls; the base
 * URL and bearer token come from the bootstrap screen.
 */

export interface TopicSide {
  slug: string;
  entity_url: string | null;
}

export interface PairPayload {
  pair_id: string;
  topic_a: TopicSide;
  topic_b: TopicSide;
}

export interface AnnotateAck {
  annotation_id: string;
  total_annotations: number;
}

export interface BootstrapInfo {
  service: string;
  version: string;
  prompt: string;
  endpoints: Record<string, string>;
}

export type Outcome = "a_wins" | "b_wins" | "tie" | "skip";

/** Raised for HTTP-level failures so callers can branch on the status. */
export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private headers(): Record<string, string> {
    return {
      Authorization: `Bearer ${this.token}`,
      "Content-Type": "application/json",
    };
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      ...init,
      headers: { ...this.headers(), ...(init?.headers ?? {}) },
    });
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        /* non-JSON error body: keep the status text */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  bootstrap(): Promise<BootstrapInfo> {
    return this.request<BootstrapInfo>("/api/bootstrap");
  }

  nextPair(): Promise<PairPayload> {
    return this.request<PairPayload>("/api/pairs/next");
  }

  annotate(pairId: string, outcome: Outcome): Promise<AnnotateAck> {
    return this.request<AnnotateAck>("/api/annotations", {
      method: "POST",
      body: JSON.stringify({ pair_id: pairId, outcome }),
    });
  }
}
