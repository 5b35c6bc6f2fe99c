import type { VerifyPayload } from "./capture.js";

export interface Verdict {
  probability: number;
  verdict: "human" | "synthetic";
  model_id: string;
  representation: string;
}

export class ApiError extends Error {
  constructor(message: string, readonly code: string) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init: RequestInit) => Promise<Response>;

/**
 * Thin client for the verification service.  One submission may be in
 * flight at a time; concurrent calls reject with code "busy" so the UI
 * can simply disable its submit button while pending.
 */
export class VerifyClient {
  private pending = false;

  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  get busy(): boolean {
    return this.pending;
  }

  async verify(payload: VerifyPayload): Promise<Verdict> {
    if (this.pending) {
      throw new ApiError("a submission is already in flight", "busy");
    }
    this.pending = true;
    try {
      let resp: Response;
      try {
        resp = await this.fetchFn(`${this.baseUrl}/verify`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(payload),
        });
      } catch {
        throw new ApiError("cannot reach the server", "network");
      }
      const body = await resp.json().catch(() => null);
      if (!resp.ok) {
        throw new ApiError(
          body?.detail ?? `server returned ${resp.status}`,
          body?.code ?? "server",
        );
      }
      return body as Verdict;
    } finally {
      this.pending = false;
    }
  }
}
