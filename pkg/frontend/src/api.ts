import type { NextItemResponse, ProgressReport, RatingSubmission } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

/** 409 from the ratings endpoint: the item is already rated by this rater. */
export class ConflictError extends Error {
  constructor(public readonly existingGrade: string | null) {
    super("already rated");
  }
}

export class NetworkError extends Error {}

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    return body.error ?? `request failed with status ${response.status}`;
  } catch {
    return `request failed with status ${response.status}`;
  }
}

export class AnnotationApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (cause) {
      throw new NetworkError(`cannot reach the annotation server (${String(cause)})`);
    }
    return response;
  }

  async nextItem(rater: string): Promise<NextItemResponse> {
    const response = await this.request(
      `/api/items/next?rater=${encodeURIComponent(rater)}`,
    );
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return (await response.json()) as NextItemResponse;
  }

  async submitRating(submission: RatingSubmission): Promise<void> {
    const response = await this.request("/api/ratings", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        item_id: submission.item_id,
        rater: submission.rater,
        grade: submission.grade,
        note: submission.note ?? "",
      }),
    });
    if (response.status === 409) {
      const body = (await response.json()) as { existing_grade?: string | null };
      throw new ConflictError(body.existing_grade ?? null);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
  }

  async progress(): Promise<ProgressReport> {
    const response = await this.request("/api/progress");
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return (await response.json()) as ProgressReport;
  }

  exportUrl(): string {
    return `${this.baseUrl}/api/export`;
  }
}
