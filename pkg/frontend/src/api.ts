import type {
  CaptionRequest,
  CaptionResponse,
  ClassifyRequest,
  ClassifyResponse,
  DatasetsResponse,
  ErrorBody,
  FeaturesRequest,
  FeaturesResponse,
  SamplesResponse,
  SearchRequest,
  SearchResponse,
  VqaRequest,
  VqaResponse,
} from "./api-types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Error carrying the service's {error: {code, message}} body plus HTTP status. */
export class ApiFailure extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiFailure";
  }
}

function isErrorBody(value: unknown): value is ErrorBody {
  if (typeof value !== "object" || value === null) return false;
  const error = (value as { error?: unknown }).error;
  return (
    typeof error === "object" &&
    error !== null &&
    typeof (error as { code?: unknown }).code === "string" &&
    typeof (error as { message?: unknown }).message === "string"
  );
}

async function asFailure(response: Response): Promise<ApiFailure> {
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    // non-JSON error page; fall through to the generic failure
  }
  if (isErrorBody(body)) {
    return new ApiFailure(response.status, body.error.code, body.error.message);
  }
  return new ApiFailure(response.status, "internal", `request failed with status ${response.status}`);
}

/** Thin typed client over the service HTTP API.
 *
 * The fetch implementation is injectable so tests can run against a mock;
 * the default wraps the global fetch (wrapping keeps `this` unbound).
 */
export class ApiClient {
  constructor(
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    private readonly base: string = "",
  ) {}

  private async post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchImpl(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    if (!response.ok) throw await asFailure(response);
    return (await response.json()) as T;
  }

  private async get<T>(path: string, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchImpl(this.base + path, { method: "GET", signal });
    if (!response.ok) throw await asFailure(response);
    return (await response.json()) as T;
  }

  caption(request: CaptionRequest, signal?: AbortSignal): Promise<CaptionResponse> {
    return this.post("/api/caption", request, signal);
  }

  vqa(request: VqaRequest, signal?: AbortSignal): Promise<VqaResponse> {
    return this.post("/api/vqa", request, signal);
  }

  search(request: SearchRequest, signal?: AbortSignal): Promise<SearchResponse> {
    return this.post("/api/search", request, signal);
  }

  classify(request: ClassifyRequest, signal?: AbortSignal): Promise<ClassifyResponse> {
    return this.post("/api/classify", request, signal);
  }

  features(request: FeaturesRequest, signal?: AbortSignal): Promise<FeaturesResponse> {
    return this.post("/api/features", request, signal);
  }

  datasets(signal?: AbortSignal): Promise<DatasetsResponse> {
    return this.get("/api/datasets", signal);
  }

  samples(
    name: string,
    split: string,
    offset: number,
    limit: number,
    signal?: AbortSignal,
  ): Promise<SamplesResponse> {
    const query = new URLSearchParams({
      split,
      offset: String(offset),
      limit: String(limit),
    });
    return this.get(`/api/datasets/${encodeURIComponent(name)}/samples?${query}`, signal);
  }
}
