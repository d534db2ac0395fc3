import { ApiFailure } from "./api.js";
import type { ApiClient } from "./api.js";
import type {
  CaptionResponse,
  ClassifyResponse,
  SearchResponse,
  VqaResponse,
} from "./api-types.js";

/** Per-tab request state: at most one request in flight, and whatever is
 * rendered always belongs to the most recent submission. */
export interface DemoTabState<R> {
  pending: boolean;
  result: R | null;
  error: string | null;
}

type Executor<P, R> = (client: ApiClient, params: P, signal: AbortSignal) => Promise<R>;

/** Serializes submissions for one tab.
 *
 * A new submit aborts the previous request and bumps an epoch counter; a
 * late resolution from a superseded request is dropped even if the transport
 * ignored the abort, so the rendered result always matches the last
 * completed submission.
 */
export class TabController<P, R> {
  state: DemoTabState<R> = { pending: false, result: null, error: null };

  private epoch = 0;
  private inflight: AbortController | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly exec: Executor<P, R>,
    private readonly onChange: (state: DemoTabState<R>) => void = () => {},
  ) {}

  private setState(state: DemoTabState<R>): void {
    this.state = state;
    this.onChange(state);
  }

  /** Resolves with the result, or null if superseded or failed. */
  async submit(params: P): Promise<R | null> {
    this.epoch += 1;
    const myEpoch = this.epoch;
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    this.setState({ pending: true, result: this.state.result, error: null });
    try {
      const result = await this.exec(this.client, params, controller.signal);
      if (myEpoch !== this.epoch) return null;
      this.inflight = null;
      this.setState({ pending: false, result, error: null });
      return result;
    } catch (err) {
      if (myEpoch !== this.epoch) return null;
      this.inflight = null;
      const message = err instanceof ApiFailure ? err.message : String(err);
      this.setState({ pending: false, result: null, error: message });
      return null;
    }
  }
}

export interface CaptionParams {
  image: string;
  numBeams: number;
  maxLen: number;
}

export function captionController(
  client: ApiClient,
  onChange?: (state: DemoTabState<CaptionResponse>) => void,
): TabController<CaptionParams, CaptionResponse> {
  return new TabController(
    client,
    (api, params, signal) =>
      api.caption(
        { image: params.image, num_beams: params.numBeams, max_len: params.maxLen },
        signal,
      ),
    onChange,
  );
}

export interface VqaParams {
  image: string;
  question: string;
  answers: string[];
}

export function vqaController(
  client: ApiClient,
  onChange?: (state: DemoTabState<VqaResponse>) => void,
): TabController<VqaParams, VqaResponse> {
  return new TabController(
    client,
    (api, params, signal) =>
      api.vqa(
        { image: params.image, question: params.question, answer_list: params.answers },
        signal,
      ),
    onChange,
  );
}

export interface SearchParams {
  galleryId: string;
  query: string;
  k: number;
}

export function searchController(
  client: ApiClient,
  onChange?: (state: DemoTabState<SearchResponse>) => void,
): TabController<SearchParams, SearchResponse> {
  return new TabController(
    client,
    (api, params, signal) =>
      api.search({ gallery_id: params.galleryId, query: params.query, k: params.k }, signal),
    onChange,
  );
}

export interface ClassifyParams {
  image: string;
  labels: string[];
  prompt: string;
}

export function classifyController(
  client: ApiClient,
  onChange?: (state: DemoTabState<ClassifyResponse>) => void,
): TabController<ClassifyParams, ClassifyResponse> {
  return new TabController(
    client,
    (api, params, signal) =>
      api.classify({ image: params.image, labels: params.labels, prompt: params.prompt }, signal),
    onChange,
  );
}

// Submit gating and small input-editing helpers shared by the tab forms.

export function canSubmitCaption(image: string | null): boolean {
  return image !== null && image.length > 0;
}

export function canSubmitVqa(image: string | null, question: string, answers: string[]): boolean {
  return (
    image !== null &&
    image.length > 0 &&
    question.trim().length > 0 &&
    answers.length > 0
  );
}

export function canSubmitSearch(query: string, k: number): boolean {
  return query.trim().length > 0 && Number.isInteger(k) && k >= 1;
}

export function canSubmitClassify(image: string | null, labels: string[]): boolean {
  return image !== null && image.length > 0 && labels.length > 0;
}

/** Add a label chip; blank input and duplicates are rejected client-side
 * (the list is returned unchanged so callers can compare identity). */
export function addChip(chips: string[], raw: string): string[] {
  const label = raw.trim();
  if (label.length === 0 || chips.includes(label)) return chips;
  return [...chips, label];
}

export function removeChip(chips: string[], label: string): string[] {
  return chips.filter((chip) => chip !== label);
}

/** Score map -> rows sorted by descending score (ties keep key order),
 * used by the VQA and classify bar charts. */
export function scoreRows(scores: Record<string, number>): { key: string; value: number }[] {
  return Object.entries(scores)
    .map(([key, value]) => ({ key, value }))
    .sort((a, b) => b.value - a.value);
}
