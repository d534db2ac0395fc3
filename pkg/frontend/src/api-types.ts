/** Request and response bodies of the service HTTP API.
 *
 * These mirror the JSON Schema definitions shipped with the Python package
 * at src/mmkit/resources/service_schema.json; the test suite validates every
 * body the client emits against that file, so the two cannot drift silently.
 */

export interface ErrorBody {
  error: { code: string; message: string };
}

export interface CaptionRequest {
  image: string;
  num_beams?: number;
  max_len?: number;
}

export interface CaptionResponse {
  caption: string;
}

export interface VqaRequest {
  image: string;
  question: string;
  answer_list: string[];
}

export interface VqaResponse {
  answer: string;
  scores: Record<string, number>;
}

export interface SearchRequest {
  gallery_id: string;
  query: string;
  k: number;
}

export interface SearchResult {
  id: string;
  score: number;
  thumbnail?: string | null;
}

export interface SearchResponse {
  results: SearchResult[];
}

export interface ClassifyRequest {
  image: string;
  labels: string[];
  prompt?: string;
}

export interface ClassifyResponse {
  label: string;
  probabilities: Record<string, number>;
}

export type FeatureMode = "image" | "text" | "multimodal";

export interface FeaturesRequest {
  mode: FeatureMode;
  image?: string;
  text?: string;
}

export interface FeaturesResponse {
  mode: FeatureMode;
  image_embeds_proj?: number[];
  text_embeds_proj?: number[];
  multimodal_embeds?: number[][];
}

export interface SplitInfo {
  name: string;
  count: number;
}

export interface DatasetInfo {
  name: string;
  splits: SplitInfo[];
}

export interface DatasetsResponse {
  datasets: DatasetInfo[];
}

export interface SampleItem {
  instance_id: string;
  image_url: string;
  text: string;
  extras: Record<string, unknown>;
}

export interface SamplesResponse {
  total: number;
  offset: number;
  limit: number;
  items: SampleItem[];
}
