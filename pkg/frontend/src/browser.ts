import type { ApiClient } from "./api.js";
import { ApiFailure } from "./api.js";
import type { DatasetInfo, SampleItem } from "./api-types.js";

export interface BrowserState {
  catalog: DatasetInfo[];
  dataset: string | null;
  split: string;
  page: number;
  total: number;
  items: SampleItem[];
  loading: boolean;
  error: string | null;
}

/** Dataset browser: one split at a time, paged with a fixed page size.
 *
 * Page n always requests offset = n * pageSize, limit = pageSize, so walking
 * the pager concatenates back to the split in its served order. Stale
 * responses are dropped by epoch, mirroring the demo tabs.
 */
export class DatasetBrowser {
  state: BrowserState = {
    catalog: [],
    dataset: null,
    split: "train",
    page: 0,
    total: 0,
    items: [],
    loading: false,
    error: null,
  };

  private epoch = 0;

  constructor(
    private readonly client: ApiClient,
    readonly pageSize: number = 12,
    private readonly onChange: (state: BrowserState) => void = () => {},
  ) {}

  private setState(patch: Partial<BrowserState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  async loadCatalog(): Promise<void> {
    try {
      const body = await this.client.datasets();
      this.setState({ catalog: body.datasets, error: null });
    } catch (err) {
      this.setState({ catalog: [], error: err instanceof Error ? err.message : String(err) });
    }
  }

  /** Open a (dataset, split) at a page; out-of-range pages clamp to 0. */
  async open(dataset: string, split: string, page: number): Promise<void> {
    this.epoch += 1;
    const myEpoch = this.epoch;
    const safePage = Number.isInteger(page) && page > 0 ? page : 0;
    this.setState({ dataset, split, page: safePage, loading: true, error: null });
    try {
      const body = await this.client.samples(
        dataset,
        split,
        safePage * this.pageSize,
        this.pageSize,
      );
      if (myEpoch !== this.epoch) return;
      this.setState({ total: body.total, items: body.items, loading: false, error: null });
    } catch (err) {
      if (myEpoch !== this.epoch) return;
      const message =
        err instanceof ApiFailure && err.status === 404
          ? `nothing here: ${err.message}`
          : err instanceof Error
            ? err.message
            : String(err);
      this.setState({ total: 0, items: [], loading: false, error: message });
    }
  }

  pageCount(): number {
    return Math.max(1, Math.ceil(this.state.total / this.pageSize));
  }

  hasNext(): boolean {
    return this.state.page + 1 < this.pageCount();
  }

  hasPrev(): boolean {
    return this.state.page > 0;
  }

  async next(): Promise<void> {
    if (this.state.dataset === null || !this.hasNext()) return;
    await this.open(this.state.dataset, this.state.split, this.state.page + 1);
  }

  async prev(): Promise<void> {
    if (this.state.dataset === null || !this.hasPrev()) return;
    await this.open(this.state.dataset, this.state.split, this.state.page - 1);
  }
}
