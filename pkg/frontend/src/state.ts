/** View state and its URL-hash codec.
 *
 * The whole UI is reconstructible from (tab, dataset, split, page): a deep
 * link like #/browse?dataset=shapes_vqa&split=val&page=3 renders the same
 * view as navigating there by hand. Encoding is canonical (defaults are
 * omitted), so decode(encode(s)) == s for every valid state.
 */

export const TABS = ["caption", "vqa", "search", "classify", "browse"] as const;
export type TabName = (typeof TABS)[number];

export interface ViewState {
  tab: TabName;
  dataset: string | null;
  split: string;
  page: number;
}

export const DEFAULT_SPLIT = "train";

export const DEFAULT_STATE: ViewState = {
  tab: "caption",
  dataset: null,
  split: DEFAULT_SPLIT,
  page: 0,
};

function isTab(value: string): value is TabName {
  return (TABS as readonly string[]).includes(value);
}

export function encodeHash(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.dataset !== null) params.set("dataset", state.dataset);
  if (state.split !== DEFAULT_SPLIT) params.set("split", state.split);
  if (state.page > 0) params.set("page", String(state.page));
  const query = params.toString();
  return query ? `#/${state.tab}?${query}` : `#/${state.tab}`;
}

/** Parse a location.hash value; unknown or malformed parts fall back to defaults. */
export function decodeHash(hash: string): ViewState {
  let rest = hash;
  if (rest.startsWith("#")) rest = rest.slice(1);
  if (rest.startsWith("/")) rest = rest.slice(1);
  const queryAt = rest.indexOf("?");
  const tabPart = queryAt >= 0 ? rest.slice(0, queryAt) : rest;
  const queryPart = queryAt >= 0 ? rest.slice(queryAt + 1) : "";
  const params = new URLSearchParams(queryPart);

  const tab = isTab(tabPart) ? tabPart : DEFAULT_STATE.tab;
  const dataset = params.get("dataset");
  const split = params.get("split") || DEFAULT_SPLIT;
  const rawPage = Number(params.get("page"));
  const page = Number.isInteger(rawPage) && rawPage > 0 ? rawPage : 0;
  return { tab, dataset: dataset === null || dataset === "" ? null : dataset, split, page };
}
