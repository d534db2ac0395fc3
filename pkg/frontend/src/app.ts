import { ApiClient } from "./api.js";
import {
  addChip,
  canSubmitCaption,
  canSubmitClassify,
  canSubmitSearch,
  canSubmitVqa,
  captionController,
  classifyController,
  removeChip,
  scoreRows,
  searchController,
  vqaController,
} from "./tabs.js";
import { DatasetBrowser } from "./browser.js";
import { decodeHash, encodeHash, TABS } from "./state.js";
import type { TabName, ViewState } from "./state.js";

const client = new ApiClient();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function esc(text: string): string {
  const map: Record<string, string> = {
    "&": "&amp;",
    "<": "&lt;",
    ">": "&gt;",
    '"': "&quot;",
    "'": "&#39;",
  };
  return text.replace(/[&<>"']/g, (c) => map[c]);
}

function banner(target: HTMLElement, state: { pending: boolean; error: string | null }): boolean {
  if (state.pending) {
    target.innerHTML = `<p class="muted">working ...</p>`;
    return true;
  }
  if (state.error !== null) {
    target.innerHTML = `<p class="error">${esc(state.error)}</p>`;
    return true;
  }
  return false;
}

function bars(scores: Record<string, number>, highlight: string | null, asPercent: boolean): string {
  const rows = scoreRows(scores);
  const top = rows.length > 0 ? Math.max(...rows.map((r) => Math.abs(r.value)), 1e-9) : 1;
  return rows
    .map((row) => {
      const width = asPercent ? row.value * 100 : (Math.abs(row.value) / top) * 100;
      const shown = asPercent ? `${(row.value * 100).toFixed(1)}%` : row.value.toFixed(3);
      const cls = row.key === highlight ? "bar-row winner" : "bar-row";
      return (
        `<div class="${cls}"><span class="bar-label">${esc(row.key)}</span>` +
        `<span class="bar-track"><span class="bar-fill" style="width:${Math.max(width, 0).toFixed(1)}%"></span></span>` +
        `<span class="bar-value">${shown}</span></div>`
      );
    })
    .join("");
}

/** File input -> data URL (the API accepts data URLs as image payloads). */
function bindImagePicker(inputId: string, previewId: string, onReady: (dataUrl: string) => void): void {
  const input = el<HTMLInputElement>(inputId);
  const preview = el<HTMLImageElement>(previewId);
  input.addEventListener("change", () => {
    const file = input.files?.[0];
    if (!file) return;
    const reader = new FileReader();
    reader.onload = () => {
      const dataUrl = String(reader.result);
      preview.src = dataUrl;
      preview.classList.remove("hidden");
      onReady(dataUrl);
    };
    reader.readAsDataURL(file);
  });
}

function renderChips(target: HTMLElement, chips: string[], onRemove: (label: string) => void): void {
  target.innerHTML = chips
    .map((chip) => `<span class="chip">${esc(chip)}<button type="button" data-chip="${esc(chip)}">x</button></span>`)
    .join("");
  for (const button of target.querySelectorAll<HTMLButtonElement>("button[data-chip]")) {
    button.addEventListener("click", () => onRemove(button.dataset.chip ?? ""));
  }
}

// ---- caption tab ----------------------------------------------------------

function setupCaptionTab(): void {
  let image: string | null = null;
  const submit = el<HTMLButtonElement>("caption-submit");
  const output = el<HTMLElement>("caption-output");
  const controller = captionController(client, (state) => {
    submit.disabled = state.pending || !canSubmitCaption(image);
    if (banner(output, state)) return;
    output.innerHTML = state.result ? `<p class="caption-text">${esc(state.result.caption)}</p>` : "";
  });
  bindImagePicker("caption-image", "caption-preview", (dataUrl) => {
    image = dataUrl;
    submit.disabled = !canSubmitCaption(image);
  });
  const refresh = () => {
    submit.disabled = !canSubmitCaption(image);
  };
  el<HTMLInputElement>("caption-beams").addEventListener("input", refresh);
  el<HTMLInputElement>("caption-maxlen").addEventListener("input", refresh);
  submit.addEventListener("click", () => {
    if (!canSubmitCaption(image)) return;
    void controller.submit({
      image: image as string,
      numBeams: Number(el<HTMLInputElement>("caption-beams").value) || 3,
      maxLen: Number(el<HTMLInputElement>("caption-maxlen").value) || 12,
    });
  });
}

// ---- vqa tab --------------------------------------------------------------

function setupVqaTab(): void {
  let image: string | null = null;
  let answers: string[] = [];
  const question = el<HTMLInputElement>("vqa-question");
  const submit = el<HTMLButtonElement>("vqa-submit");
  const output = el<HTMLElement>("vqa-output");
  const chipBox = el<HTMLElement>("vqa-chips");

  const refresh = () => {
    submit.disabled = !canSubmitVqa(image, question.value, answers);
  };
  const setAnswers = (next: string[]) => {
    answers = next;
    renderChips(chipBox, answers, (label) => setAnswers(removeChip(answers, label)));
    refresh();
  };

  const controller = vqaController(client, (state) => {
    refresh();
    if (state.pending) {
      banner(output, state);
      return;
    }
    if (banner(output, state)) return;
    if (state.result) {
      output.innerHTML =
        `<p>answer: <strong>${esc(state.result.answer)}</strong></p>` +
        bars(state.result.scores, state.result.answer, false);
    }
  });

  bindImagePicker("vqa-image", "vqa-preview", (dataUrl) => {
    image = dataUrl;
    refresh();
  });
  question.addEventListener("input", refresh);
  el<HTMLButtonElement>("vqa-add").addEventListener("click", () => {
    const entry = el<HTMLInputElement>("vqa-answer");
    setAnswers(addChip(answers, entry.value));
    entry.value = "";
  });
  submit.addEventListener("click", () => {
    if (!canSubmitVqa(image, question.value, answers)) return;
    void controller.submit({ image: image as string, question: question.value, answers });
  });
  setAnswers([]);
}

// ---- search tab -----------------------------------------------------------

function setupSearchTab(): void {
  const query = el<HTMLInputElement>("search-query");
  const gallery = el<HTMLSelectElement>("search-gallery");
  const slider = el<HTMLInputElement>("search-k");
  const kLabel = el<HTMLElement>("search-k-label");
  const submit = el<HTMLButtonElement>("search-submit");
  const output = el<HTMLElement>("search-output");

  const controller = searchController(client, (state) => {
    submit.disabled = state.pending || !canSubmitSearch(query.value, Number(slider.value));
    if (banner(output, state)) return;
    if (state.result) {
      output.innerHTML = state.result.results
        .map(
          (hit) =>
            `<figure class="tile">` +
            (hit.thumbnail
              ? `<img src="${esc(hit.thumbnail)}" alt="${esc(hit.id)}">`
              : `<div class="tile-blank"></div>`) +
            `<figcaption>${esc(hit.id)}<br><span class="muted">${hit.score.toFixed(3)}</span></figcaption>` +
            `</figure>`,
        )
        .join("");
    }
  });

  const refresh = () => {
    kLabel.textContent = slider.value;
    submit.disabled = !canSubmitSearch(query.value, Number(slider.value));
  };
  query.addEventListener("input", refresh);
  slider.addEventListener("input", refresh);
  submit.addEventListener("click", () => {
    if (!canSubmitSearch(query.value, Number(slider.value))) return;
    void controller.submit({
      galleryId: gallery.value,
      query: query.value,
      k: Number(slider.value),
    });
  });
  refresh();
}

// ---- classify tab ---------------------------------------------------------

function setupClassifyTab(): void {
  let image: string | null = null;
  let labels: string[] = [];
  const submit = el<HTMLButtonElement>("classify-submit");
  const output = el<HTMLElement>("classify-output");
  const chipBox = el<HTMLElement>("classify-chips");

  const refresh = () => {
    submit.disabled = !canSubmitClassify(image, labels);
  };
  const setLabels = (next: string[]) => {
    labels = next;
    renderChips(chipBox, labels, (label) => setLabels(removeChip(labels, label)));
    refresh();
  };

  const controller = classifyController(client, (state) => {
    refresh();
    if (state.pending) {
      banner(output, state);
      return;
    }
    if (banner(output, state)) return;
    if (state.result) {
      output.innerHTML =
        `<p>label: <strong>${esc(state.result.label)}</strong></p>` +
        bars(state.result.probabilities, state.result.label, true);
    }
  });

  bindImagePicker("classify-image", "classify-preview", (dataUrl) => {
    image = dataUrl;
    refresh();
  });
  el<HTMLButtonElement>("classify-add").addEventListener("click", () => {
    const entry = el<HTMLInputElement>("classify-label");
    setLabels(addChip(labels, entry.value));
    entry.value = "";
  });
  submit.addEventListener("click", () => {
    if (!canSubmitClassify(image, labels)) return;
    void controller.submit({
      image: image as string,
      labels,
      prompt: el<HTMLInputElement>("classify-prompt").value,
    });
  });
  setLabels([]);
}

// ---- dataset browser ------------------------------------------------------

function setupBrowser(): { open: (state: ViewState) => void } {
  const datasetSel = el<HTMLSelectElement>("browse-dataset");
  const splitSel = el<HTMLSelectElement>("browse-split");
  const grid = el<HTMLElement>("browse-grid");
  const status = el<HTMLElement>("browse-status");
  const prev = el<HTMLButtonElement>("browse-prev");
  const next = el<HTMLButtonElement>("browse-next");

  const browser = new DatasetBrowser(client, 12, (state) => {
    if (state.dataset !== null) datasetSel.value = state.dataset;
    const picked = state.catalog.find((d) => d.name === state.dataset);
    if (picked && splitSel.options.length !== picked.splits.length) {
      splitSel.innerHTML = picked.splits
        .map((s) => `<option value="${esc(s.name)}">${esc(s.name)} (${s.count})</option>`)
        .join("");
    }
    splitSel.value = state.split;
    prev.disabled = !browser.hasPrev();
    next.disabled = !browser.hasNext();
    if (state.loading) {
      status.textContent = "loading ...";
      return;
    }
    if (state.error !== null) {
      status.textContent = "";
      grid.innerHTML = `<p class="error">${esc(state.error)}</p>`;
      return;
    }
    status.textContent = `page ${state.page + 1} of ${browser.pageCount()} (${state.total} items)`;
    grid.innerHTML = state.items
      .map((item) => {
        const extras = Object.entries(item.extras)
          .map(([key, value]) => `<div class="muted">${esc(key)}: ${esc(JSON.stringify(value))}</div>`)
          .join("");
        return (
          `<figure class="tile">` +
          `<img src="${esc(item.image_url)}" alt="${esc(item.instance_id)}">` +
          `<figcaption>${esc(item.text)}${extras}</figcaption>` +
          `</figure>`
        );
      })
      .join("");
  });

  const syncHash = () => {
    location.hash = encodeHash({
      tab: "browse",
      dataset: browser.state.dataset,
      split: browser.state.split,
      page: browser.state.page,
    });
  };

  datasetSel.addEventListener("change", () => {
    void browser.open(datasetSel.value, "train", 0).then(syncHash);
  });
  splitSel.addEventListener("change", () => {
    if (browser.state.dataset !== null) {
      void browser.open(browser.state.dataset, splitSel.value, 0).then(syncHash);
    }
  });
  prev.addEventListener("click", () => void browser.prev().then(syncHash));
  next.addEventListener("click", () => void browser.next().then(syncHash));

  void browser.loadCatalog().then(() => {
    datasetSel.innerHTML = browser.state.catalog
      .map((d) => `<option value="${esc(d.name)}">${esc(d.name)}</option>`)
      .join("");
    const gallerySel = el<HTMLSelectElement>("search-gallery");
    gallerySel.innerHTML = browser.state.catalog
      .flatMap((d) => d.splits.map((s) => `${d.name}:${s.name}`))
      .map((id) => `<option value="${esc(id)}">${esc(id)}</option>`)
      .join("");
    const current = decodeHash(location.hash);
    if (current.tab === "browse") applyBrowseState(current);
  });

  const applyBrowseState = (state: ViewState) => {
    const dataset = state.dataset ?? browser.state.catalog[0]?.name;
    if (!dataset) return;
    const already =
      browser.state.dataset === dataset &&
      browser.state.split === state.split &&
      browser.state.page === state.page;
    if (!already) void browser.open(dataset, state.split, state.page);
  };

  return { open: applyBrowseState };
}

// ---- shell ----------------------------------------------------------------

function showTab(tab: TabName): void {
  for (const name of TABS) {
    el(`panel-${name}`).classList.toggle("hidden", name !== tab);
    el(`nav-${name}`).classList.toggle("active", name === tab);
  }
}

function main(): void {
  setupCaptionTab();
  setupVqaTab();
  setupSearchTab();
  setupClassifyTab();
  const browse = setupBrowser();

  const apply = () => {
    const state = decodeHash(location.hash);
    showTab(state.tab);
    if (state.tab === "browse") browse.open(state);
  };
  window.addEventListener("hashchange", apply);
  apply();
}

main();
