import { describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import type { FetchLike } from "../src/api.js";
import {
  addChip,
  canSubmitClassify,
  canSubmitSearch,
  canSubmitVqa,
  captionController,
  classifyController,
  removeChip,
  scoreRows,
  searchController,
  vqaController,
} from "../src/tabs.js";
import { makeMockService } from "./mock.js";

const IMAGE = "aGVsbG8gd29ybGQ=";

describe("demo tab round-trips against the mocked service", () => {
  it("caption: submit renders the caption for the upload", async () => {
    const mock = makeMockService();
    const controller = captionController(new ApiClient(mock.fetch));
    const result = await controller.submit({ image: IMAGE, numBeams: 3, maxLen: 12 });
    expect(result?.caption).toBe(mock.captionFor(IMAGE));
    expect(controller.state).toEqual({
      pending: false,
      result: { caption: mock.captionFor(IMAGE) },
      error: null,
    });
    expect(mock.calls).toHaveLength(1);
    expect(mock.calls[0].body).toEqual({ image: IMAGE, num_beams: 3, max_len: 12 });
  });

  it("vqa: answer comes from the candidate list with one score per candidate", async () => {
    const mock = makeMockService();
    const controller = vqaController(new ApiClient(mock.fetch));
    const answers = ["red", "blue", "green"];
    const result = await controller.submit({
      image: IMAGE,
      question: "what color is it",
      answers,
    });
    expect(result).not.toBeNull();
    expect(answers).toContain(result?.answer);
    expect(Object.keys(result?.scores ?? {}).sort()).toEqual([...answers].sort());
    const rows = scoreRows(result?.scores ?? {});
    expect(rows[0].key).toBe(result?.answer);
    for (let i = 1; i < rows.length; i += 1) {
      expect(rows[i - 1].value).toBeGreaterThanOrEqual(rows[i].value);
    }
  });

  it("search: grid shows exactly k tiles in API score order", async () => {
    const mock = makeMockService();
    const controller = searchController(new ApiClient(mock.fetch));
    const result = await controller.submit({
      galleryId: "shapes_caption:train",
      query: "a red circle",
      k: 6,
    });
    expect(result?.results).toHaveLength(6);
    const scores = (result?.results ?? []).map((hit) => hit.score);
    expect([...scores].sort((a, b) => b - a)).toEqual(scores);
    for (const hit of result?.results ?? []) {
      expect(hit.thumbnail).toMatch(/^\/media\//);
    }
  });

  it("search: a new query replaces the grid", async () => {
    const mock = makeMockService();
    const controller = searchController(new ApiClient(mock.fetch));
    const first = await controller.submit({
      galleryId: "shapes_caption:train",
      query: "a red circle",
      k: 4,
    });
    const second = await controller.submit({
      galleryId: "shapes_caption:train",
      query: "something else entirely",
      k: 4,
    });
    expect(controller.state.result).toEqual(second);
    expect(second?.results.map((hit) => hit.id)).not.toEqual(first?.results.map((hit) => hit.id));
  });

  it("classify: probabilities cover the labels and sum to one", async () => {
    const mock = makeMockService();
    const controller = classifyController(new ApiClient(mock.fetch));
    const labels = ["a red circle", "a blue square", "a green star"];
    const result = await controller.submit({ image: IMAGE, labels, prompt: "" });
    expect(labels).toContain(result?.label);
    const probs = Object.values(result?.probabilities ?? {});
    expect(probs).toHaveLength(labels.length);
    const total = probs.reduce((a, b) => a + b, 0);
    expect(Math.abs(total - 1)).toBeLessThan(1e-9);
    const rows = scoreRows(result?.probabilities ?? {});
    expect(rows[0].key).toBe(result?.label);
  });

  it("every request body the client emits conforms to the schema", async () => {
    // the mock validates each request against the checked-in schema and
    // responds 422 on violation, so clean round-trips prove conformance
    const mock = makeMockService();
    const client = new ApiClient(mock.fetch);
    await captionController(client).submit({ image: IMAGE, numBeams: 1, maxLen: 8 });
    await vqaController(client).submit({ image: IMAGE, question: "what", answers: ["a"] });
    await searchController(client).submit({ galleryId: "shapes_caption:train", query: "q", k: 1 });
    await classifyController(client).submit({ image: IMAGE, labels: ["a"], prompt: "p " });
    await client.features({ mode: "text", text: "a red circle" });
    await client.datasets();
    await client.samples("shapes_caption", "train", 0, 5);
    expect(mock.calls).toHaveLength(7);
  });
});

describe("error handling", () => {
  it("a 400 from the server lands in the error banner state", async () => {
    const mock = makeMockService();
    const controller = captionController(new ApiClient(mock.fetch));
    const result = await controller.submit({ image: "UNDECODABLE", numBeams: 3, maxLen: 12 });
    expect(result).toBeNull();
    expect(controller.state.pending).toBe(false);
    expect(controller.state.result).toBeNull();
    expect(controller.state.error).toContain("could not decode");
  });

  it("a non-JSON error response maps to a generic failure message", async () => {
    const broken: FetchLike = async () => new Response("<html>oops</html>", { status: 502 });
    const controller = captionController(new ApiClient(broken));
    await controller.submit({ image: IMAGE, numBeams: 3, maxLen: 12 });
    expect(controller.state.error).toContain("502");
  });
});

describe("in-flight cancellation", () => {
  it("a later submission supersedes an earlier one even if the early response arrives last", async () => {
    const mock = makeMockService();
    const gates: (() => void)[] = [];
    const gated: FetchLike = async (input, init) => {
      await new Promise<void>((resolve) => gates.push(resolve));
      return mock.fetch(input, init);
    };
    const states: boolean[] = [];
    const controller = captionController(new ApiClient(gated), (state) => {
      states.push(state.pending);
    });

    const first = controller.submit({ image: "first-image", numBeams: 3, maxLen: 12 });
    const second = controller.submit({ image: "second-image", numBeams: 3, maxLen: 12 });
    expect(gates).toHaveLength(2);

    gates[1]();
    expect(await second).toEqual({ caption: mock.captionFor("second-image") });
    gates[0]();
    expect(await first).toBeNull();

    expect(controller.state.pending).toBe(false);
    expect(controller.state.result?.caption).toBe(mock.captionFor("second-image"));
    expect(states[states.length - 1]).toBe(false);
  });

  it("aborts the transport of the superseded request", async () => {
    const mock = makeMockService();
    const gates: (() => void)[] = [];
    const gated: FetchLike = async (input, init) => {
      await new Promise<void>((resolve) => gates.push(resolve));
      return mock.fetch(input, init);
    };
    const controller = captionController(new ApiClient(gated));
    const first = controller.submit({ image: "first-image", numBeams: 3, maxLen: 12 });
    void controller.submit({ image: "second-image", numBeams: 3, maxLen: 12 });
    gates.forEach((release) => release());
    await first;
    expect(mock.calls[0].signal?.aborted).toBe(true);
    expect(mock.calls[1].signal?.aborted).toBe(false);
  });
});

describe("submit gating and chip editing", () => {
  it("vqa submit is disabled without an image, question or answers", () => {
    expect(canSubmitVqa(null, "what", ["a"])).toBe(false);
    expect(canSubmitVqa(IMAGE, "   ", ["a"])).toBe(false);
    expect(canSubmitVqa(IMAGE, "what", [])).toBe(false);
    expect(canSubmitVqa(IMAGE, "what", ["a"])).toBe(true);
  });

  it("classify submit is disabled when labels are removed down to zero", () => {
    let chips = addChip([], "red");
    expect(canSubmitClassify(IMAGE, chips)).toBe(true);
    chips = removeChip(chips, "red");
    expect(chips).toEqual([]);
    expect(canSubmitClassify(IMAGE, chips)).toBe(false);
  });

  it("rejects duplicate and blank chips client-side", () => {
    const chips = addChip(addChip([], "red"), "blue");
    expect(addChip(chips, "red")).toBe(chips);
    expect(addChip(chips, "  red  ")).toBe(chips);
    expect(addChip(chips, "   ")).toBe(chips);
    expect(addChip(chips, "green")).toEqual(["red", "blue", "green"]);
  });

  it("search submit needs a non-blank query and a positive integer k", () => {
    expect(canSubmitSearch("", 5)).toBe(false);
    expect(canSubmitSearch("a red circle", 0)).toBe(false);
    expect(canSubmitSearch("a red circle", 2.5)).toBe(false);
    expect(canSubmitSearch("a red circle", 5)).toBe(true);
  });
});
