import { describe, expect, it } from "vitest";

import type { Frame } from "../src/api.js";
import { ViewState } from "../src/view.js";

const frame = (step: number): Frame => ({ step, positions: [[step, step]] });

describe("ViewState frame buffer", () => {
  it("renders the most recently received record", () => {
    const view = new ViewState();
    expect(view.frame()).toBeNull();
    for (let s = 1; s <= 5; s++) view.pushFrame(frame(s));
    expect(view.frame()?.step).toBe(5);
  });

  it("keeps the current frame until a newer record arrives", () => {
    const view = new ViewState();
    view.pushFrame(frame(1));
    expect(view.frame()?.step).toBe(1);
    expect(view.frame()?.step).toBe(1);
    view.pushFrame(frame(2));
    expect(view.frame()?.step).toBe(2);
  });
});

describe("ViewState prompt history", () => {
  it("appends prompts in order with timestamps", () => {
    const view = new ViewState();
    view.recordPrompt("form a cluster", 1000);
    view.recordPrompt("spread out", 2000);
    expect(view.promptHistory).toEqual([
      { text: "form a cluster", at: 1000 },
      { text: "spread out", at: 2000 },
    ]);
  });
});
