import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Debouncer } from "../src/debounce.js";

describe("Debouncer", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("fires once after the quiet period", () => {
    const calls: number[] = [];
    const d = new Debouncer(300);
    d.schedule(() => calls.push(1));
    d.schedule(() => calls.push(2));
    d.schedule(() => calls.push(3));
    vi.advanceTimersByTime(299);
    expect(calls).toEqual([]);
    vi.advanceTimersByTime(1);
    expect(calls).toEqual([3]);
  });

  it("resets the window on every schedule", () => {
    const calls: string[] = [];
    const d = new Debouncer(300);
    d.schedule(() => calls.push("a"));
    vi.advanceTimersByTime(200);
    d.schedule(() => calls.push("b"));
    vi.advanceTimersByTime(200);
    expect(calls).toEqual([]);
    vi.advanceTimersByTime(100);
    expect(calls).toEqual(["b"]);
  });

  it("cancel drops the pending call", () => {
    const calls: number[] = [];
    const d = new Debouncer(300);
    d.schedule(() => calls.push(1));
    d.cancel();
    vi.advanceTimersByTime(1000);
    expect(calls).toEqual([]);
    expect(d.pending).toBe(false);
  });
});
