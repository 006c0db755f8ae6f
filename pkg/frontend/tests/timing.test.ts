import { describe, expect, it } from "vitest";

import { TrialState } from "../src/state.js";
import { monotonicClock } from "../src/timing.js";
import { FakeClock } from "./helpers.js";

describe("monotonic clock", () => {
  it("wraps an injected monotonic source", () => {
    let t = 0;
    const clock = monotonicClock({ now: () => t });
    expect(clock.now()).toBe(0);
    t = 123.5;
    expect(clock.now()).toBe(123.5);
  });

  it("falls back to globalThis.performance", () => {
    const clock = monotonicClock();
    const a = clock.now();
    const b = clock.now();
    expect(b).toBeGreaterThanOrEqual(a);
  });

  it("rejects an environment without a monotonic source", () => {
    expect(() => monotonicClock({} as { now(): number })).toThrow(/monotonic/);
  });

  it("latency is immune to wall-clock adjustments", () => {
    // the clock counts its own ms; shifting Date-style wall time has no input
    const fake = new FakeClock();
    const state = new TrialState(
      { trialIndex: 0, stimulusId: "s", training: false },
      fake,
    );
    state.shown();
    fake.advance(250);
    expect(state.perceived()).toBe(250);
  });

  it("records an injected 1500 ms perceive delay within 50 ms", () => {
    const fake = new FakeClock();
    for (let trial = 0; trial < 20; trial += 1) {
      const state = new TrialState(
        { trialIndex: trial, stimulusId: `s-${trial}`, training: false },
        fake,
      );
      fake.advance(90);
      state.shown();
      // event dispatch and handler overhead modeled as a few ms of skew
      fake.advance(1500 + ((trial * 7) % 21) - 10);
      const latency = state.perceived();
      expect(Math.abs(latency - 1500)).toBeLessThanOrEqual(50);
      expect(latency).toBeGreaterThan(0);
    }
  });
});
