import { describe, expect, it } from "vitest";

import { TrialState, TrialStateError } from "../src/state.js";
import { FakeClock } from "./helpers.js";

const REF = { trialIndex: 3, stimulusId: "e2-003", training: false };

describe("trial state machine", () => {
  it("walks ready -> viewing -> selecting -> done and measures latency", () => {
    const clock = new FakeClock();
    const state = new TrialState(REF, clock);
    expect(state.phase).toBe("ready");

    clock.advance(100);
    state.shown();
    expect(state.phase).toBe("viewing");

    clock.advance(1500);
    const latency = state.perceived();
    expect(latency).toBe(1500);
    expect(state.phase).toBe("selecting");

    const outcome = state.chosen("X");
    expect(state.phase).toBe("done");
    expect(outcome).toEqual({
      trialIndex: 3,
      stimulusId: "e2-003",
      choice: "X",
      perceivedTimeMs: 1500,
      training: false,
    });
  });

  it("latency excludes time before the stimulus is visible", () => {
    const clock = new FakeClock();
    const state = new TrialState(REF, clock);
    clock.advance(5000);
    state.shown();
    clock.advance(42);
    expect(state.perceived()).toBe(42);
  });

  it("clamps a same-tick click to a positive latency", () => {
    const clock = new FakeClock();
    const state = new TrialState(REF, clock);
    state.shown();
    expect(state.perceived()).toBeGreaterThan(0);
  });

  it("cannot perceive before the stimulus is shown", () => {
    const state = new TrialState(REF, new FakeClock());
    expect(() => state.perceived()).toThrow(TrialStateError);
  });

  it("cannot choose before perceiving", () => {
    const state = new TrialState(REF, new FakeClock());
    state.shown();
    expect(() => state.chosen("X")).toThrow(TrialStateError);
  });

  it("cannot show twice", () => {
    const state = new TrialState(REF, new FakeClock());
    state.shown();
    expect(() => state.shown()).toThrow(TrialStateError);
  });

  it("emits exactly one response", () => {
    const clock = new FakeClock();
    const state = new TrialState(REF, clock);
    state.shown();
    clock.advance(10);
    state.perceived();
    state.chosen("X");
    expect(() => state.chosen("X")).toThrow(TrialStateError);
    expect(() => state.perceived()).toThrow(TrialStateError);
  });
});
