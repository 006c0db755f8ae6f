/** Per-trial state machine: ready -> viewing -> selecting -> done.
 *
 * The onset timestamp is recorded exactly when the stimulus becomes visible
 * (the caller invokes shown() at that moment), the perceive latency is the
 * monotonic-clock difference at the perceive click, and a trial emits
 * exactly one response. Any out-of-order transition throws, so trials can
 * neither be skipped nor double-submitted.
 */

import { MonotonicClock } from "./timing.js";

export type Phase = "ready" | "viewing" | "selecting" | "done";

export class TrialStateError extends Error {}

export interface TrialRef {
  trialIndex: number;
  stimulusId: string;
  training: boolean;
}

export interface ChoiceOutcome {
  trialIndex: number;
  stimulusId: string;
  choice: string;
  perceivedTimeMs: number;
  training: boolean;
}

export class TrialState {
  private currentPhase: Phase = "ready";
  private onsetMs: number | null = null;
  private perceivedMs: number | null = null;

  constructor(
    readonly trial: TrialRef,
    private readonly clock: MonotonicClock,
  ) {}

  get phase(): Phase {
    return this.currentPhase;
  }

  /** The stimulus just became visible; records the onset timestamp. */
  shown(): void {
    if (this.currentPhase !== "ready") {
      throw new TrialStateError(`cannot show stimulus in phase ${this.currentPhase}`);
    }
    this.onsetMs = this.clock.now();
    this.currentPhase = "viewing";
  }

  /** Perceive click: viewing -> selecting. Returns the latency in ms. */
  perceived(): number {
    if (this.currentPhase !== "viewing" || this.onsetMs === null) {
      throw new TrialStateError(`cannot record perception in phase ${this.currentPhase}`);
    }
    // the server rejects nonpositive latencies; a click within one clock
    // tick of the onset clamps to a microsecond instead of zero
    this.perceivedMs = Math.max(this.clock.now() - this.onsetMs, 1e-3);
    this.currentPhase = "selecting";
    return this.perceivedMs;
  }

  /** Selection click: selecting -> done. A trial yields exactly one outcome. */
  chosen(choice: string): ChoiceOutcome {
    if (this.currentPhase !== "selecting" || this.perceivedMs === null) {
      throw new TrialStateError(`cannot choose in phase ${this.currentPhase}`);
    }
    this.currentPhase = "done";
    return {
      trialIndex: this.trial.trialIndex,
      stimulusId: this.trial.stimulusId,
      choice,
      perceivedTimeMs: this.perceivedMs,
      training: this.trial.training,
    };
  }
}
