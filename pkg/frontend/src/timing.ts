/** Monotonic time source for latency measurement.
 *
 * Wall-clock time is never consulted, so a system clock adjustment in the
 * middle of a trial cannot corrupt the perceive latency.
 */

export interface MonotonicClock {
  now(): number;
}

export function monotonicClock(source?: { now(): number }): MonotonicClock {
  const perf =
    source ?? (globalThis as { performance?: { now(): number } }).performance;
  if (!perf || typeof perf.now !== "function") {
    throw new Error("no monotonic clock available in this environment");
  }
  return { now: () => perf.now() };
}
