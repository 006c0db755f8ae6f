import { FetchLike, HttpResponse } from "../src/api.js";
import { MonotonicClock } from "../src/timing.js";
import {
  ProgressPayload,
  ResponseRecord,
  SessionPayload,
  responseKey,
} from "../src/types.js";

export class FakeClock implements MonotonicClock {
  private t = 0;

  now(): number {
    return this.t;
  }

  advance(ms: number): void {
    this.t += ms;
  }
}

export function jsonResponse(status: number, payload: unknown): HttpResponse {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => payload,
  };
}

export interface MockServer {
  fetchFn: FetchLike;
  log: ResponseRecord[];
  session: SessionPayload;
  /** every Nth POST attempt dies on the wire before reaching the server */
  setFailEveryNth(n: number): void;
  /** test-trial indices recorded server-side whose ack then gets lost once */
  ackLossIndices: Set<number>;
  postAttempts(): number;
}

export function makeServer(nTrials: number, nTraining: number): MockServer {
  const trials = Array.from({ length: nTrials }, (_, i) => ({
    trial_index: i,
    stimulus_id: `e2-${String(i).padStart(3, "0")}`,
  }));
  const training = Array.from({ length: nTraining }, (_, s) => ({
    slot: s,
    stimulus_id: trials[(s * 7) % nTrials].stimulus_id,
  }));
  const session: SessionPayload = {
    schema_version: 1,
    session_id: "test",
    experiment_id: 2,
    choice_set: ["S", "X", "L", "T", "NONE", "UNDEFINABLE"],
    trials,
    training,
    trial_count: nTrials,
  };

  const log: ResponseRecord[] = [];
  const answered = new Set<string>();
  let failEveryNth = 0;
  let attempts = 0;
  const ackLossIndices = new Set<number>();

  const progress = (): ProgressPayload => {
    let next: number | null = null;
    for (const t of trials) {
      if (!answered.has(responseKey({ training: false, trial_index: t.trial_index }))) {
        next = t.trial_index;
        break;
      }
    }
    return {
      schema_version: 1,
      answered: [...answered].filter((k) => k.startsWith("false:")).length,
      total: nTrials,
      training_answered: [...answered].filter((k) => k.startsWith("true:")).length,
      training_total: nTraining,
      next_trial_index: next,
    };
  };

  const fetchFn: FetchLike = async (url, init) => {
    if (url.endsWith("/api/session")) {
      return jsonResponse(200, session);
    }
    if (url.endsWith("/api/progress")) {
      return jsonResponse(200, progress());
    }
    if (url.endsWith("/api/response") && init?.method === "POST") {
      attempts += 1;
      if (failEveryNth > 0 && attempts % failEveryNth === 0) {
        throw new TypeError("network down");
      }
      const record = JSON.parse(init.body ?? "{}") as ResponseRecord;
      if (record.schema_version !== 1) {
        return jsonResponse(400, { detail: "schema_version mismatch" });
      }
      if (!session.choice_set.includes(record.choice)) {
        return jsonResponse(400, { detail: "choice not in choice set" });
      }
      const key = responseKey(record);
      if (answered.has(key)) {
        return jsonResponse(409, { detail: "trial already answered" });
      }
      answered.add(key);
      log.push(record);
      if (!record.training && ackLossIndices.has(record.trial_index)) {
        ackLossIndices.delete(record.trial_index);
        throw new TypeError("connection reset while reading the response");
      }
      return jsonResponse(200, {
        schema_version: 1,
        recorded_trial_index: record.trial_index,
        training: record.training,
        next_trial_index: progress().next_trial_index,
        next_stimulus_id: null,
        remaining: nTrials - progress().answered,
      });
    }
    return jsonResponse(404, { detail: "not found" });
  };

  return {
    fetchFn,
    log,
    session,
    setFailEveryNth: (n) => {
      failEveryNth = n;
    },
    ackLossIndices,
    postAttempts: () => attempts,
  };
}
