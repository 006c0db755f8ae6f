/** HTTP client for the session service.
 *
 * Errors are split into two classes so the caller can decide what to do:
 * TransientNetworkError covers anything worth retrying (connection failures,
 * timeouts, 5xx), FatalApiError covers responses that a retry cannot fix
 * (validation failures, version mismatches). A 409 on response submission is
 * not an error at all: the server already holds the record, which is exactly
 * the state a retransmission wants to reach.
 */

import {
  ProgressPayload,
  ResponseRecord,
  SCHEMA_VERSION,
  SessionPayload,
} from "./types.js";

export interface HttpResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<HttpResponse>;

export class TransientNetworkError extends Error {}

export class FatalApiError extends Error {
  constructor(
    message: string,
    readonly status?: number,
  ) {
    super(message);
  }
}

export type PostOutcome = "accepted" | "duplicate";

function isTransientStatus(status: number): boolean {
  return status === 408 || status === 425 || status === 429 || status >= 500;
}

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike,
    private readonly baseUrl: string = "",
  ) {}

  stimulusUrl(stimulusId: string): string {
    return `${this.baseUrl}/api/stimulus/${stimulusId}`;
  }

  private async getJson(path: string): Promise<unknown> {
    let res: HttpResponse;
    try {
      res = await this.fetchFn(this.baseUrl + path);
    } catch (err) {
      throw new TransientNetworkError(`GET ${path}: ${String(err)}`);
    }
    if (!res.ok) {
      if (isTransientStatus(res.status)) {
        throw new TransientNetworkError(`GET ${path}: status ${res.status}`);
      }
      throw new FatalApiError(`GET ${path} failed with ${res.status}`, res.status);
    }
    return res.json();
  }

  async getSession(): Promise<SessionPayload> {
    const payload = (await this.getJson("/api/session")) as SessionPayload;
    if (payload.schema_version !== SCHEMA_VERSION) {
      throw new FatalApiError(
        `session schema_version ${payload.schema_version}, expected ${SCHEMA_VERSION}`,
      );
    }
    return payload;
  }

  async getProgress(): Promise<ProgressPayload> {
    const payload = (await this.getJson("/api/progress")) as ProgressPayload;
    if (payload.schema_version !== SCHEMA_VERSION) {
      throw new FatalApiError(
        `progress schema_version ${payload.schema_version}, expected ${SCHEMA_VERSION}`,
      );
    }
    return payload;
  }

  async postResponse(record: ResponseRecord): Promise<PostOutcome> {
    let res: HttpResponse;
    try {
      res = await this.fetchFn(`${this.baseUrl}/api/response`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(record),
      });
    } catch (err) {
      throw new TransientNetworkError(`POST /api/response: ${String(err)}`);
    }
    if (res.ok) {
      return "accepted";
    }
    if (res.status === 409) {
      return "duplicate";
    }
    if (isTransientStatus(res.status)) {
      throw new TransientNetworkError(`POST /api/response: status ${res.status}`);
    }
    let detail = "";
    try {
      detail = JSON.stringify(await res.json());
    } catch {
      detail = "(no detail)";
    }
    throw new FatalApiError(
      `response rejected with ${res.status}: ${detail}`,
      res.status,
    );
  }
}
