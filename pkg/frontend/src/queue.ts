/** FIFO response queue with local persistence and stop-and-wait retry.
 *
 * enqueue() persists the record before it resolves, so the UI may advance to
 * the next trial knowing the response can no longer be lost. A single
 * flusher drains the queue in order and never moves past a record the server
 * has not acknowledged; transient failures back off and retry forever, a
 * "duplicate" outcome counts as delivered (the server already has the
 * record), and a fatal rejection stops the queue and surfaces the error.
 */

import { PostOutcome, TransientNetworkError } from "./api.js";
import { ResponseRecord, responseKey } from "./types.js";

export interface PendingStore {
  load(): ResponseRecord[];
  save(records: ResponseRecord[]): void;
}

export class MemoryStore implements PendingStore {
  private records: ResponseRecord[] = [];

  load(): ResponseRecord[] {
    return this.records.map((r) => ({ ...r }));
  }

  save(records: ResponseRecord[]): void {
    this.records = records.map((r) => ({ ...r }));
  }
}

interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export class WebStorageStore implements PendingStore {
  constructor(
    private readonly backing: StorageLike,
    private readonly key: string,
  ) {}

  load(): ResponseRecord[] {
    const raw = this.backing.getItem(this.key);
    if (!raw) {
      return [];
    }
    try {
      const parsed = JSON.parse(raw);
      return Array.isArray(parsed) ? (parsed as ResponseRecord[]) : [];
    } catch {
      return [];
    }
  }

  save(records: ResponseRecord[]): void {
    this.backing.setItem(this.key, JSON.stringify(records));
  }
}

export interface QueueDeps {
  post(record: ResponseRecord): Promise<PostOutcome>;
  store: PendingStore;
  sleep?: (ms: number) => Promise<void>;
  baseBackoffMs?: number;
  maxBackoffMs?: number;
  onFatal?: (err: Error) => void;
}

interface Waiter {
  resolve: () => void;
  reject: (err: Error) => void;
}

export class ResponseQueue {
  private pending: ResponseRecord[];
  private flushing = false;
  private fatal: Error | null = null;
  private waiters: Waiter[] = [];

  constructor(private readonly deps: QueueDeps) {
    this.pending = deps.store.load();
  }

  get size(): number {
    return this.pending.length;
  }

  /** Keys of locally persisted responses not yet acknowledged. */
  pendingKeys(): string[] {
    return this.pending.map(responseKey);
  }

  /** Persist the record locally, then start delivering in the background. */
  async enqueue(record: ResponseRecord): Promise<void> {
    if (this.fatal) {
      throw this.fatal;
    }
    this.pending.push(record);
    this.deps.store.save([...this.pending]);
    void this.flush();
  }

  /** Resolves once every persisted record is acknowledged by the server. */
  async drain(): Promise<void> {
    if (this.fatal) {
      throw this.fatal;
    }
    if (this.pending.length === 0 && !this.flushing) {
      return;
    }
    void this.flush();
    await new Promise<void>((resolve, reject) => {
      this.waiters.push({ resolve, reject });
    });
  }

  private async flush(): Promise<void> {
    if (this.flushing || this.fatal) {
      return;
    }
    this.flushing = true;
    const sleep =
      this.deps.sleep ?? ((ms: number) => new Promise<void>((r) => setTimeout(r, ms)));
    const base = this.deps.baseBackoffMs ?? 250;
    const cap = this.deps.maxBackoffMs ?? 5000;
    try {
      while (this.pending.length > 0) {
        const head = this.pending[0];
        let backoff = base;
        for (;;) {
          try {
            await this.deps.post(head);
            break;
          } catch (err) {
            if (err instanceof TransientNetworkError) {
              await sleep(backoff);
              backoff = Math.min(backoff * 2, cap);
              continue;
            }
            throw err;
          }
        }
        this.pending.shift();
        this.deps.store.save([...this.pending]);
      }
      this.flushing = false;
      for (const waiter of this.waiters.splice(0)) {
        waiter.resolve();
      }
    } catch (err) {
      this.flushing = false;
      this.fatal = err instanceof Error ? err : new Error(String(err));
      this.deps.onFatal?.(this.fatal);
      for (const waiter of this.waiters.splice(0)) {
        waiter.reject(this.fatal);
      }
    }
  }
}
