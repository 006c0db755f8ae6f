/** Wire types of the session service JSON API. */

export const SCHEMA_VERSION = 1;

export interface SessionTrial {
  trial_index: number;
  stimulus_id: string;
}

export interface TrainingSlot {
  slot: number;
  stimulus_id: string;
}

export interface SessionPayload {
  schema_version: number;
  session_id: string;
  experiment_id: number;
  choice_set: string[];
  trials: SessionTrial[];
  training: TrainingSlot[];
  trial_count: number;
}

export interface ProgressPayload {
  schema_version: number;
  answered: number;
  total: number;
  training_answered: number;
  training_total: number;
  next_trial_index: number | null;
}

export interface ResponseRecord {
  schema_version: number;
  trial_index: number;
  stimulus_id: string;
  choice: string;
  perceived_time_ms: number;
  training: boolean;
}

/** Identity of a response for dedup purposes: one per (training, trial). */
export function responseKey(record: { training: boolean; trial_index: number }): string {
  return `${record.training}:${record.trial_index}`;
}
