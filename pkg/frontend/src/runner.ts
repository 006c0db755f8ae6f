/** Session orchestration, independent of the DOM.
 *
 * Runs the training slots, then a ready screen, then every test trial in
 * manifest order. Each trial walks the ready -> viewing -> selecting -> done
 * state machine, and its response is locally persisted before the next trial
 * starts; delivery happens in the background through the retry queue. On a
 * restart the runner skips trials the server has already acknowledged (via
 * the progress endpoint) and trials whose response is still persisted
 * locally, so no trial is ever asked or submitted twice.
 */

import { ApiClient } from "./api.js";
import { ChoiceOption, selectionLayout } from "./layouts.js";
import { ResponseQueue } from "./queue.js";
import { TrialRef, TrialState } from "./state.js";
import { MonotonicClock } from "./timing.js";
import { SCHEMA_VERSION, responseKey } from "./types.js";

export interface SubjectView {
  /** White ready screen between training and test; resolves on click. */
  showReadyScreen(): Promise<void>;
  /** Display the stimulus 1:1; resolve only once it is actually visible. */
  showStimulus(trial: TrialRef, imageUrl: string): Promise<void>;
  /** Resolves on the left-button perceive click. */
  awaitPerceiveClick(trial: TrialRef): Promise<void>;
  /** Selection screen (doubles as the convergence reset between trials). */
  awaitSelection(options: ChoiceOption[], trial: TrialRef): Promise<string>;
  sessionDone(summary: SessionSummary): void;
}

export interface SessionSummary {
  submitted: number;
  trainingRun: number;
}

export interface RunnerDeps {
  api: ApiClient;
  queue: ResponseQueue;
  view: SubjectView;
  clock: MonotonicClock;
}

export async function runSession(deps: RunnerDeps): Promise<SessionSummary> {
  const { api, queue, view, clock } = deps;
  const session = await api.getSession();
  const progress = await api.getProgress();
  const options = selectionLayout(session.experiment_id, session.choice_set);
  const locallyPending = new Set(queue.pendingKeys());

  const runTrial = async (ref: TrialRef): Promise<void> => {
    const state = new TrialState(ref, clock);
    await view.showStimulus(ref, api.stimulusUrl(ref.stimulusId));
    state.shown();
    await view.awaitPerceiveClick(ref);
    state.perceived();
    const label = await view.awaitSelection(options, ref);
    if (!session.choice_set.includes(label)) {
      throw new Error(`selected label ${label} is not in the session choice set`);
    }
    const outcome = state.chosen(label);
    await queue.enqueue({
      schema_version: SCHEMA_VERSION,
      trial_index: outcome.trialIndex,
      stimulus_id: outcome.stimulusId,
      choice: outcome.choice,
      perceived_time_ms: outcome.perceivedTimeMs,
      training: outcome.training,
    });
  };

  let trainingRun = 0;
  for (const slot of session.training) {
    if (slot.slot < progress.training_answered) {
      continue;
    }
    const ref: TrialRef = {
      trialIndex: slot.slot,
      stimulusId: slot.stimulus_id,
      training: true,
    };
    if (locallyPending.has(responseKey({ training: true, trial_index: ref.trialIndex }))) {
      continue;
    }
    await runTrial(ref);
    trainingRun += 1;
  }

  await view.showReadyScreen();

  const startIndex = progress.next_trial_index ?? Number.POSITIVE_INFINITY;
  let submitted = 0;
  for (const trial of session.trials) {
    if (trial.trial_index < startIndex) {
      continue;
    }
    if (
      locallyPending.has(responseKey({ training: false, trial_index: trial.trial_index }))
    ) {
      continue;
    }
    await runTrial({
      trialIndex: trial.trial_index,
      stimulusId: trial.stimulus_id,
      training: false,
    });
    submitted += 1;
  }

  await queue.drain();
  const summary: SessionSummary = { submitted, trainingRun };
  view.sessionDone(summary);
  return summary;
}
