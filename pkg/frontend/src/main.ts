/** DOM glue: fullscreen handling, 1:1 stimulus display, selection screens.
 *
 * Stimulus pixels are shown unscaled because the depth encoding lives in
 * exact pixel separations; if the viewport cannot fit the stimulus the UI
 * blocks with a notice instead of scaling. All interaction is mouse-only.
 */

import { ApiClient, FatalApiError } from "./api.js";
import { ChoiceOption } from "./layouts.js";
import { ResponseQueue, WebStorageStore } from "./queue.js";
import { runSession, SessionSummary, SubjectView } from "./runner.js";
import { TrialRef } from "./state.js";
import { monotonicClock } from "./timing.js";

const MIN_WIDTH = 1536;
const MIN_HEIGHT = 1024;
const PENDING_KEY = "session-ui:pending";

function screen(root: HTMLElement, className: string): HTMLDivElement {
  root.replaceChildren();
  const div = document.createElement("div");
  div.className = `screen ${className}`;
  root.appendChild(div);
  return div;
}

function notice(root: HTMLElement, title: string, body: string): void {
  const div = screen(root, "notice");
  const h = document.createElement("h1");
  h.textContent = title;
  const p = document.createElement("p");
  p.textContent = body;
  div.append(h, p);
}

function awaitLeftMouseDown(target: HTMLElement): Promise<void> {
  return new Promise((resolve) => {
    const handler = (ev: MouseEvent) => {
      if (ev.button !== 0) {
        return;
      }
      target.removeEventListener("mousedown", handler);
      resolve();
    };
    target.addEventListener("mousedown", handler);
  });
}

class DomView implements SubjectView {
  constructor(private readonly root: HTMLElement) {}

  async showReadyScreen(): Promise<void> {
    const div = screen(this.root, "ready");
    const p = document.createElement("p");
    p.textContent = "Press the left mouse button when ready.";
    div.appendChild(p);
    await awaitLeftMouseDown(div);
  }

  async showStimulus(trial: TrialRef, imageUrl: string): Promise<void> {
    const img = new Image();
    img.src = imageUrl;
    await img.decode();
    img.width = img.naturalWidth;
    img.height = img.naturalHeight;
    img.className = "stimulus";
    img.draggable = false;
    const div = screen(this.root, "viewing");
    if (trial.training) {
      const badge = document.createElement("div");
      badge.className = "badge";
      badge.textContent = "training";
      div.appendChild(badge);
    }
    div.appendChild(img);
    // onset is taken by the caller right after this resolves, so wait for
    // the frame in which the image is actually painted
    await new Promise<void>((resolve) =>
      requestAnimationFrame(() => requestAnimationFrame(() => resolve())),
    );
  }

  awaitPerceiveClick(): Promise<void> {
    return awaitLeftMouseDown(this.root);
  }

  awaitSelection(options: ChoiceOption[], trial: TrialRef): Promise<string> {
    const div = screen(this.root, "selecting");
    const h = document.createElement("h1");
    h.textContent = "What did you see?";
    div.appendChild(h);
    if (trial.training) {
      const badge = document.createElement("div");
      badge.className = "badge";
      badge.textContent = "training";
      div.appendChild(badge);
    }
    const grid = document.createElement("div");
    grid.className = "choices";
    div.appendChild(grid);
    return new Promise((resolve) => {
      for (const option of options) {
        const button = document.createElement("button");
        button.type = "button";
        button.className = `choice ${option.kind}`;
        button.textContent = option.display;
        button.addEventListener("mousedown", (ev) => {
          if (ev.button !== 0) {
            return;
          }
          resolve(option.label);
        });
        grid.appendChild(button);
      }
    });
  }

  sessionDone(summary: SessionSummary): void {
    notice(
      this.root,
      "Session complete",
      `${summary.submitted} responses recorded. Thank you.`,
    );
  }
}

async function runFrom(root: HTMLElement): Promise<void> {
  if (window.innerWidth < MIN_WIDTH || window.innerHeight < MIN_HEIGHT) {
    notice(
      root,
      "Screen too small",
      `Stimuli are shown pixel for pixel and need at least ${MIN_WIDTH} x ${MIN_HEIGHT}; ` +
        `this viewport is ${window.innerWidth} x ${window.innerHeight}. ` +
        "The session cannot start on this display.",
    );
    return;
  }
  const api = new ApiClient(window.fetch.bind(window));
  const queue = new ResponseQueue({
    post: (record) => api.postResponse(record),
    store: new WebStorageStore(window.localStorage, PENDING_KEY),
    onFatal: (err) =>
      notice(root, "Submission rejected", `A response was rejected: ${err.message}`),
  });
  try {
    await runSession({ api, queue, view: new DomView(root), clock: monotonicClock() });
  } catch (err) {
    const detail = err instanceof FatalApiError ? err.message : String(err);
    notice(root, "Session error", detail);
  }
}

function start(): void {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const div = screen(root, "start");
  const h = document.createElement("h1");
  h.textContent = "Depth perception session";
  const p = document.createElement("p");
  p.textContent =
    "The session runs in fullscreen. Keep your hand on the mouse; every step is a left click.";
  const button = document.createElement("button");
  button.type = "button";
  button.className = "begin";
  button.textContent = "Begin";
  button.addEventListener("click", () => {
    document.documentElement
      .requestFullscreen()
      .then(() => runFrom(root))
      .catch(() =>
        notice(
          root,
          "Fullscreen required",
          "The session needs fullscreen to show stimuli pixel for pixel. " +
            "Allow fullscreen and reload.",
        ),
      );
  });
  div.append(h, p, button);
}

start();
