"""Local HTTP service for running a subject session.

Serves the session manifest (without truth labels), stimulus images, and a
progress counter, and ingests responses into an append-only JSON-lines log.
Every acknowledged response is flushed and fsynced before the reply is sent;
duplicate submissions for an already-answered trial return 409. A static UI
bundle directory is mounted at the root when available.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .experiment_kit import TrialRecord, UNDEFINABLE, load_manifest
from . import storage

__all__ = ["create_app"]


class TrialOut(BaseModel):
    trial_index: int
    stimulus_id: str


class TrainingOut(BaseModel):
    slot: int
    stimulus_id: str


class SessionOut(BaseModel):
    schema_version: int = storage.SCHEMA_VERSION
    session_id: str
    experiment_id: int
    choice_set: list[str]
    trials: list[TrialOut]
    training: list[TrainingOut]
    trial_count: int


class ResponseIn(BaseModel):
    schema_version: int = Field(default=storage.SCHEMA_VERSION)
    trial_index: int = Field(ge=0)
    stimulus_id: str
    choice: str
    perceived_time_ms: float = Field(gt=0)
    training: bool = False


class ResponseOut(BaseModel):
    schema_version: int = storage.SCHEMA_VERSION
    recorded_trial_index: int
    training: bool
    next_trial_index: int | None
    next_stimulus_id: str | None
    remaining: int


class ProgressOut(BaseModel):
    schema_version: int = storage.SCHEMA_VERSION
    answered: int
    total: int
    training_answered: int
    training_total: int
    next_trial_index: int | None


_FALLBACK_INDEX = """<!doctype html>
<title>session service</title>
<h1>Session service is running</h1>
<p>No UI bundle is mounted. API endpoints:</p>
<ul>
<li>GET /api/session</li>
<li>GET /api/stimulus/{id}</li>
<li>POST /api/response</li>
<li>GET /api/progress</li>
</ul>
"""


def create_app(
    session_dir,
    log_path=None,
    session_id: str = "default",
    ui_dir=None,
) -> FastAPI:
    """Build the service app for one session directory.

    log_path defaults to session_dir/responses.jsonl. Responses already in
    the log (for this session_id) are treated as answered, so restarting the
    service never re-accepts an acknowledged trial.
    """
    session_path = Path(session_dir)
    manifest = load_manifest(session_path)
    stim_dir = session_path / "stimuli"
    log_file = Path(log_path) if log_path is not None else session_path / "responses.jsonl"

    trials_by_index = {t.trial_index: t for t in manifest.trials}
    truth_by_stimulus = manifest.truth_by_stimulus()
    training_slots = {slot: sid for slot, sid in enumerate(manifest.training_ids)}
    known_ids = set(manifest.stimulus_ids()) | set(manifest.training_ids)

    lock = threading.Lock()
    answered: set = set()
    if log_file.exists():
        for payload in storage.read_jsonl(log_file):
            rec = TrialRecord.from_dict(payload)
            if rec.session_id == session_id:
                answered.add((rec.training, rec.trial_index))

    def next_unanswered():
        for trial in manifest.trials:
            if (False, trial.trial_index) not in answered:
                return trial
        return None

    app = FastAPI(title="session service")

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/api/session", response_model=SessionOut)
    def get_session():
        return SessionOut(
            session_id=session_id,
            experiment_id=manifest.experiment_id,
            choice_set=list(manifest.choice_set),
            trials=[
                TrialOut(trial_index=t.trial_index, stimulus_id=t.stimulus_id)
                for t in manifest.trials
            ],
            training=[
                TrainingOut(slot=slot, stimulus_id=sid)
                for slot, sid in sorted(training_slots.items())
            ],
            trial_count=manifest.trial_count,
        )

    @app.get("/api/stimulus/{stimulus_id}")
    def get_stimulus(stimulus_id: str):
        if stimulus_id not in known_ids:
            return JSONResponse(status_code=404, content={"detail": "unknown stimulus"})
        path = stim_dir / f"{stimulus_id}.png"
        if not path.exists():
            return JSONResponse(status_code=404, content={"detail": "stimulus file missing"})
        return FileResponse(path, media_type="image/png")

    @app.post("/api/response", response_model=ResponseOut)
    def post_response(body: ResponseIn):
        if body.schema_version != storage.SCHEMA_VERSION:
            return JSONResponse(status_code=400, content={"detail": "schema_version mismatch"})
        if body.training:
            expected = training_slots.get(body.trial_index)
            if expected is None:
                return JSONResponse(status_code=400, content={"detail": "unknown training slot"})
            if expected != body.stimulus_id:
                return JSONResponse(
                    status_code=400, content={"detail": "stimulus does not match training slot"}
                )
            truth = truth_by_stimulus[body.stimulus_id]
        else:
            trial = trials_by_index.get(body.trial_index)
            if trial is None:
                return JSONResponse(status_code=400, content={"detail": "unknown trial index"})
            if trial.stimulus_id != body.stimulus_id:
                return JSONResponse(
                    status_code=400, content={"detail": "stimulus does not match trial"}
                )
            truth = trial.truth
        if body.choice not in manifest.choice_set:
            return JSONResponse(status_code=400, content={"detail": "choice not in choice set"})

        record = TrialRecord(
            trial_index=body.trial_index,
            stimulus_id=body.stimulus_id,
            choice=body.choice,
            perceived_time_ms=body.perceived_time_ms,
            correct=body.choice == truth,
            undefinable=body.choice == UNDEFINABLE,
            training=body.training,
            session_id=session_id,
        )
        with lock:
            key = (record.training, record.trial_index)
            if key in answered:
                return JSONResponse(status_code=409, content={"detail": "trial already answered"})
            storage.append_jsonl(log_file, record.as_dict())
            answered.add(key)
            nxt = next_unanswered()
            remaining = sum(
                1 for t in manifest.trials if (False, t.trial_index) not in answered
            )
        return ResponseOut(
            recorded_trial_index=record.trial_index,
            training=record.training,
            next_trial_index=None if nxt is None else nxt.trial_index,
            next_stimulus_id=None if nxt is None else nxt.stimulus_id,
            remaining=remaining,
        )

    @app.get("/api/progress", response_model=ProgressOut)
    def get_progress():
        with lock:
            test_answered = sum(1 for training, _ in answered if not training)
            train_answered = sum(1 for training, _ in answered if training)
            nxt = next_unanswered()
        return ProgressOut(
            answered=test_answered,
            total=manifest.trial_count,
            training_answered=train_answered,
            training_total=len(training_slots),
            next_trial_index=None if nxt is None else nxt.trial_index,
        )

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return _FALLBACK_INDEX

    return app
