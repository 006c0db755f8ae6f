"""Command-line interface.

Subcommands: gen (stimuli and experiment inventories), analyze (matching
surfaces and the curvature scale law), serve (the local session service),
score (response logs to report CSVs), and bot (a scripted HTTP client that
plays a session against a running service).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .depth_fields import SURFACE_KINDS
from .errors import SirdsError
from .experiment_kit import (
    SessionManifest,
    TrialRecord,
    build_depth_field,
    build_inventory,
    load_manifest,
    load_stimulus_file,
    report,
    score,
)
from .match_model import (
    MatchKernel,
    basin_slice,
    half_width_at_half_height,
    match_surface,
    planar_profile,
    ridge_sharpness,
)
from .sirds_render import ViewGeometry, render, verify_links
from .spectral_noise import SpectrumSpec, curvature_scale_law, generate_patch
from . import storage

__all__ = ["main", "run_bot"]


def _geometry_from_json(text: str | None) -> ViewGeometry:
    if not text:
        return ViewGeometry()
    return ViewGeometry(**json.loads(text))


def _beta_arg(value: str) -> float:
    beta = float(value)
    if not (0.0 <= beta < 3.0):
        raise argparse.ArgumentTypeError(f"beta must be in [0, 3), got {value}")
    return beta


def _rows_arg(value: str):
    lo, _, hi = value.partition(":")
    try:
        return int(lo), int(hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"rows must be LO:HI, got {value!r}") from exc


def _window_arg(value: str):
    start, _, width = value.partition(":")
    try:
        return int(start), int(width)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"window must be START:WIDTH, got {value!r}") from exc


def _sigmas_arg(value: str):
    try:
        return [float(v) for v in value.split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError("sigmas must be comma-separated numbers") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sirdskit")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate stimuli or a full experiment inventory")
    gen.add_argument("--experiment", type=int, choices=(1, 2, 3))
    gen.add_argument("--beta", type=_beta_arg)
    gen.add_argument("--surface", choices=SURFACE_KINDS)
    gen.add_argument("--letter")
    gen.add_argument("--letter-size", type=int, default=240)
    gen.add_argument("--ratio", default="1/6")
    gen.add_argument("--offset", type=int, default=0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--geometry", help="JSON geometry overrides")
    gen.add_argument("--links", action="store_true", help="write link sidecars")
    gen.add_argument("--out", required=True)

    analyze = sub.add_parser("analyze", help="matching-function and spectral analyses")
    analyze_sub = analyze.add_subparsers(dest="analysis", required=True)

    match = analyze_sub.add_parser("match", help="matching surface and basin slice")
    match.add_argument("--stimuli", nargs="+", required=True, help="stimulus PNG paths")
    match.add_argument("--rows", type=_rows_arg, default=(496, 528))
    match.add_argument("--window", type=_window_arg)
    match.add_argument("--out", required=True)

    law = analyze_sub.add_parser("scale-law", help="autocorrelation curvature vs filter scale")
    law.add_argument("--beta", type=_beta_arg, required=True)
    law.add_argument("--sigmas", type=_sigmas_arg, default=[2.0, 4.0, 8.0, 16.0])
    law.add_argument("--seeds", type=int, default=10)
    law.add_argument("--out")

    serve = sub.add_parser("serve", help="serve a session over HTTP")
    serve.add_argument("--session", required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8712)
    serve.add_argument("--log", help="response log path (default session/responses.jsonl)")
    serve.add_argument("--session-id", default="default")
    serve.add_argument("--ui", help="static UI bundle directory")

    score_p = sub.add_parser("score", help="score response logs into report CSVs")
    score_p.add_argument("--session", required=True)
    score_p.add_argument("--responses", nargs="*", help="JSONL paths (default session log)")
    score_p.add_argument("--rt-cutoff-ms", type=float, default=10000.0)
    score_p.add_argument("--out", required=True)

    bot = sub.add_parser("bot", help="scripted session client for a running service")
    bot.add_argument("--url", required=True)
    bot.add_argument("--session", required=True, help="session directory (for truth labels)")
    bot.add_argument("--rt-ms", type=float, default=2000.0)
    bot.add_argument("--outliers", type=int, default=0)
    bot.add_argument("--outlier-rt-ms", type=float, default=76000.0)
    bot.add_argument("--skip-training", action="store_true")

    return parser


def cmd_gen(args) -> int:
    geom = _geometry_from_json(args.geometry)
    out = Path(args.out)
    if args.experiment is not None:
        manifest = build_inventory(
            args.experiment, args.seed, out, geom=geom, write_links=args.links
        )
        print(f"wrote {manifest.trial_count} stimuli to {out}")
        return 0
    if args.beta is None or args.surface is None:
        raise SirdsError("gen needs either --experiment or both --beta and --surface")
    cond = {"surface": args.surface, "beta": args.beta, "letter": None}
    if args.letter:
        cond.update(
            {"letter": args.letter, "size": args.letter_size,
             "depth_ratio": args.ratio, "offset": args.offset}
        )
    depth = build_depth_field(cond, geom)
    spec = SpectrumSpec(beta=args.beta, size=128, seed=args.seed)
    patch = generate_patch(spec)
    stim = render(depth, patch, geom)
    ok, violations = verify_links(stim)
    if not ok:
        raise SirdsError(f"link verification failed: {violations[:3]}")
    out.mkdir(parents=True, exist_ok=True)
    storage.save_gray_png(out / "stimulus.png", stim.image)
    storage.save_json(out / "stimulus.json", stim.provenance)
    storage.save_links(out / "stimulus.links", stim.links)
    storage.save_depth_png(out / "depth.png", depth.values)
    storage.save_json(out / "depth.json", {"provenance": depth.provenance})
    storage.save_patch_artifacts(out / "patch", patch)
    print(f"wrote stimulus artifacts to {out}")
    return 0


def cmd_analyze_match(args) -> int:
    stimuli = [load_stimulus_file(path, with_links="auto") for path in args.stimuli]
    surface = match_surface(stimuli, args.rows, window=args.window)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    grid = surface.grid
    lo, hi = grid.min(), grid.max()
    scaled = (grid - lo) / (hi - lo) if hi > lo else np.zeros_like(grid)
    png8 = np.floor(scaled * 255.0 + 0.5).astype(np.uint8)
    storage.save_gray_png(out / "match_surface.png", png8)

    disp, vals = basin_slice(surface)
    storage.write_csv(
        out / "basin_slice.csv",
        ["displacement_px", "value"],
        [[int(d), f"{v:.9f}"] for d, v in zip(disp, vals)],
    )
    pdisp, pvals = planar_profile(surface)
    half_width = half_width_at_half_height(pdisp, pvals)
    sharpness = [ridge_sharpness(s) for s in stimuli]
    storage.save_json(
        out / "match_summary.json",
        {
            "window": [surface.x_start, surface.size],
            "rows": list(args.rows),
            "stimuli": [str(p) for p in args.stimuli],
            "planar_half_width_px": half_width,
            "ridge_sharpness": sharpness,
        },
    )
    print(f"wrote match surface, basin slice, and summary to {out}")
    return 0


def cmd_analyze_scale_law(args) -> int:
    exponent = curvature_scale_law(args.beta, args.sigmas, range(args.seeds))
    payload = {
        "beta": args.beta,
        "sigmas": list(args.sigmas),
        "seeds": args.seeds,
        "fitted_exponent": exponent,
        "expected_exponent": args.beta - 1.0,
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        storage.save_json(out / "scale_law.json", payload)
    print(json.dumps(payload, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        args.session, log_path=args.log, session_id=args.session_id, ui_dir=args.ui
    )
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except OSError as exc:
        raise SirdsError(f"cannot bind {args.host}:{args.port}: {exc}") from exc
    return 0


def cmd_score(args) -> int:
    session = Path(args.session)
    manifest = load_manifest(session)
    paths = args.responses or [session / "responses.jsonl"]
    records = []
    for path in paths:
        records.extend(TrialRecord.from_dict(p) for p in storage.read_jsonl(path))
    stats = score(manifest, records, rt_outlier_cutoff_ms=args.rt_cutoff_ms)
    written = report(stats, args.out)
    print(
        f"scored {stats.n_records} records, {stats.outliers_excluded} outliers excluded; "
        f"wrote {len(written)} files to {args.out}"
    )
    return 0


def run_bot(
    client,
    manifest: SessionManifest,
    rt_ms: float = 2000.0,
    outlier_indices=(),
    outlier_rt_ms: float = 76000.0,
    include_training: bool = True,
    fetch_stimuli: bool = True,
) -> int:
    """Play a full session through the HTTP API, answering with the truth.

    client is any object with httpx-style get/post methods (an httpx.Client
    or a test client). Truth labels come from the manifest, the way a
    scripted lab client reads them from the session directory; the API never
    exposes them. Returns the number of non-training responses submitted.
    """
    session = client.get("/api/session").json()
    if session["trial_count"] != manifest.trial_count:
        raise SirdsError("served session does not match the local manifest")
    truth = manifest.truth_by_stimulus()
    outlier_set = set(outlier_indices)

    if include_training:
        for slot, sid in enumerate(manifest.training_ids):
            if fetch_stimuli:
                client.get(f"/api/stimulus/{sid}")
            resp = client.post(
                "/api/response",
                json={
                    "schema_version": storage.SCHEMA_VERSION,
                    "trial_index": slot,
                    "stimulus_id": sid,
                    "choice": truth[sid],
                    "perceived_time_ms": rt_ms,
                    "training": True,
                },
            )
            if resp.status_code != 200:
                raise SirdsError(f"training POST failed: {resp.status_code} {resp.text}")

    submitted = 0
    for trial in manifest.trials:
        if fetch_stimuli:
            client.get(f"/api/stimulus/{trial.stimulus_id}")
        rt = outlier_rt_ms if trial.trial_index in outlier_set else rt_ms
        resp = client.post(
            "/api/response",
            json={
                "schema_version": storage.SCHEMA_VERSION,
                "trial_index": trial.trial_index,
                "stimulus_id": trial.stimulus_id,
                "choice": truth[trial.stimulus_id],
                "perceived_time_ms": rt,
                "training": False,
            },
        )
        if resp.status_code != 200:
            raise SirdsError(
                f"POST failed at trial {trial.trial_index}: "
                f"{resp.status_code} {resp.text}"
            )
        submitted += 1
    return submitted


def cmd_bot(args) -> int:
    import httpx

    manifest = load_manifest(args.session)
    rng = np.random.default_rng(0)
    outliers = (
        rng.choice(manifest.trial_count, size=args.outliers, replace=False)
        if args.outliers
        else ()
    )
    with httpx.Client(base_url=args.url, timeout=30.0) as client:
        n = run_bot(
            client,
            manifest,
            rt_ms=args.rt_ms,
            outlier_indices=outliers,
            outlier_rt_ms=args.outlier_rt_ms,
            include_training=not args.skip_training,
        )
    print(f"submitted {n} responses")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "analyze":
            if args.analysis == "match":
                return cmd_analyze_match(args)
            return cmd_analyze_scale_law(args)
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "score":
            return cmd_score(args)
        if args.command == "bot":
            return cmd_bot(args)
        parser.error(f"unknown command {args.command!r}")
    except SirdsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
