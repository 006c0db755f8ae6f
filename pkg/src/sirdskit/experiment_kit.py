"""Experiment inventories, session manifests, scoring, and significance tests.

Three experiments are supported:

1. Surface recognition: 140 trials, 4 surfaces x 5 noise exponents x 7
   repeats; the subject names the hidden surface.
2. Letter recognition: 125 trials, letters S, X, L, T or none, x 5 noise
   exponents x 5 repeats; letters are 240 px at depth ratio 1/6 on an
   ellipsoid background.
3. Identification limits: 180 trials, letters P or B x 5 sizes x 3 depth
   ratios x 3 noise exponents x 2 repeats, on an ellipsoid background.

Every stimulus gets a fresh noise seed derived deterministically from the
master seed; trial order is a seeded permutation and the 10 training trials
are drawn from the same stimulus pool.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats as _scipy_stats

from .depth_fields import DepthField, GlyphSpec, embed_glyph, make_surface, smooth5
from .errors import DataError, DegenerateInputError, ParameterError
from .sirds_render import ViewGeometry, render, verify_links
from .spectral_noise import SpectrumSpec, generate_patch
from . import storage

__all__ = [
    "UNDEFINABLE",
    "EXPERIMENT_BETAS",
    "SessionManifest",
    "TrialRecord",
    "StatsReport",
    "TTestResult",
    "build_conditions",
    "build_depth_field",
    "build_inventory",
    "score",
    "t_test_one_tailed",
    "report",
]

UNDEFINABLE = "UNDEFINABLE"

EXP1_SURFACES = ("egg_crate", "diagonal_sine", "ellipsoid", "mexican_hat")
EXP2_LETTERS = ("S", "X", "L", "T", "NONE")
EXP3_LETTERS = ("P", "B")
EXP3_SIZES = (20, 40, 60, 80, 100)
EXP3_RATIOS = ("1/5", "1/6", "1/7")

EXPERIMENT_BETAS = {
    1: (0.0, 0.5, 1.0, 1.5, 2.0),
    2: (0.0, 0.5, 1.0, 1.5, 2.0),
    3: (0.0, 0.5, 1.0),
}

CHOICE_SETS = {
    1: list(EXP1_SURFACES) + [UNDEFINABLE],
    2: list(EXP2_LETTERS) + [UNDEFINABLE],
    3: list(EXP3_LETTERS) + [UNDEFINABLE],
}

TRAINING_COUNT = 10
PATCH_SIZE = 128
LETTER_SIZE_EXP2 = 240
OFFSET_RANGE = 400


@dataclass(frozen=True)
class Trial:
    trial_index: int
    stimulus_id: str
    truth: str
    condition: dict

    def as_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "stimulus_id": self.stimulus_id,
            "truth": self.truth,
            "condition": dict(self.condition),
        }


@dataclass(frozen=True)
class SessionManifest:
    """Ordered trial plan for one session of one experiment."""

    experiment_id: int
    master_seed: int
    trials: tuple
    training_ids: tuple
    choice_set: tuple
    geometry: dict

    @property
    def trial_count(self) -> int:
        return len(self.trials)

    def stimulus_ids(self):
        return [t.stimulus_id for t in self.trials]

    def truth_by_stimulus(self) -> dict:
        return {t.stimulus_id: t.truth for t in self.trials}

    def as_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "master_seed": self.master_seed,
            "trial_count": self.trial_count,
            "training_ids": list(self.training_ids),
            "choice_set": list(self.choice_set),
            "geometry": dict(self.geometry),
            "trials": [t.as_dict() for t in self.trials],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SessionManifest":
        try:
            trials = tuple(
                Trial(
                    trial_index=t["trial_index"],
                    stimulus_id=t["stimulus_id"],
                    truth=t["truth"],
                    condition=t["condition"],
                )
                for t in payload["trials"]
            )
            return cls(
                experiment_id=payload["experiment_id"],
                master_seed=payload["master_seed"],
                trials=trials,
                training_ids=tuple(payload["training_ids"]),
                choice_set=tuple(payload["choice_set"]),
                geometry=dict(payload["geometry"]),
            )
        except KeyError as exc:
            raise DataError(f"manifest missing field {exc}") from exc


@dataclass(frozen=True)
class TrialRecord:
    """One subject response to one trial."""

    trial_index: int
    stimulus_id: str
    choice: str
    perceived_time_ms: float
    correct: bool
    undefinable: bool
    training: bool = False
    session_id: str = "default"

    def __post_init__(self):
        if self.perceived_time_ms <= 0:
            raise ParameterError("perceived_time_ms must be positive")
        if self.correct and self.undefinable:
            raise ParameterError("a response cannot be both correct and undefinable")

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "TrialRecord":
        try:
            return cls(
                trial_index=int(payload["trial_index"]),
                stimulus_id=payload["stimulus_id"],
                choice=payload["choice"],
                perceived_time_ms=float(payload["perceived_time_ms"]),
                correct=bool(payload["correct"]),
                undefinable=bool(payload["undefinable"]),
                training=bool(payload.get("training", False)),
                session_id=payload.get("session_id", "default"),
            )
        except KeyError as exc:
            raise DataError(f"response record missing field {exc}") from exc


@dataclass(frozen=True)
class TTestResult:
    group_a: str
    group_b: str
    hypothesis: str
    t: float
    p: float
    significant: bool


@dataclass(frozen=True)
class GroupStats:
    key: str
    n: int
    correct: int
    mistakes: int
    undefinables: int
    correct_rate_pct: float
    rt_mean_ms: float | None
    rt_std_ms: float | None
    rt_n: int
    outliers: int
    low_power: bool


@dataclass(frozen=True)
class StatsReport:
    """Scored session: per-condition accuracy and RT plus pairwise t-tests."""

    experiment_id: int
    n_records: int
    outliers_excluded: int
    rt_outlier_cutoff_ms: float
    groups: dict
    ttests: tuple


def _ratio_value(label: str) -> float:
    return float(Fraction(label))


def build_conditions(experiment_id: int) -> list:
    """The fixed condition grid of an experiment, in canonical order."""
    conditions = []
    if experiment_id == 1:
        for surface in EXP1_SURFACES:
            for beta in EXPERIMENT_BETAS[1]:
                for rep in range(7):
                    conditions.append(
                        {"surface": surface, "beta": beta, "rep": rep, "letter": None}
                    )
    elif experiment_id == 2:
        for letter in EXP2_LETTERS:
            for beta in EXPERIMENT_BETAS[2]:
                for rep in range(5):
                    conditions.append(
                        {
                            "surface": "ellipsoid",
                            "beta": beta,
                            "rep": rep,
                            "letter": letter,
                            "size": LETTER_SIZE_EXP2,
                            "depth_ratio": "1/6",
                        }
                    )
    elif experiment_id == 3:
        for letter in EXP3_LETTERS:
            for size in EXP3_SIZES:
                for ratio in EXP3_RATIOS:
                    for beta in EXPERIMENT_BETAS[3]:
                        for rep in range(2):
                            conditions.append(
                                {
                                    "surface": "ellipsoid",
                                    "beta": beta,
                                    "rep": rep,
                                    "letter": letter,
                                    "size": size,
                                    "depth_ratio": ratio,
                                }
                            )
    else:
        raise ParameterError(f"unknown experiment id {experiment_id}")
    return conditions


def _truth_label(experiment_id: int, condition: dict) -> str:
    if experiment_id == 1:
        return condition["surface"]
    return condition["letter"]


def build_depth_field(condition: dict, geom: ViewGeometry, height: int = 1024) -> DepthField:
    """Depth field for one condition: background surface, then glyph, then
    5x5 smoothing for the letter experiments (applied uniformly so that
    no-letter trials share the same processing)."""
    base = make_surface(condition["surface"], geom.image_width, height)
    letter = condition.get("letter")
    if letter is None:
        return base
    if letter != "NONE":
        glyph = GlyphSpec(
            letter=letter,
            size=int(condition["size"]),
            depth_ratio=_ratio_value(condition["depth_ratio"]),
            horizontal_offset=int(condition.get("offset", 0)),
        )
        base = embed_glyph(base, glyph)
    return smooth5(base)


def plan_session(experiment_id: int, master_seed: int, geom: ViewGeometry | None = None):
    """Derive the full deterministic session plan from the master seed.

    Returns (manifest, per-stimulus noise seeds). The random stream is
    consumed in a fixed order: noise seeds, letter offsets, trial
    permutation, training draw.
    """
    if geom is None:
        geom = ViewGeometry()
    conditions = build_conditions(experiment_id)
    n = len(conditions)
    rng = np.random.default_rng(master_seed)
    noise_seeds = rng.integers(0, 2**63, size=n, dtype=np.int64)
    offsets = rng.integers(-OFFSET_RANGE, OFFSET_RANGE + 1, size=n)
    order = rng.permutation(n)
    training_positions = rng.choice(n, size=TRAINING_COUNT, replace=False)

    entries = []
    for idx, cond in enumerate(conditions):
        cond = dict(cond)
        cond["noise_seed"] = int(noise_seeds[idx])
        if cond.get("letter") not in (None, "NONE"):
            cond["offset"] = int(offsets[idx])
        stimulus_id = f"e{experiment_id}-{idx:03d}"
        entries.append((stimulus_id, cond))

    trials = tuple(
        Trial(
            trial_index=pos,
            stimulus_id=entries[idx][0],
            truth=_truth_label(experiment_id, entries[idx][1]),
            condition=entries[idx][1],
        )
        for pos, idx in enumerate(order)
    )
    training_ids = tuple(entries[idx][0] for idx in training_positions)
    manifest = SessionManifest(
        experiment_id=experiment_id,
        master_seed=master_seed,
        trials=trials,
        training_ids=training_ids,
        choice_set=tuple(CHOICE_SETS[experiment_id]),
        geometry=geom.as_dict(),
    )
    return manifest, entries


def build_inventory(
    experiment_id: int,
    master_seed: int,
    out_dir,
    geom: ViewGeometry | None = None,
    height: int = 1024,
    write_links: bool = False,
    verify: bool = False,
    progress=None,
):
    """Generate, render, and persist every stimulus of an experiment session.

    Writes out_dir/manifest.json and out_dir/stimuli/{id}.png plus a JSON
    provenance sidecar per stimulus. Returns the manifest. With verify=True
    every stimulus's links are checked before it is written.
    """
    if geom is None:
        geom = ViewGeometry()
    out = Path(out_dir)
    stim_dir = out / "stimuli"
    stim_dir.mkdir(parents=True, exist_ok=True)
    manifest, entries = plan_session(experiment_id, master_seed, geom)

    # glyph-free fields repeat across trials and are worth caching; fields
    # with letters embed per-stimulus offsets and are built fresh each time
    depth_cache: dict = {}
    for stimulus_id, cond in entries:
        cacheable = cond.get("letter") in (None, "NONE")
        depth_key = (cond["surface"], cond.get("letter"))
        depth = depth_cache.get(depth_key) if cacheable else None
        if depth is None:
            depth = build_depth_field(cond, geom, height)
            if cacheable:
                depth_cache[depth_key] = depth
        spec = SpectrumSpec(beta=cond["beta"], size=PATCH_SIZE, seed=cond["noise_seed"])
        stim = render(depth, generate_patch(spec), geom)
        if verify:
            ok, violations = verify_links(stim)
            if not ok:
                raise DataError(f"{stimulus_id}: link violations {violations[:3]}")
        stim.provenance["stimulus_id"] = stimulus_id
        stim.provenance["experiment_id"] = experiment_id
        storage.save_gray_png(stim_dir / f"{stimulus_id}.png", stim.image)
        storage.save_json(stim_dir / f"{stimulus_id}.json", stim.provenance)
        if write_links:
            storage.save_links(stim_dir / f"{stimulus_id}.links", stim.links)
        if progress is not None:
            progress(stimulus_id)

    storage.save_json(out / "manifest.json", manifest.as_dict())
    return manifest


def load_manifest(session_dir) -> SessionManifest:
    return SessionManifest.from_dict(storage.load_json(Path(session_dir) / "manifest.json"))


def depth_from_provenance(provenance: dict, geom: ViewGeometry, height: int) -> DepthField:
    """Rebuild the depth field a stimulus was rendered with."""
    depth_prov = provenance["depth"]
    glyph = depth_prov.get("glyph")
    cond: dict = {"surface": depth_prov["kind"], "letter": None}
    if glyph is not None:
        cond.update(
            {
                "letter": glyph["letter"],
                "size": glyph["size"],
                "depth_ratio": str(Fraction(glyph["depth_ratio"]).limit_denominator(1000)),
                "offset": glyph.get("horizontal_offset", 0),
            }
        )
    elif depth_prov.get("smoothed"):
        cond["letter"] = "NONE"
    return build_depth_field(cond, geom, height)


def load_stimulus_file(png_path, with_links: str = "none"):
    """Load a stimulus from its PNG plus the JSON sidecar next to it.

    with_links: 'none' leaves links empty, 'sidecar' reads the binary
    sidecar, 'render' re-renders deterministically from provenance and
    attaches the recovered links to the loaded image, 'auto' uses the sidecar
    when present and re-renders otherwise.
    """
    from .sirds_render import Stimulus

    png = Path(png_path)
    image = storage.load_gray_png(png)
    provenance = storage.load_json(png.with_suffix(".json"))
    geom = ViewGeometry(**provenance["geometry"])
    if with_links == "auto":
        with_links = "sidecar" if png.with_suffix(".links").exists() else "render"
    links: list = []
    if with_links == "sidecar":
        links = storage.load_links(png.with_suffix(".links"))
    elif with_links == "render":
        spec_d = provenance["spec"]
        spec = SpectrumSpec(
            beta=spec_d["beta"],
            size=spec_d["size"],
            seed=spec_d["seed"],
            amplitude=spec_d.get("amplitude", 1.0),
        )
        depth = depth_from_provenance(provenance, geom, height=image.shape[0])
        links = render(depth, generate_patch(spec), geom).links
    elif with_links != "none":
        raise ParameterError(f"unknown with_links mode {with_links!r}")
    return Stimulus(image=image, links=links, geometry=geom, provenance=provenance)


def load_stimulus(session_dir, stimulus_id: str, with_links: str = "none"):
    """Load a persisted inventory stimulus by id from a session directory."""
    return load_stimulus_file(
        Path(session_dir) / "stimuli" / f"{stimulus_id}.png", with_links=with_links
    )


def _group_key_fields(experiment_id: int):
    fields_ = [("beta", "beta")]
    if experiment_id == 3:
        fields_ += [("size", "size"), ("depth_ratio", "ratio")]
    return fields_


def score(manifest: SessionManifest, records, rt_outlier_cutoff_ms: float = 10000.0) -> StatsReport:
    """Score response records against the manifest.

    Correctness is recomputed from the manifest truth labels. The correct
    rate denominator includes undefinable selections. RT statistics use
    correct responses only, excluding those above the outlier cutoff; the
    excluded count is reported. Training records are ignored.
    """
    records = [r for r in records if not r.training]
    if not records:
        raise DataError("no scoreable records")
    trials_by_index = {t.trial_index: t for t in manifest.trials}
    seen = set()
    scored = []
    for rec in records:
        trial = trials_by_index.get(rec.trial_index)
        if trial is None:
            raise DataError(f"record references unknown trial {rec.trial_index}")
        if trial.stimulus_id != rec.stimulus_id:
            raise DataError(
                f"trial {rec.trial_index}: stimulus {rec.stimulus_id} does not match manifest"
            )
        key = (rec.session_id, rec.trial_index)
        if key in seen:
            raise DataError(f"duplicate response for trial {rec.trial_index} in {rec.session_id}")
        seen.add(key)
        correct = rec.choice == trial.truth
        undefinable = rec.choice == UNDEFINABLE
        if rec.correct != correct or rec.undefinable != undefinable:
            raise DataError(f"trial {rec.trial_index}: stored flags contradict manifest truth")
        scored.append((trial, rec, correct, undefinable))

    key_fields = _group_key_fields(manifest.experiment_id)
    groups: dict = {name: {} for _, name in key_fields}
    outliers_total = 0

    def cell(name, value):
        return groups[name].setdefault(
            str(value),
            {"n": 0, "correct": 0, "mistakes": 0, "undefinables": 0, "rts": [], "outliers": 0},
        )

    rts_by_beta: dict = {}
    for trial, rec, correct, undefinable in scored:
        is_outlier = correct and rec.perceived_time_ms > rt_outlier_cutoff_ms
        outliers_total += is_outlier
        for cond_field, name in key_fields:
            value = trial.condition.get(cond_field)
            c = cell(name, value)
            c["n"] += 1
            if correct:
                c["correct"] += 1
                if is_outlier:
                    c["outliers"] += 1
                else:
                    c["rts"].append(rec.perceived_time_ms)
            elif undefinable:
                c["undefinables"] += 1
            else:
                c["mistakes"] += 1
        if correct and not is_outlier:
            rts_by_beta.setdefault(str(trial.condition["beta"]), []).append(rec.perceived_time_ms)

    group_stats: dict = {}
    for name, cells in groups.items():
        rows = []
        for key in sorted(cells, key=_numeric_sort_key):
            c = cells[key]
            rts = np.asarray(c["rts"], dtype=np.float64)
            rows.append(
                GroupStats(
                    key=key,
                    n=c["n"],
                    correct=c["correct"],
                    mistakes=c["mistakes"],
                    undefinables=c["undefinables"],
                    correct_rate_pct=100.0 * c["correct"] / c["n"],
                    rt_mean_ms=float(rts.mean()) if rts.size else None,
                    rt_std_ms=float(rts.std(ddof=1)) if rts.size > 1 else (0.0 if rts.size else None),
                    rt_n=int(rts.size),
                    outliers=c["outliers"],
                    low_power=rts.size < 5,
                )
            )
        group_stats[name] = rows

    ttests = []
    betas = sorted(rts_by_beta, key=_numeric_sort_key)
    for i in range(len(betas)):
        for j in range(i + 1, len(betas)):
            a, b = rts_by_beta[betas[j]], rts_by_beta[betas[i]]
            if len(a) < 2 or len(b) < 2:
                continue
            try:
                t, p, sig = t_test_one_tailed(a, b, "a_greater")
            except DegenerateInputError:
                continue
            ttests.append(
                TTestResult(
                    group_a=f"beta={betas[j]}",
                    group_b=f"beta={betas[i]}",
                    hypothesis=f"rt(beta={betas[j]}) > rt(beta={betas[i]})",
                    t=t,
                    p=p,
                    significant=sig,
                )
            )

    return StatsReport(
        experiment_id=manifest.experiment_id,
        n_records=len(scored),
        outliers_excluded=outliers_total,
        rt_outlier_cutoff_ms=rt_outlier_cutoff_ms,
        groups=group_stats,
        ttests=tuple(ttests),
    )


def _numeric_sort_key(value: str):
    try:
        return (0, float(Fraction(value)), value)
    except (ValueError, ZeroDivisionError):
        return (1, 0.0, value)


def t_test_one_tailed(sample_a, sample_b, direction: str):
    """Welch unequal-variance one-tailed two-sample t-test.

    direction 'a_greater' tests the hypothesis mean(a) > mean(b);
    'a_less' tests mean(a) < mean(b). Returns (t, p, significant at 0.05).
    """
    if direction not in ("a_greater", "a_less"):
        raise ParameterError(f"direction must be a_greater or a_less, got {direction!r}")
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ParameterError("each sample needs at least 2 values")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    ma, mb = a.mean(), b.mean()
    if va == 0.0 and vb == 0.0:
        if ma == mb:
            raise DegenerateInputError("both samples constant and equal; t is undefined")
        t = math.inf if ma > mb else -math.inf
        p = 0.0 if (t > 0) == (direction == "a_greater") else 1.0
        return t, p, p < 0.05
    se = math.sqrt(va / a.size + vb / b.size)
    t = (ma - mb) / se
    df = (va / a.size + vb / b.size) ** 2 / (
        (va / a.size) ** 2 / (a.size - 1) + (vb / b.size) ** 2 / (b.size - 1)
    )
    if t == 0.0:
        p = 0.5
    elif direction == "a_greater":
        p = float(_scipy_stats.t.sf(t, df))
    else:
        p = float(_scipy_stats.t.cdf(t, df))
    return float(t), p, p < 0.05


def report(stats: StatsReport, out_dir) -> list:
    """Write the report CSVs and summary JSON; returns written paths.

    Emits accuracy and RT tables per noise exponent, the pairwise t-test
    table, and for experiment 3 the per-size and per-ratio breakdowns.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def group_rows(rows, with_low_power=False):
        table = []
        for g in rows:
            row = [
                g.key,
                f"{g.correct_rate_pct:.2f}",
                g.mistakes,
                g.undefinables,
                g.n,
                "" if g.rt_mean_ms is None else f"{g.rt_mean_ms:.1f}",
                "" if g.rt_std_ms is None else f"{g.rt_std_ms:.1f}",
                g.rt_n,
                g.outliers,
            ]
            if with_low_power:
                row.append(int(g.low_power))
            table.append(row)
        return table

    header = [
        "key",
        "correct_rate_pct",
        "mistakes",
        "undefinables",
        "n_trials",
        "rt_mean_ms",
        "rt_std_ms",
        "rt_n",
        "outliers_excluded",
    ]

    beta_rows = stats.groups.get("beta", [])
    path = out / "accuracy_by_beta.csv"
    storage.write_csv(
        path,
        ["beta", "correct_rate_pct", "mistakes", "undefinables", "n_trials"],
        [[g.key, f"{g.correct_rate_pct:.2f}", g.mistakes, g.undefinables, g.n] for g in beta_rows],
    )
    written.append(path)

    path = out / "rt_by_beta.csv"
    storage.write_csv(
        path,
        ["beta", "rt_mean_ms", "rt_std_ms", "rt_n", "outliers_excluded"],
        [
            [
                g.key,
                "" if g.rt_mean_ms is None else f"{g.rt_mean_ms:.1f}",
                "" if g.rt_std_ms is None else f"{g.rt_std_ms:.1f}",
                g.rt_n,
                g.outliers,
            ]
            for g in beta_rows
        ],
    )
    written.append(path)

    path = out / "ttests_rt.csv"
    storage.write_csv(
        path,
        ["group_a", "group_b", "hypothesis", "t", "p", "significant"],
        [
            [r.group_a, r.group_b, r.hypothesis, f"{r.t:.6g}", f"{r.p:.6g}", int(r.significant)]
            for r in stats.ttests
        ],
    )
    written.append(path)

    for name in ("size", "ratio"):
        if name in stats.groups:
            path = out / f"results_by_{name}.csv"
            storage.write_csv(path, ["key"] + header[1:] + ["low_power"],
                              group_rows(stats.groups[name], with_low_power=True))
            written.append(path)

    summary_path = out / "summary.json"
    storage.save_json(
        summary_path,
        {
            "experiment_id": stats.experiment_id,
            "n_records": stats.n_records,
            "outliers_excluded": stats.outliers_excluded,
            "rt_outlier_cutoff_ms": stats.rt_outlier_cutoff_ms,
            "ttests": [asdict(t) for t in stats.ttests],
        },
    )
    written.append(summary_path)
    return [str(p) for p in written]
