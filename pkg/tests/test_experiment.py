import math

import numpy as np
import pytest

from oracles import welch_one_tailed_ref

from sirdskit import (
    DataError,
    DegenerateInputError,
    ParameterError,
    SessionManifest,
    TrialRecord,
    ViewGeometry,
    make_surface,
    report,
    score,
    t_test_one_tailed,
)
from sirdskit.experiment_kit import (
    CHOICE_SETS,
    EXPERIMENT_BETAS,
    TRAINING_COUNT,
    UNDEFINABLE,
    build_conditions,
    build_depth_field,
    depth_from_provenance,
    plan_session,
)


def _records(manifest, session_id="s0", rt=2000.0, mutate=None):
    """Truthful responses for every trial, with optional per-trial overrides."""
    records = []
    for trial in manifest.trials:
        choice = trial.truth
        rt_ms = rt
        if mutate is not None:
            out = mutate(trial)
            if out is not None:
                choice, rt_ms = out
        records.append(
            TrialRecord(
                trial_index=trial.trial_index,
                stimulus_id=trial.stimulus_id,
                choice=choice,
                perceived_time_ms=rt_ms,
                correct=choice == trial.truth,
                undefinable=choice == UNDEFINABLE,
                session_id=session_id,
            )
        )
    return records


@pytest.fixture(scope="module")
def manifest1():
    return plan_session(1, master_seed=42)[0]


@pytest.fixture(scope="module")
def manifest3():
    return plan_session(3, master_seed=42)[0]


class TestConditions:
    def test_experiment1_grid(self):
        conds = build_conditions(1)
        assert len(conds) == 140
        surfaces = [c["surface"] for c in conds]
        betas = [c["beta"] for c in conds]
        assert all(surfaces.count(s) == 35 for s in set(surfaces))
        assert all(betas.count(b) == 28 for b in EXPERIMENT_BETAS[1])

    def test_experiment2_grid(self):
        conds = build_conditions(2)
        assert len(conds) == 125
        letters = [c["letter"] for c in conds]
        assert all(letters.count(l) == 25 for l in ("S", "X", "L", "T", "NONE"))
        assert all(c["surface"] == "ellipsoid" for c in conds)
        assert all(c["size"] == 240 and c["depth_ratio"] == "1/6" for c in conds)

    def test_experiment3_grid(self):
        conds = build_conditions(3)
        assert len(conds) == 180
        assert {c["beta"] for c in conds} == {0.0, 0.5, 1.0}
        sizes = [c["size"] for c in conds]
        assert all(sizes.count(s) == 36 for s in (20, 40, 60, 80, 100))
        ratios = [c["depth_ratio"] for c in conds]
        assert all(ratios.count(r) == 60 for r in ("1/5", "1/6", "1/7"))

    def test_unknown_experiment(self):
        with pytest.raises(ParameterError):
            build_conditions(4)


class TestPlanSession:
    def test_deterministic(self):
        a, _ = plan_session(2, master_seed=7)
        b, _ = plan_session(2, master_seed=7)
        assert a.as_dict() == b.as_dict()

    def test_master_seed_changes_plan(self):
        a, _ = plan_session(2, master_seed=7)
        b, _ = plan_session(2, master_seed=8)
        assert a.as_dict() != b.as_dict()

    def test_trial_indices_are_positions(self, manifest1):
        assert [t.trial_index for t in manifest1.trials] == list(range(140))

    def test_every_stimulus_once(self, manifest1):
        ids = manifest1.stimulus_ids()
        assert len(set(ids)) == 140
        assert all(i.startswith("e1-") for i in ids)

    def test_order_is_shuffled(self, manifest1):
        ids = manifest1.stimulus_ids()
        assert ids != sorted(ids)

    def test_training_draw(self, manifest1):
        assert len(manifest1.training_ids) == TRAINING_COUNT
        assert len(set(manifest1.training_ids)) == TRAINING_COUNT
        assert set(manifest1.training_ids) <= set(manifest1.stimulus_ids())

    def test_choice_set(self, manifest1):
        assert list(manifest1.choice_set) == CHOICE_SETS[1]

    def test_letter_trials_carry_offsets(self):
        manifest, _ = plan_session(2, master_seed=7)
        for trial in manifest.trials:
            cond = trial.condition
            if cond["letter"] == "NONE":
                assert "offset" not in cond
            else:
                assert -400 <= cond["offset"] <= 400

    def test_truth_labels(self, manifest1, manifest3):
        for t in manifest1.trials:
            assert t.truth == t.condition["surface"]
        for t in manifest3.trials:
            assert t.truth == t.condition["letter"]

    def test_manifest_round_trip(self, manifest1):
        clone = SessionManifest.from_dict(manifest1.as_dict())
        assert clone.as_dict() == manifest1.as_dict()

    def test_manifest_missing_field(self, manifest1):
        payload = manifest1.as_dict()
        del payload["training_ids"]
        with pytest.raises(DataError):
            SessionManifest.from_dict(payload)


class TestBuildDepthField:
    def test_surface_only_not_smoothed(self):
        geom = ViewGeometry()
        cond = {"surface": "egg_crate", "beta": 1.0, "letter": None}
        field = build_depth_field(cond, geom)
        assert "smoothed" not in field.provenance
        assert np.array_equal(field.values, make_surface("egg_crate", 1536, 1024).values)

    def test_letter_field_smoothed_with_plateau(self):
        geom = ViewGeometry()
        cond = {
            "surface": "ellipsoid",
            "beta": 1.0,
            "letter": "T",
            "size": 240,
            "depth_ratio": "1/6",
            "offset": 100,
        }
        field = build_depth_field(cond, geom)
        assert field.provenance["smoothed"] is True
        assert field.values.max() == pytest.approx(0.7, abs=1e-12)
        assert field.provenance["glyph"]["letter"] == "T"

    def test_none_letter_also_smoothed(self):
        geom = ViewGeometry()
        cond = {"surface": "ellipsoid", "beta": 1.0, "letter": "NONE",
                "size": 240, "depth_ratio": "1/6"}
        field = build_depth_field(cond, geom)
        assert field.provenance["smoothed"] is True
        assert "glyph" not in field.provenance

    def test_depth_from_provenance_round_trip(self):
        geom = ViewGeometry()
        cond = {
            "surface": "ellipsoid",
            "beta": 0.5,
            "letter": "P",
            "size": 60,
            "depth_ratio": "1/7",
            "offset": -123,
        }
        field = build_depth_field(cond, geom)
        provenance = {"depth": dict(field.provenance)}
        rebuilt = depth_from_provenance(provenance, geom, height=1024)
        assert np.array_equal(rebuilt.values, field.values)

    def test_depth_from_provenance_plain_surface(self):
        geom = ViewGeometry()
        field = build_depth_field({"surface": "mexican_hat", "letter": None}, geom)
        rebuilt = depth_from_provenance({"depth": dict(field.provenance)}, geom, height=1024)
        assert np.array_equal(rebuilt.values, field.values)


class TestTrialRecord:
    def test_round_trip(self):
        rec = TrialRecord(
            trial_index=3, stimulus_id="e1-000", choice="ellipsoid",
            perceived_time_ms=1500.0, correct=True, undefinable=False,
        )
        assert TrialRecord.from_dict(rec.as_dict()) == rec

    def test_rt_must_be_positive(self):
        with pytest.raises(ParameterError):
            TrialRecord(
                trial_index=0, stimulus_id="x", choice="a",
                perceived_time_ms=0.0, correct=False, undefinable=False,
            )

    def test_correct_and_undefinable_exclusive(self):
        with pytest.raises(ParameterError):
            TrialRecord(
                trial_index=0, stimulus_id="x", choice="a",
                perceived_time_ms=100.0, correct=True, undefinable=True,
            )

    def test_missing_field(self):
        with pytest.raises(DataError):
            TrialRecord.from_dict({"trial_index": 0})


class TestScore:
    def test_all_correct(self, manifest1):
        stats = score(manifest1, _records(manifest1))
        assert stats.n_records == 140
        assert stats.outliers_excluded == 0
        rows = stats.groups["beta"]
        assert [g.key for g in rows] == ["0.0", "0.5", "1.0", "1.5", "2.0"]
        for g in rows:
            assert g.n == 28
            assert g.correct == 28
            assert g.correct_rate_pct == 100.0
            assert g.rt_mean_ms == 2000.0
            assert g.rt_std_ms == 0.0
            assert g.rt_n == 28
        assert stats.ttests == ()

    def test_mixed_outcomes(self, manifest1):
        wrong = {t.truth for t in manifest1.trials}

        def mutate(trial):
            if trial.trial_index == 0:
                bad = next(c for c in wrong if c != trial.truth)
                return bad, 2000.0
            if trial.trial_index == 1:
                return UNDEFINABLE, 2000.0
            if trial.trial_index == 2:
                return trial.truth, 76000.0
            return None

        stats = score(manifest1, _records(manifest1, mutate=mutate))
        assert stats.n_records == 140
        assert stats.outliers_excluded == 1
        total_correct = sum(g.correct for g in stats.groups["beta"])
        total_mistakes = sum(g.mistakes for g in stats.groups["beta"])
        total_undef = sum(g.undefinables for g in stats.groups["beta"])
        assert total_correct == 138
        assert total_mistakes == 1
        assert total_undef == 1
        assert sum(g.n for g in stats.groups["beta"]) == 140
        # outlier response is excluded from RT pooling but still counted correct
        assert sum(g.rt_n for g in stats.groups["beta"]) == 137
        assert sum(g.outliers for g in stats.groups["beta"]) == 1
        for g in stats.groups["beta"]:
            assert g.correct + g.mistakes + g.undefinables == g.n

    def test_undefinable_counts_in_denominator(self, manifest1):
        def mutate(trial):
            if trial.condition["beta"] == 0.0 and trial.trial_index % 2 == 0:
                return UNDEFINABLE, 2000.0
            return None

        stats = score(manifest1, _records(manifest1, mutate=mutate))
        g0 = next(g for g in stats.groups["beta"] if g.key == "0.0")
        assert g0.n == 28
        assert g0.correct_rate_pct == pytest.approx(100.0 * g0.correct / 28)
        assert g0.undefinables > 0

    def test_outlier_cutoff_configurable(self, manifest1):
        def mutate(trial):
            if trial.trial_index == 5:
                return trial.truth, 9000.0
            return None

        records = _records(manifest1, mutate=mutate)
        assert score(manifest1, records).outliers_excluded == 0
        assert score(manifest1, records, rt_outlier_cutoff_ms=8000.0).outliers_excluded == 1

    def test_slow_wrong_answer_is_not_an_outlier(self, manifest1):
        def mutate(trial):
            if trial.trial_index == 0:
                return UNDEFINABLE, 99000.0
            return None

        stats = score(manifest1, _records(manifest1, mutate=mutate))
        assert stats.outliers_excluded == 0

    def test_permutation_invariant(self, manifest1):
        records = _records(manifest1)
        rng = np.random.default_rng(0)
        shuffled = [records[i] for i in rng.permutation(len(records))]
        a = score(manifest1, records)
        b = score(manifest1, shuffled)
        assert a.groups == b.groups
        assert a.ttests == b.ttests

    def test_training_records_ignored(self, manifest1):
        records = _records(manifest1)
        trial = manifest1.trials[0]
        records.append(
            TrialRecord(
                trial_index=0, stimulus_id=trial.stimulus_id, choice=trial.truth,
                perceived_time_ms=500.0, correct=True, undefinable=False, training=True,
            )
        )
        assert score(manifest1, records).n_records == 140

    def test_two_sessions_pool(self, manifest1):
        records = _records(manifest1, session_id="s0") + _records(manifest1, session_id="s1")
        stats = score(manifest1, records)
        assert stats.n_records == 280
        assert all(g.n == 56 for g in stats.groups["beta"])

    def test_duplicate_in_same_session_rejected(self, manifest1):
        records = _records(manifest1)
        with pytest.raises(DataError):
            score(manifest1, records + [records[0]])

    def test_unknown_trial_rejected(self, manifest1):
        records = _records(manifest1)
        bad = TrialRecord(
            trial_index=999, stimulus_id="e1-000", choice=UNDEFINABLE,
            perceived_time_ms=100.0, correct=False, undefinable=True,
        )
        with pytest.raises(DataError):
            score(manifest1, records + [bad])

    def test_stimulus_mismatch_rejected(self, manifest1):
        trial = manifest1.trials[0]
        other = manifest1.trials[1]
        bad = TrialRecord(
            trial_index=trial.trial_index, stimulus_id=other.stimulus_id,
            choice=UNDEFINABLE, perceived_time_ms=100.0, correct=False, undefinable=True,
        )
        with pytest.raises(DataError):
            score(manifest1, [bad])

    def test_contradicting_flags_rejected(self, manifest1):
        trial = manifest1.trials[0]
        bad = TrialRecord(
            trial_index=trial.trial_index, stimulus_id=trial.stimulus_id,
            choice=trial.truth, perceived_time_ms=100.0, correct=False, undefinable=False,
        )
        with pytest.raises(DataError):
            score(manifest1, [bad])

    def test_no_records_rejected(self, manifest1):
        with pytest.raises(DataError):
            score(manifest1, [])

    def test_exp3_grouped_by_size_and_ratio(self, manifest3):
        stats = score(manifest3, _records(manifest3))
        assert [g.key for g in stats.groups["size"]] == ["20", "40", "60", "80", "100"]
        assert [g.key for g in stats.groups["ratio"]] == ["1/7", "1/6", "1/5"]
        assert all(g.n == 36 for g in stats.groups["size"])
        assert all(g.n == 60 for g in stats.groups["ratio"])

    def test_rt_ttests_detect_slower_group(self, manifest1):
        rng = np.random.default_rng(1)

        def mutate(trial):
            base = 1000.0 + 2000.0 * trial.condition["beta"]
            return trial.truth, base + rng.uniform(0.0, 200.0)

        stats = score(manifest1, _records(manifest1, mutate=mutate))
        assert len(stats.ttests) == 10
        for tt in stats.ttests:
            assert tt.t > 0
            assert tt.p < 0.05
            assert tt.significant
        hyp = {(tt.group_a, tt.group_b) for tt in stats.ttests}
        assert ("beta=2.0", "beta=0.0") in hyp

    def test_low_power_flag(self, manifest3):
        kept = [0]

        def mutate(trial):
            if trial.condition["size"] == 20:
                if kept[0] < 3:
                    kept[0] += 1
                    return None
                return UNDEFINABLE, 2000.0
            return None

        stats = score(manifest3, _records(manifest3, mutate=mutate))
        g20 = next(g for g in stats.groups["size"] if g.key == "20")
        assert g20.rt_n < 5
        assert g20.low_power


class TestTTest:
    def test_worked_example(self):
        t, p, sig = t_test_one_tailed([2.1, 2.3, 2.2, 2.4], [1.0, 1.1, 0.9, 1.2], "a_greater")
        assert t > 0
        assert p < 0.001
        assert sig

    def test_direction_flip(self):
        t, p, sig = t_test_one_tailed([2.1, 2.3, 2.2, 2.4], [1.0, 1.1, 0.9, 1.2], "a_less")
        assert p > 0.999
        assert not sig

    def test_zero_t_exact_half(self):
        t, p, sig = t_test_one_tailed([1.0, 2.0, 3.0], [3.0, 2.0, 1.0], "a_greater")
        assert t == 0.0
        assert p == 0.5
        assert not sig

    def test_matches_reference_in_both_directions(self):
        rng = np.random.default_rng(123)
        for _ in range(100):
            na, nb = rng.integers(5, 50, size=2)
            a = rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 3.0), size=na)
            b = rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 3.0), size=nb)
            direction = "a_greater" if rng.random() < 0.5 else "a_less"
            t, p, _ = t_test_one_tailed(a, b, direction)
            t_ref, p_ref = welch_one_tailed_ref(a, b, direction)
            assert t == pytest.approx(t_ref, abs=1e-9)
            assert p == pytest.approx(p_ref, abs=1e-9)

    def test_constant_equal_samples_degenerate(self):
        with pytest.raises(DegenerateInputError):
            t_test_one_tailed([2.0, 2.0, 2.0], [2.0, 2.0], "a_greater")

    def test_constant_unequal_samples(self):
        t, p, sig = t_test_one_tailed([3.0, 3.0], [1.0, 1.0], "a_greater")
        assert t == math.inf
        assert p == 0.0
        assert sig

    def test_too_few_values(self):
        with pytest.raises(ParameterError):
            t_test_one_tailed([1.0], [1.0, 2.0], "a_greater")

    def test_bad_direction(self):
        with pytest.raises(ParameterError):
            t_test_one_tailed([1.0, 2.0], [1.0, 2.0], "two_sided")


class TestReport:
    def test_experiment1_files(self, manifest1, tmp_path):
        rng = np.random.default_rng(2)

        def mutate(trial):
            return trial.truth, 1500.0 + 1000.0 * trial.condition["beta"] + rng.uniform(0, 100)

        stats = score(manifest1, _records(manifest1, mutate=mutate))
        written = report(stats, tmp_path)
        names = {p.rsplit("/", 1)[-1] for p in written}
        assert names == {
            "accuracy_by_beta.csv",
            "rt_by_beta.csv",
            "ttests_rt.csv",
            "summary.json",
        }
        acc = (tmp_path / "accuracy_by_beta.csv").read_text().strip().splitlines()
        assert acc[0] == "beta,correct_rate_pct,mistakes,undefinables,n_trials"
        assert len(acc) == 6
        assert acc[1].startswith("0.0,100.00,0,0,28")
        tt = (tmp_path / "ttests_rt.csv").read_text().strip().splitlines()
        assert len(tt) == 11

    def test_experiment3_files(self, manifest3, tmp_path):
        stats = score(manifest3, _records(manifest3))
        report(stats, tmp_path)
        size_rows = (tmp_path / "results_by_size.csv").read_text().strip().splitlines()
        ratio_rows = (tmp_path / "results_by_ratio.csv").read_text().strip().splitlines()
        assert len(size_rows) == 6
        assert len(ratio_rows) == 4
        assert size_rows[0].endswith(",low_power")

    def test_summary_readable(self, manifest1, tmp_path):
        from sirdskit import storage

        stats = score(manifest1, _records(manifest1))
        report(stats, tmp_path)
        summary = storage.load_json(tmp_path / "summary.json")
        assert summary["experiment_id"] == 1
        assert summary["n_records"] == 140
        assert summary["outliers_excluded"] == 0
