"""Simulation harness: cohorts, sweeps, aggregation, and report formats."""

import math

import numpy as np
import pytest

from dqest.corpora import Corpus
from dqest.errors import ConfigError, ValidationError
from dqest.simharness import (
    EAR,
    GM_ALL,
    GM_GT,
    MDE,
    MDE_EXC,
    MDE_GM_ALL,
    MDE_HYB,
    MDE_SM_GT,
    METHODS,
    CorrelatedSpec,
    ExperimentConfig,
    WorkerProfile,
    _region_rates,
    auto_feature,
    ear_binomial_mad,
    mae,
    markdown_table,
    profile_by_name,
    result_csv,
    run_experiment,
    simulate_cohort,
    simulate_correlated,
    summary_csv,
)
from dqest.learners import ClassifierConfig
from dqest.mde import MdeConfig
from dqest.hyb import HybConfig


@pytest.fixture(scope="module")
def tiny_corpus_path(tmp_path_factory):
    rng = np.random.default_rng(123)
    n, d = 120, 4
    feats = rng.normal(size=(n, d))
    concept = rng.normal(size=d)
    labels = (feats @ concept > 0.0).astype(int)
    lines = ["f0,f1,f2,f3,label"]
    for i in range(n):
        lines.append(",".join(f"{v:.6f}" for v in feats[i]) + f",{labels[i]}")
    path = tmp_path_factory.mktemp("corpus") / "tiny.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf8")
    return str(path)


def _mem_corpus(n=1200, d=4, seed=9):
    rng = np.random.default_rng(seed)
    feats = rng.normal(size=(n, d))
    concept = rng.normal(size=d)
    labels = (feats @ concept > 0.0).astype(np.int8)
    return Corpus(features=feats, labels=labels, ids=np.arange(n, dtype=np.int64))


def _fast_kwargs():
    """Small estimator settings shared by the end-to-end runs."""
    return dict(
        learner=ClassifierConfig(tree_count=10),
        mde=MdeConfig(c=2, n=11, intv=0.05),
        hyb=HybConfig(r=3, p=2),
    )


class TestMae:
    def test_examples(self):
        assert mae([0.7, 0.9], [0.8, 0.8]) == pytest.approx(0.1)
        assert mae([0.5], [0.5]) == 0.0

    def test_errors(self):
        with pytest.raises(ValidationError):
            mae([0.5], [0.5, 0.6])
        with pytest.raises(ValidationError):
            mae([], [])


class TestBinomialMad:
    def test_degenerate_perfect(self):
        assert ear_binomial_mad(1.0, 7) == 0.0
        assert ear_binomial_mad(0.0, 7) == 0.0

    def test_single_draw(self):
        for g in (0.6, 0.75, 0.9):
            assert ear_binomial_mad(g, 1) == pytest.approx(2.0 * g * (1.0 - g))

    def test_enumeration(self):
        g, t = 0.7, 5
        expect = sum(
            math.comb(t, k) * g**k * (1 - g) ** (t - k) * abs(k / t - g)
            for k in range(t + 1)
        )
        assert ear_binomial_mad(g, t) == pytest.approx(expect, abs=1e-15)
        assert expect == pytest.approx(0.172872, abs=1e-9)

    def test_shrinks_with_budget(self):
        vals = [ear_binomial_mad(0.7, t) for t in (5, 10, 50, 200)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValidationError):
            ear_binomial_mad(1.2, 5)
        with pytest.raises(ValidationError):
            ear_binomial_mad(0.7, 0)


class TestProfiles:
    def test_validation(self):
        with pytest.raises(ValidationError):
            WorkerProfile((0.8,))
        with pytest.raises(ValidationError):
            WorkerProfile((0.5, 0.8))
        with pytest.raises(ValidationError):
            WorkerProfile((0.7, 1.01))
        assert len(WorkerProfile((0.7, 1.0))) == 2

    def test_by_name(self):
        assert len(profile_by_name("low")) == 20
        assert len(profile_by_name("high")) == 20
        assert len(profile_by_name("amt")) == 40
        with pytest.raises(ValidationError):
            profile_by_name("medium")


class TestExperimentConfig:
    def _cfg(self, **kw):
        base = dict(profile=WorkerProfile((0.7, 0.8)), repetitions=2)
        base.update(kw)
        return ExperimentConfig(**base)

    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.corpus == "synth-spam"
        assert cfg.budgets == (5, 10, 25, 50, 100)
        assert cfg.repetitions == 50
        assert cfg.methods == (MDE_HYB, EAR, MDE, GM_GT, GM_ALL)
        assert len(cfg.profile) == 20

    def test_validation(self):
        with pytest.raises(ConfigError):
            self._cfg(repetitions=0)
        with pytest.raises(ConfigError):
            self._cfg(budgets=())
        with pytest.raises(ConfigError):
            self._cfg(budgets=(5, -1))
        with pytest.raises(ConfigError):
            self._cfg(methods=())
        with pytest.raises(ConfigError):
            self._cfg(methods=("ear", "votes"))
        with pytest.raises(ConfigError):
            self._cfg(methods=("ear", "ear"))
        with pytest.raises(ConfigError):
            self._cfg(methods=("ear",), reference="mde")

    def test_exclusive_constraints(self):
        cfg = self._cfg(methods=(MDE_EXC, GM_GT, GM_ALL))
        assert cfg.resolved_reference == MDE_EXC
        with pytest.raises(ConfigError):
            self._cfg(methods=(MDE_EXC, EAR))
        with pytest.raises(ConfigError):
            self._cfg(methods=(MDE_EXC,), correlated=CorrelatedSpec())

    def test_reference_resolution(self):
        assert self._cfg().resolved_reference == MDE_HYB
        assert self._cfg(methods=(EAR, MDE)).resolved_reference == EAR
        assert self._cfg(methods=(EAR, MDE), reference=MDE).resolved_reference == MDE

    def test_all_methods_known(self):
        assert set(METHODS) == {
            EAR, MDE, MDE_HYB, GM_GT, GM_ALL, MDE_EXC, MDE_GM_ALL, MDE_SM_GT,
        }


class TestCorrelatedSpec:
    def test_validation(self):
        with pytest.raises(ValidationError):
            CorrelatedSpec(percentile=0.0)
        with pytest.raises(ValidationError):
            CorrelatedSpec(percentile=1.0)
        with pytest.raises(ValidationError):
            CorrelatedSpec(extra_error=0.6)
        with pytest.raises(ValidationError):
            CorrelatedSpec(extra_error=-0.1)
        spec = CorrelatedSpec()
        assert spec.feature_index is None
        assert spec.percentile == 0.9
        assert spec.extra_error == 0.2


class TestRegionRates:
    def test_hand_example(self):
        # g = 0.7, hard fraction 0.1, extra 0.2
        e_h, e_l = _region_rates(0.7, 0.1, 0.2)
        assert e_h == pytest.approx(0.5)
        assert e_l == pytest.approx(0.25 / 0.9)

    def test_overall_rate_preserved(self):
        for g, f, extra in ((0.7, 0.1, 0.2), (0.8, 0.3, 0.15), (0.61, 0.05, 0.2)):
            e_h, e_l = _region_rates(g, f, extra)
            assert f * e_h + (1 - f) * e_l == pytest.approx(1 - g, abs=1e-12)

    def test_zero_extra_reduces_to_uniform(self):
        e_h, e_l = _region_rates(0.75, 0.2, 0.0)
        assert e_h == pytest.approx(0.25)
        assert e_l == pytest.approx(0.25)

    def test_infeasible_raises(self):
        with pytest.raises(ConfigError):
            _region_rates(0.99, 0.9, 0.5)

    def test_small_clip_tolerated(self, caplog):
        with caplog.at_level("WARNING"):
            e_h, e_l = _region_rates(0.99, 0.5, 0.012)
        assert e_l == 0.0
        assert e_h == pytest.approx(0.022)
        assert any("clipped" in rec.message for rec in caplog.records)


class TestSimulateCohort:
    def test_loads_and_accuracy(self):
        corpus = _mem_corpus()
        profile = WorkerProfile((0.7, 0.9))
        workers = simulate_cohort(corpus, profile, np.random.default_rng(1))
        assert len(workers) == 2
        ids_seen = set()
        for w, g in zip(workers, profile.accuracies):
            assert w.n == 600
            assert w.t == 0
            realized = float(np.mean(w.decisions == w.true_labels))
            assert abs(realized - g) < 0.07
            assert not ids_seen.intersection(w.instance_ids.tolist())
            ids_seen.update(w.instance_ids.tolist())

    def test_deterministic(self):
        corpus = _mem_corpus(n=200)
        profile = WorkerProfile((0.7, 0.8))
        a = simulate_cohort(corpus, profile, np.random.default_rng(4))
        b = simulate_cohort(corpus, profile, np.random.default_rng(4))
        for x, y in zip(a, b):
            assert np.array_equal(x.decisions, y.decisions)
            assert np.array_equal(x.instance_ids, y.instance_ids)


class TestAutoFeature:
    def test_prefers_continuous(self):
        rng = np.random.default_rng(5)
        n = 300
        binary = rng.integers(0, 2, size=n).astype(np.float64) * 100.0
        smooth = rng.normal(scale=0.5, size=n)
        corpus = Corpus(
            features=np.column_stack([binary, smooth]),
            labels=np.zeros(n, dtype=np.int8),
            ids=np.arange(n, dtype=np.int64),
        )
        # column 0 has far higher variance but only 2 distinct values
        assert auto_feature(corpus) == 1

    def test_fallback_all_discrete(self):
        rng = np.random.default_rng(6)
        n = 300
        a = rng.integers(0, 2, size=n).astype(np.float64)
        b = rng.integers(0, 2, size=n).astype(np.float64) * 10.0
        corpus = Corpus(
            features=np.column_stack([a, b]),
            labels=np.zeros(n, dtype=np.int8),
            ids=np.arange(n, dtype=np.int64),
        )
        assert auto_feature(corpus) == 1


class TestSimulateCorrelated:
    def test_rates_by_region(self):
        corpus = _mem_corpus(n=4000)
        profile = WorkerProfile((0.7, 0.8))
        fi, pct, extra = 0, 0.8, 0.2
        workers = simulate_correlated(
            corpus, profile, fi, pct, extra, np.random.default_rng(7)
        )
        from dqest.data import percentile_threshold

        thr = percentile_threshold(corpus, fi, pct)
        for w, g in zip(workers, profile.accuracies):
            hard = w.features[:, fi] > thr
            overall = float(np.mean(w.decisions != w.true_labels))
            hard_rate = float(np.mean(w.decisions[hard] != w.true_labels[hard]))
            assert abs(overall - (1 - g)) < 0.05
            assert abs(hard_rate - min(1 - g + extra, 1.0)) < 0.08

    def test_zero_extra_matches_plain_rates(self):
        corpus = _mem_corpus(n=3000)
        profile = WorkerProfile((0.75, 0.85))
        workers = simulate_correlated(
            corpus, profile, 0, 0.9, 0.0, np.random.default_rng(8)
        )
        for w, g in zip(workers, profile.accuracies):
            overall = float(np.mean(w.decisions != w.true_labels))
            assert abs(overall - (1 - g)) < 0.04


class TestRunExperiment:
    def test_baseline_sweep_shapes(self, tiny_corpus_path):
        cfg = ExperimentConfig(
            corpus=tiny_corpus_path,
            profile=WorkerProfile((0.7, 0.85)),
            budgets=(2, 4),
            repetitions=3,
            methods=(EAR, GM_GT, GM_ALL),
            **_fast_kwargs(),
        )
        res = run_experiment(cfg)
        assert res.reference == EAR
        for m in cfg.methods:
            for b in cfg.budgets:
                assert (m, b) in res.maes
                assert len(res.maes[(m, b)]) == 3
                assert res.mean_mae[(m, b)] == pytest.approx(
                    float(np.mean(res.maes[(m, b)]))
                )
        # p-values exist for the competitors only
        assert (EAR, 2) not in res.p_vs_reference
        assert (GM_GT, 2) in res.p_vs_reference
        assert all(0.0 <= p <= 1.0 for p in res.p_vs_reference.values())

    def test_jobs_invariance(self, tiny_corpus_path):
        cfg = ExperimentConfig(
            corpus=tiny_corpus_path,
            profile=WorkerProfile((0.7, 0.85)),
            budgets=(3,),
            repetitions=3,
            methods=(EAR, GM_ALL),
            **_fast_kwargs(),
        )
        serial = run_experiment(cfg, jobs=1)
        parallel = run_experiment(cfg, jobs=2)
        for key in serial.maes:
            assert np.array_equal(serial.maes[key], parallel.maes[key])
        assert result_csv(serial) == result_csv(parallel)
        assert summary_csv(serial) == summary_csv(parallel)

    def test_byte_identical_reruns(self, tiny_corpus_path):
        cfg = ExperimentConfig(
            corpus=tiny_corpus_path,
            profile=WorkerProfile((0.7, 0.85)),
            budgets=(2,),
            repetitions=2,
            methods=(MDE_HYB, EAR, MDE),
            **_fast_kwargs(),
        )
        a = run_experiment(cfg)
        b = run_experiment(cfg)
        assert result_csv(a) == result_csv(b)
        assert summary_csv(a) == summary_csv(b)
        assert markdown_table(a) == markdown_table(b)

    def test_mde_family_and_reference(self, tiny_corpus_path):
        cfg = ExperimentConfig(
            corpus=tiny_corpus_path,
            profile=WorkerProfile((0.7, 0.8, 0.9)),
            budgets=(3,),
            repetitions=2,
            methods=(MDE_HYB, EAR, MDE, MDE_GM_ALL, MDE_SM_GT),
            **_fast_kwargs(),
        )
        res = run_experiment(cfg)
        assert res.reference == MDE_HYB
        for m in cfg.methods:
            assert (m, 3) in res.maes
        assert (EAR, 3) in res.p_vs_reference
        assert (MDE_HYB, 3) not in res.p_vs_reference

    def test_budget_zero_skips_gt_methods(self, tiny_corpus_path):
        cfg = ExperimentConfig(
            corpus=tiny_corpus_path,
            profile=WorkerProfile((0.7, 0.85)),
            budgets=(0, 2),
            repetitions=2,
            methods=(EAR, GM_ALL),
            **_fast_kwargs(),
        )
        res = run_experiment(cfg)
        assert (EAR, 0) not in res.maes
        assert (GM_ALL, 0) in res.maes
        assert (EAR, 2) in res.maes
        assert any("budget 0" in n for n in res.notices)

    def test_exclusive_methods(self, tiny_corpus_path):
        cfg = ExperimentConfig(
            corpus=tiny_corpus_path,
            profile=WorkerProfile((0.7, 0.8, 0.9)),
            budgets=(2,),
            repetitions=2,
            methods=(MDE_EXC, GM_GT, GM_ALL),
            **_fast_kwargs(),
        )
        res = run_experiment(cfg)
        assert res.reference == MDE_EXC
        for m in cfg.methods:
            assert (m, 2) in res.maes

    def test_standard_budget_too_large(self, tiny_corpus_path):
        cfg = ExperimentConfig(
            corpus=tiny_corpus_path,
            profile=WorkerProfile((0.7, 0.8, 0.9)),
            budgets=(41,),  # 120 // 3 = 40
            repetitions=1,
            methods=(EAR,),
            **_fast_kwargs(),
        )
        with pytest.raises(ConfigError):
            run_experiment(cfg)

    def test_exclusive_budget_too_large(self, tiny_corpus_path):
        cfg = ExperimentConfig(
            corpus=tiny_corpus_path,
            profile=WorkerProfile((0.7, 0.8, 0.9)),
            budgets=(40,),  # pool 120 leaves nothing for the workers
            repetitions=1,
            methods=(MDE_EXC, GM_ALL),
            **_fast_kwargs(),
        )
        with pytest.raises(ConfigError):
            run_experiment(cfg)

    def test_correlated_path(self, tiny_corpus_path):
        cfg = ExperimentConfig(
            corpus=tiny_corpus_path,
            profile=WorkerProfile((0.7, 0.8)),
            budgets=(3,),
            repetitions=2,
            methods=(EAR,),
            correlated=CorrelatedSpec(feature_index=0, percentile=0.8, extra_error=0.1),
            **_fast_kwargs(),
        )
        res = run_experiment(cfg)
        assert (EAR, 3) in res.maes
        assert "correlated" in res.metadata

    def test_profile_larger_than_corpus(self, tmp_path):
        path = tmp_path / "five.csv"
        path.write_text(
            "f0,label\n" + "".join(f"{i}.0,{i % 2}\n" for i in range(5)),
            encoding="utf8",
        )
        cfg = ExperimentConfig(
            corpus=str(path),
            profile=profile_by_name("low"),
            budgets=(1,),
            repetitions=1,
            methods=(EAR,),
            **_fast_kwargs(),
        )
        with pytest.raises(ConfigError):
            run_experiment(cfg)

    def test_jobs_validation(self, tiny_corpus_path):
        cfg = ExperimentConfig(
            corpus=tiny_corpus_path,
            profile=WorkerProfile((0.7, 0.8)),
            budgets=(2,),
            repetitions=1,
            methods=(EAR,),
            **_fast_kwargs(),
        )
        with pytest.raises(ConfigError):
            run_experiment(cfg, jobs=0)

    def test_single_rep_has_no_pvalues(self, tiny_corpus_path):
        cfg = ExperimentConfig(
            corpus=tiny_corpus_path,
            profile=WorkerProfile((0.7, 0.8)),
            budgets=(2,),
            repetitions=1,
            methods=(EAR, GM_ALL),
            **_fast_kwargs(),
        )
        res = run_experiment(cfg)
        assert res.p_vs_reference == {}


@pytest.fixture(scope="module")
def sample_result(tiny_corpus_path):
    cfg = ExperimentConfig(
        corpus=tiny_corpus_path,
        profile=WorkerProfile((0.7, 0.85)),
        budgets=(0, 2, 4),
        repetitions=3,
        methods=(EAR, GM_GT, GM_ALL),
        **_fast_kwargs(),
    )
    return run_experiment(cfg)


class TestReports:
    def test_result_csv_layout(self, sample_result):
        lines = result_csv(sample_result).strip().split("\n")
        assert lines[0] == "method,budget,rep,mae"
        # ear and gm-gt are skipped at budget 0: 3 methods x 3 budgets x 3
        # reps minus 2 skipped cells x 3 reps
        assert len(lines) - 1 == 3 * 3 * 3 - 2 * 3
        for line in lines[1:]:
            method, budget, rep, v = line.split(",")
            assert method in (EAR, GM_GT, GM_ALL)
            assert int(budget) in (0, 2, 4)
            assert 0 <= int(rep) < 3
            float(v)

    def test_summary_csv_layout(self, sample_result):
        lines = summary_csv(sample_result).strip().split("\n")
        meta = [ln for ln in lines if ln.startswith("# ")]
        body = [ln for ln in lines if not ln.startswith("# ")]
        assert any(ln.startswith("# corpus: ") for ln in meta)
        assert any(ln.startswith("# notice: ") for ln in meta)
        assert not any("date" in ln.lower() or "timestamp" in ln.lower() for ln in meta)
        assert body[0] == "method,budget,mean_mae,improv_vs_ref,stars"
        rows = {}
        for ln in body[1:]:
            method, budget, mean, improv, star = ln.split(",")
            rows[(method, int(budget))] = (float(mean), improv, star)
        # reference row leaves improvement blank
        assert rows[(EAR, 2)][1] == ""
        # competitor improvement matches the formula
        mean_ref = sample_result.mean_mae[(EAR, 2)]
        mean_gm = sample_result.mean_mae[(GM_GT, 2)]
        expect = f"{(mean_gm - mean_ref) / mean_gm * 100.0:.1f}"
        assert rows[(GM_GT, 2)][1] == expect

    def test_markdown_layout(self, sample_result):
        lines = markdown_table(sample_result).strip().split("\n")
        table = [ln for ln in lines if ln.startswith("|")]
        header = [c.strip() for c in table[0].strip("|").split("|")]
        assert header[0] == "gt per worker"
        assert header[1] == EAR.upper()
        assert GM_GT.upper() in header
        assert "improv." in header
        # one row per budget
        assert len(table) == 2 + 3

    def test_metadata_contents(self, sample_result):
        md = sample_result.metadata
        assert md["backend"] in ("compiled", "python")
        assert md["repetitions"] == "3"
        assert md["reference"] == EAR
        assert md["workers"] == "2"
        assert "learner" in md and "mde" in md and "hyb" in md
