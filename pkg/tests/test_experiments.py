import json
import warnings
from fractions import Fraction

import numpy as np
import pytest

import pathreg as pr
from pathreg.experiments import (
    DEFAULT_SEED,
    ExperimentSpec,
    RatioEstimate,
    run_avg_gamma_experiment,
    run_cv_demo,
    run_logistic_ratio_experiment,
    run_ridge_ratio_experiment,
    wilson_interval,
    write_experiment_outputs,
)
from pathreg.ridge import pathological_from_counts, pathological_regime_exact, pathological_regime_numeric
from pathreg.sampling import batch_counts


class TestWilson:
    def test_reference_values(self):
        lo, hi = wilson_interval(5, 10)
        assert lo == pytest.approx(0.2366, abs=5e-4)
        assert hi == pytest.approx(0.7634, abs=5e-4)
        lo, hi = wilson_interval(0, 10)
        assert lo == 0.0 and hi == pytest.approx(0.2775, abs=5e-4)

    def test_contains_estimate(self):
        for succ, m in [(0, 7), (3, 9), (9, 9), (50, 200)]:
            est = RatioEstimate.from_counts(succ, m)
            assert est.lo <= est.estimate <= est.hi

    def test_width_shrinks_like_sqrt_m(self):
        widths = []
        for m in (100, 400, 1600):
            lo, hi = wilson_interval(int(0.2 * m), m)
            widths.append(hi - lo)
        assert widths[0] / widths[1] == pytest.approx(2.0, abs=0.2)
        assert widths[1] / widths[2] == pytest.approx(2.0, abs=0.2)


class TestSpecValidation:
    def test_kind_checked(self):
        with pytest.raises(ValueError):
            ExperimentSpec(kind="nope")

    def test_sizes_checked(self):
        with pytest.raises(ValueError):
            ExperimentSpec(kind="ratio_vs_n", sizes=())
        with pytest.raises(ValueError):
            ExperimentSpec(kind="ratio_vs_n", sizes=(0,))
        with pytest.raises(ValueError):
            ExperimentSpec(kind="ratio_vs_n", m=0)

    def test_kind_mismatch_rejected(self):
        spec = ExperimentSpec(kind="ratio_vs_n", sizes=(50,), m=10)
        with pytest.raises(ValueError):
            run_avg_gamma_experiment(spec)


class TestRidgeRatio:
    def test_plain_arm_runs(self):
        spec = ExperimentSpec(kind="ratio_vs_n", sizes=(100, 200), m=400,
                              scheme="uniform_composition", seed=1)
        rows = run_ridge_ratio_experiment(spec)
        assert [r.n for r in rows] == [100, 200]
        for row in rows:
            assert row.scheme_label == "uniform_composition"
            assert 0.1 < row.ratio.estimate < 0.35
            assert row.ratio.m == 400

    def test_simpson_arm_label(self):
        spec = ExperimentSpec(kind="ratio_vs_n", sizes=(100,), m=50,
                              scheme="dirichlet_rounded", simpson=True, seed=1)
        rows = run_ridge_ratio_experiment(spec)
        assert rows[0].scheme_label == "dirichlet_rounded:simpson"

    def test_bernoulli_ratio_decreases_with_n(self):
        # entrywise fair coins concentrate away from the criterion region
        spec = ExperimentSpec(kind="ratio_vs_n", sizes=(20, 100), m=3000,
                              scheme="bernoulli", seed=2)
        rows = run_ridge_ratio_experiment(spec)
        assert rows[0].ratio.estimate > rows[1].ratio.estimate

    def test_numeric_oracle_cross_check(self):
        # the grid scanner must reproduce every exact verdict
        spec = ExperimentSpec(kind="ratio_vs_n", sizes=(60,), m=500,
                              scheme="uniform_composition", seed=3)
        rows = run_ridge_ratio_experiment(spec)
        counts = batch_counts("uniform_composition", 60, seed=3, stream=0)
        streams = 1
        while counts.shape[0] < 500:
            counts = np.vstack([counts, batch_counts("uniform_composition", 60, 3, streams)])
            streams += 1
        counts = counts[:500]
        numeric_flags = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for row in counts:
                ds = pr.encode(pr.ContingencyTable222(row.reshape(2, 2, 2)))
                regimes = pathological_regime_numeric(ds)
                numeric_flags.append(any(not r.is_empty for r in regimes.values()))
        assert sum(numeric_flags) == rows[0].ratio.successes
        exact_flags, _ = pathological_from_counts(counts)
        assert numeric_flags == exact_flags.tolist()


class TestAvgGamma:
    def test_loan_gamma_value(self):
        counts = np.array([[15, 10, 16, 27, 15, 14, 5, 8]])
        flags, gammas = pathological_from_counts(counts)
        assert flags[0]
        assert gammas[0] == pytest.approx(float(Fraction(3, 13)), rel=1e-15)

    def test_n1_exhaustive_enumeration(self):
        # all of D_1: eight one-hot tables; criterion verified by hand sums
        tables = np.eye(8, dtype=np.int64)
        flags, _ = pathological_from_counts(tables)
        expected = []
        for row in tables:
            s12 = row[3] + row[7]
            s11 = row[2] + row[3] + row[6] + row[7]
            s22 = row[1] + row[3] + row[5] + row[7]
            sy1 = row[6] + row[7]
            sy2 = row[5] + row[7]
            hit = (sy1 > 0 and s12 * sy2 > s22 * sy1) or (sy2 > 0 and s12 * sy1 > s11 * sy2)
            expected.append(hit)
        assert flags.tolist() == expected
        assert not any(expected)  # single observations never reverse

    def test_mean_gamma_increases_with_n(self):
        spec = ExperimentSpec(kind="avg_gamma_vs_n", sizes=(50, 100, 200, 400, 800),
                              m=10_000, scheme="uniform_composition", seed=4)
        rows = run_avg_gamma_experiment(spec)
        means = [r.mean_gamma for r in rows]
        assert means == sorted(means)  # rank correlation 1 with n
        for row in rows:
            assert row.lo < row.mean_gamma < row.hi
            assert row.n_pathological >= 30

    def test_insufficient_draws(self):
        spec = ExperimentSpec(kind="avg_gamma_vs_n", sizes=(50,), m=40,
                              scheme="uniform_composition", seed=5)
        with pytest.raises(pr.InsufficientPathologicalDraws):
            run_avg_gamma_experiment(spec)


class TestLogisticRatios:
    def test_simpson_all_flagged_small(self):
        spec = ExperimentSpec(kind="logistic_ratios", sizes=(200,), m=20,
                              scheme="dirichlet_rounded", seed=6)
        rows = run_logistic_ratio_experiment(spec)
        assert rows[0].simpson.estimate == 1.0
        assert rows[0].non_simpson.estimate < 0.35

    def test_threads_do_not_change_results(self):
        base = ExperimentSpec(kind="logistic_ratios", sizes=(150,), m=12,
                              scheme="dirichlet_rounded", seed=7, threads=1)
        threaded = ExperimentSpec(kind="logistic_ratios", sizes=(150,), m=12,
                                  scheme="dirichlet_rounded", seed=7, threads=4)
        a = run_logistic_ratio_experiment(base)
        b = run_logistic_ratio_experiment(threaded)
        assert a[0].simpson == b[0].simpson
        assert a[0].non_simpson == b[0].non_simpson


class TestCvDemo:
    def test_fixture_report(self, cv_table):
        ds = pr.encode(cv_table)
        spec = ExperimentSpec(kind="cv_demo", sizes=(600,), m=1, seed=DEFAULT_SEED)
        report = run_cv_demo(spec, ds)
        assert report.scan_pathological
        for j in (0, 1):
            assert report.baseline[(1, j)] < 0
            assert report.uniform.trends[(1, j)] > 0
            assert report.balanced.trends[(1, j)] > report.uniform.trends[(1, j)]
        assert (1, 0) in report.uniform.reversed_pairs
        assert report.uniform.chosen_in_regime
        assert report.balanced.chosen_in_regime
        doc = report.to_json()
        assert doc["uniform"]["chosen_c"] > 0

    def test_requires_simpson_dataset(self, loan_table):
        spec = ExperimentSpec(kind="cv_demo", sizes=(110,), m=1)
        with pytest.raises(pr.PathregError):
            run_cv_demo(spec, pr.encode(loan_table))


class TestOutputs:
    def test_layout_and_determinism(self, tmp_path):
        spec = ExperimentSpec(kind="ratio_vs_n", sizes=(80,), m=200,
                              scheme="uniform_composition", seed=8)
        rows = run_ridge_ratio_experiment(spec)
        first = write_experiment_outputs(spec, rows, tmp_path / "a", created_utc="T0")
        rows2 = run_ridge_ratio_experiment(spec)
        second = write_experiment_outputs(spec, rows2, tmp_path / "b", created_utc="T1")
        assert first["results"].read_bytes() == second["results"].read_bytes()
        assert first["summary"].read_bytes() == second["summary"].read_bytes()
        assert first["manifest"].read_bytes() != second["manifest"].read_bytes()
        summary = json.loads(first["summary"].read_text())
        assert summary["kind"] == "ratio_vs_n"
        assert summary["spec"]["seed"] == 8
        header = first["results"].read_text().splitlines()[0]
        assert header == "n,scheme,ratio,wilson_lo,wilson_hi,successes,m"

    def test_cv_demo_rows(self, cv_table, tmp_path):
        ds = pr.encode(cv_table)
        spec = ExperimentSpec(kind="cv_demo", sizes=(600,), m=1, seed=DEFAULT_SEED)
        report = run_cv_demo(spec, ds)
        paths = write_experiment_outputs(spec, [report], tmp_path, created_utc="T0")
        lines = paths["results"].read_text().splitlines()
        assert lines[0].startswith("arm,chosen_c")
        assert [l.split(",")[0] for l in lines[1:]] == ["baseline", "uniform", "balanced"]
