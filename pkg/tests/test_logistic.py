import math

import numpy as np
import pytest

import pathreg as pr
from pathreg.logistic import (
    GRAD_TOL,
    RegGrid,
    SampleWeights,
    fit_logistic,
    fit_logistic_cv,
    objective_gradient,
    objective_value,
    scan_pathological_logistic,
    stratified_folds,
    trend_indicator_logistic,
)

from conftest import random_table


def random_dataset(rng, min_count=1, max_count=25) -> pr.Dataset:
    while True:
        counts = rng.integers(min_count, max_count + 1, size=(2, 2, 2))
        table = pr.ContingencyTable222(counts)
        ds = pr.encode(table)
        y = ds.bits()[0]
        if y.min() != y.max():
            return ds


class TestRegGrid:
    def test_paper_default(self):
        grid = RegGrid.paper_default()
        vals = np.array(grid.values)
        assert vals[0] == 1e-8 and vals[-1] == 1e8
        assert len(grid) == 198  # two seam duplicates dropped from 10+150+40
        assert (np.diff(vals) > 0).all()
        assert np.isclose(vals, 0.1).any() and np.isclose(vals, 1e6).any()

    def test_segment_counts(self):
        grid = np.array(RegGrid.paper_default().values)
        assert (grid <= 0.1).sum() == 10
        assert ((grid >= 0.1) & (grid <= 1e6)).sum() == 150
        assert (grid >= 1e6).sum() == 40

    def test_from_spec_errors(self):
        with pytest.raises(ValueError):
            RegGrid.from_spec("lin:1:2:5")
        with pytest.raises(ValueError):
            RegGrid.from_spec("log:1:0.5:5")
        with pytest.raises(ValueError):
            RegGrid.from_spec("log:1e2:1e4:5,log:1e0:1e1:5")

    def test_validation(self):
        with pytest.raises(ValueError):
            RegGrid((1.0,))
        with pytest.raises(ValueError):
            RegGrid((1.0, 1.0))
        with pytest.raises(ValueError):
            RegGrid((-1.0, 1.0))


class TestSampleWeights:
    def test_balanced_class_mass(self):
        y = np.array([0, 0, 0, 1])
        w = SampleWeights.balanced(y).values
        assert w[y == 0].sum() + w[y == 1].sum() == pytest.approx(4.0, abs=1e-9)
        assert w[y == 0].sum() == pytest.approx(2.0, abs=1e-9)

    def test_balanced_equals_uniform_for_equal_counts(self):
        y = np.array([0, 1, 0, 1])
        assert np.array_equal(SampleWeights.balanced(y).values, np.ones(4))

    def test_positive_required(self):
        with pytest.raises(ValueError):
            SampleWeights(np.array([1.0, 0.0]))

    def test_single_class_rejected(self):
        with pytest.raises(pr.DegenerateDataset):
            SampleWeights.balanced(np.zeros(4, dtype=int))


class TestFitLogistic:
    def test_heavy_penalty_limit(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            ds = random_dataset(rng)
            m = fit_logistic(ds, 1e8)
            y = ds.bits()[0]
            n1, n0 = int(y.sum()), int((1 - y).sum())
            assert np.linalg.norm(m.beta) < 1e-3
            assert m.beta0 == pytest.approx(math.log(n1 / n0), abs=1e-3)

    def test_y_swap_symmetric_dataset(self):
        counts = np.array([7, 3, 4, 9, 7, 3, 4, 9]).reshape(2, 2, 2)
        ds = pr.encode(pr.ContingencyTable222(counts))
        m = fit_logistic(ds, 0.5)
        assert m.beta0 == pytest.approx(0.0, abs=1e-8)
        assert np.abs(m.beta).max() == pytest.approx(0.0, abs=1e-8)

    def test_gradient_at_optimum(self):
        rng = np.random.default_rng(1)
        for trial in range(40):
            ds = random_dataset(rng)
            c = 10 ** rng.uniform(-5, 3)
            w = SampleWeights.balanced(ds.bits()[0]) if trial % 2 else None
            m = fit_logistic(ds, c, weights=w)
            assert m.converged
            assert np.linalg.norm(objective_gradient(ds, m, weights=w)) < GRAD_TOL

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        h = 1e-6
        for trial in range(100):
            ds = random_dataset(rng)
            c = 10 ** rng.uniform(-4, 2)
            w = SampleWeights.balanced(ds.bits()[0]) if trial % 3 == 0 else None
            theta = rng.normal(scale=0.8, size=3)
            model = pr.LogisticModel(beta0=theta[0], beta=theta[1:], c=c,
                                     converged=True, iterations=0, final_gradient_norm=0.0)
            grad = objective_gradient(ds, model, weights=w)
            fd = np.zeros(3)
            for k in range(3):
                up, dn = theta.copy(), theta.copy()
                up[k] += h
                dn[k] -= h
                mu = pr.LogisticModel(beta0=up[0], beta=up[1:], c=c, converged=True,
                                      iterations=0, final_gradient_norm=0.0)
                md = pr.LogisticModel(beta0=dn[0], beta=dn[1:], c=c, converged=True,
                                      iterations=0, final_gradient_norm=0.0)
                fd[k] = (objective_value(ds, mu, weights=w)
                         - objective_value(ds, md, weights=w)) / (2 * h)
            scale = max(np.abs(grad).max(), 1e-8)
            assert np.abs(fd - grad).max() <= 1e-5 * scale

    def test_objective_never_exceeds_zero_start(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            ds = random_dataset(rng)
            c = 10 ** rng.uniform(-6, 4)
            m = fit_logistic(ds, c)
            zero = pr.LogisticModel(beta0=0.0, beta=np.zeros(2), c=c, converged=True,
                                    iterations=0, final_gradient_norm=0.0)
            assert objective_value(ds, m) <= objective_value(ds, zero) + 1e-12

    def test_two_starts_agree(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            ds = random_dataset(rng)
            c = 10 ** rng.uniform(-3, 3)
            cold = fit_logistic(ds, c)
            warm_src = fit_logistic(ds, c * 7.3)
            warm = fit_logistic(ds, c, start=warm_src)
            assert cold.converged and warm.converged
            assert abs(cold.beta0 - warm.beta0) < 1e-6
            assert np.abs(cold.beta - warm.beta).max() < 1e-6

    def test_separable_unpenalized_terminates(self):
        # y == x1 exactly: the c = 0 likelihood has no finite optimum; the
        # fit must still terminate with a finite saturated iterate (the
        # gradient vanishes exponentially, so the norm criterion can fire)
        ds = pr.Dataset(y=[0] * 10 + [1] * 10,
                        x=[[0, k % 2] for k in range(10)] + [[1, k % 2] for k in range(10)])
        m = fit_logistic(ds, 0.0)
        assert np.isfinite(m.beta).all() and np.isfinite(m.beta0)
        assert np.abs(m.beta).max() > 10  # saturation, not a finite optimum
        assert objective_value(ds, m) < 1e-6  # near the separable infimum 0

    def test_single_class_raises(self):
        ds = pr.Dataset(y=[0, 0, 0], x=[[0, 1], [1, 0], [1, 1]])
        with pytest.raises(pr.DegenerateDataset):
            fit_logistic(ds, 1.0)

    def test_negative_penalty_rejected(self):
        ds = pr.Dataset(y=[0, 1], x=[[0, 1], [1, 0]])
        with pytest.raises(ValueError):
            fit_logistic(ds, -1.0)

    def test_weight_length_checked(self):
        ds = pr.Dataset(y=[0, 1], x=[[0, 1], [1, 0]])
        with pytest.raises(pr.WrongShape):
            fit_logistic(ds, 1.0, weights=SampleWeights(np.ones(3)))


class TestTrendIndicator:
    def test_zero_coefficients_give_zero(self):
        m = pr.LogisticModel(beta0=0.7, beta=np.zeros(2), c=1.0, converged=True,
                             iterations=0, final_gradient_norm=0.0)
        for i in (1, 2):
            for j in (0, 1):
                assert trend_indicator_logistic(m, i, j) == 0.0

    def test_sign_tracks_other_coefficient(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            b0, b1, b2 = rng.normal(size=3)
            m = pr.LogisticModel(beta0=b0, beta=np.array([b1, b2]), c=1.0,
                                 converged=True, iterations=0, final_gradient_norm=0.0)
            for j in (0, 1):
                if b2 != 0:
                    assert math.copysign(1, trend_indicator_logistic(m, 1, j)) == -math.copysign(1, b2)
                if b1 != 0:
                    assert math.copysign(1, trend_indicator_logistic(m, 2, j)) == -math.copysign(1, b1)

    def test_explicit_formula(self):
        m = pr.LogisticModel(beta0=0.2, beta=np.array([0.5, -0.3]), c=1.0,
                             converged=True, iterations=0, final_gradient_norm=0.0)

        def sigma(z):
            return 1 / (1 + math.exp(-z))

        expected = sigma(0.2 + 0.5) - sigma(0.2 + 0.5 - 0.3)
        assert trend_indicator_logistic(m, 1, 1) == pytest.approx(expected, abs=1e-15)

    def test_index_validation(self):
        m = pr.LogisticModel(beta0=0.0, beta=np.zeros(2), c=1.0, converged=True,
                             iterations=0, final_gradient_norm=0.0)
        with pytest.raises(pr.IndexOutOfRange):
            trend_indicator_logistic(m, 3, 0)
        with pytest.raises(pr.IndexOutOfRange):
            trend_indicator_logistic(m, 1, 2)

    def test_fixture_baseline_trends(self, cv_table):
        ds = pr.encode(cv_table)
        m = fit_logistic(ds, RegGrid.paper_default().values[0])
        t_a = trend_indicator_logistic(m, 1, 0)
        t_b = trend_indicator_logistic(m, 1, 1)
        assert t_a == pytest.approx(-0.196, abs=0.05)
        assert t_b == pytest.approx(-0.234, abs=0.05)


class TestScan:
    def test_fixture_is_pathological(self, cv_table):
        result = scan_pathological_logistic(pr.encode(cv_table))
        assert result.pathological
        assert result.direction_pathological(1)
        for j in (0, 1):
            assert not result.regimes[(1, j)].is_empty
        assert result.most_reversed is not None

    def test_zero_column_not_pathological(self):
        counts = np.zeros((2, 2, 2), dtype=int)
        counts[0, 0, 0], counts[0, 1, 0] = 20, 10
        counts[1, 0, 0], counts[1, 1, 0] = 10, 20
        ds = pr.encode(pr.ContingencyTable222(counts))
        result = scan_pathological_logistic(ds)
        assert not result.pathological
        # x2 is constant: conditioning on x1 compares never-observed levels,
        # and the penalized coefficient is exactly zero
        for j in (0, 1):
            assert result.regimes[(1, j)].degenerate_true_trend

    def test_warm_equals_cold_along_grid(self):
        rng = np.random.default_rng(6)
        grid = RegGrid.from_spec("log:1e-6:1e4:25")
        for _ in range(50):
            ds = random_dataset(rng)
            warm = None
            for c in grid:
                warm = fit_logistic(ds, c, start=warm)
                cold = fit_logistic(ds, c)
                assert abs(warm.beta0 - cold.beta0) < 1e-6
                assert np.abs(warm.beta - cold.beta).max() < 1e-6

    def test_monotone_dataset_not_pathological(self):
        table = pr.ContingencyTable222(np.array([[[20, 10], [15, 5]], [[5, 15], [10, 20]]]))
        result = scan_pathological_logistic(pr.encode(table))
        assert not result.pathological

    def test_scan_report_json(self, cv_table):
        doc = scan_pathological_logistic(pr.encode(cv_table)).to_json()
        assert doc["pathological"] is True
        assert set(doc["baseline"]) == {"1,0", "1,1", "2,0", "2,1"}
        assert doc["most_reversed"]["c"] > 0


class TestCrossValidation:
    def test_perfectly_separated_by_x1(self):
        # y == x1 with balanced classes: every grid value classifies
        # perfectly, so the tie-break picks the largest one
        counts = np.zeros((2, 2, 2), dtype=int)
        counts[0, 0, 0] = counts[0, 0, 1] = 15
        counts[1, 1, 0] = counts[1, 1, 1] = 15
        ds = pr.encode(pr.ContingencyTable222(counts))
        grid = RegGrid.from_spec("log:1e-4:1e8:15")
        cv = fit_logistic_cv(ds, grid=grid, k=5, seed=3)
        assert cv.c == grid.values[-1]
        assert cv.fold_scores.min() == 1.0

    def test_deterministic_in_seed(self, cv_table):
        ds = pr.encode(cv_table)
        grid = RegGrid.from_spec("log:1e-6:1e6:20")
        a = fit_logistic_cv(ds, grid=grid, k=5, seed=42)
        b = fit_logistic_cv(ds, grid=grid, k=5, seed=42)
        assert a.c == b.c
        assert np.array_equal(a.fold_scores, b.fold_scores)

    def test_seed_changes_folds(self):
        y = np.arange(40) % 2
        folds_a = stratified_folds(y, 5, seed=1)
        folds_b = stratified_folds(y, 5, seed=2)
        assert any(not np.array_equal(fa, fb) for fa, fb in zip(folds_a, folds_b))

    def test_stratification(self):
        rng = np.random.default_rng(7)
        y = (rng.random(53) < 0.3).astype(int)
        folds = stratified_folds(y, 5, seed=9)
        assert sorted(np.concatenate(folds).tolist()) == list(range(53))
        for fold in folds:
            train = np.delete(y, fold)
            assert train.min() == 0 and train.max() == 1

    def test_fold_degenerate(self):
        y = np.array([0] * 20 + [1])
        with pytest.raises(pr.FoldDegenerate):
            stratified_folds(y, 5, seed=0)
        with pytest.raises(pr.FoldDegenerate):
            stratified_folds(np.array([0, 1] * 3), 4, seed=0)

    def test_balanced_equals_uniform_when_classes_balanced(self):
        counts = np.array([[[10, 5], [5, 10]], [[5, 10], [10, 5]]])
        ds = pr.encode(pr.ContingencyTable222(counts))
        grid = RegGrid.from_spec("log:1e-4:1e4:10")
        uni = fit_logistic_cv(ds, grid=grid, k=5, weight_scheme="uniform", seed=11)
        bal = fit_logistic_cv(ds, grid=grid, k=5, weight_scheme="balanced", seed=11)
        assert uni.c == bal.c
        assert np.array_equal(uni.fold_scores, bal.fold_scores)
        assert uni.model.beta0 == pytest.approx(bal.model.beta0, abs=1e-12)

    def test_tie_break_prefers_larger_c(self):
        scores = np.array([0.8, 0.9, 0.9, 0.7])
        cs = (0.1, 1.0, 10.0, 100.0)
        best = max(zip(scores, cs), key=lambda t: (t[0], t[1]))
        assert best[1] == 10.0  # documents the argmax convention used
