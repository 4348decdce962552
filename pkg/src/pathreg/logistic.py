"""L2-penalized logistic regression and grid-based reversal detection.

The objective is the weighted mean negative log-likelihood plus c*||beta||^2
with the intercept excluded from the penalty:

    L(b0, b) = (1/N) sum_j w_j * [log(1 + exp(z_j)) - y_j * z_j] + c*||b||^2,
    z_j = b0 + b . x_j.

Note the penalty is *added* and scaled by c (stronger regularization for
larger c), the opposite of inverse-strength conventions.  Fits use damped
Newton steps with a Cholesky solve of the penalized Hessian; identical rows
are collapsed into weighted patterns first, so the per-iteration cost depends
on the number of distinct rows (at most 8 for binary two-feature data), not
on N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DegenerateDataset, FoldDegenerate, IndexOutOfRange, WrongShape
from .tables import Dataset

GRAD_TOL = 1e-8
MAX_ITER = 200
REVERSAL_TOL = 1e-9

# Paper-default regularization grid, as a spec string.
DEFAULT_GRID_SPEC = "log:1e-8:1e-1:10,log:1e-1:1e6:150,log:1e6:1e8:40"


@dataclass(frozen=True)
class RegGrid:
    """Strictly increasing positive regularization values."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 2:
            raise ValueError("grid needs at least two points")
        if vals[0] <= 0 or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("grid must be strictly increasing and positive")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @classmethod
    def from_spec(cls, spec: str) -> "RegGrid":
        """Parse ``log:lo:hi:n`` segments joined by commas.

        Segment endpoints are inclusive; an exact duplicate at a seam is
        dropped so the combined grid stays strictly increasing.
        """
        points: list[float] = []
        for part in spec.split(","):
            fields = part.strip().split(":")
            if len(fields) != 4 or fields[0] != "log":
                raise ValueError(f"bad grid segment {part!r}; expected log:lo:hi:n")
            lo, hi, n = float(fields[1]), float(fields[2]), int(fields[3])
            if lo <= 0 or hi <= lo or n < 1:
                raise ValueError(f"bad grid segment {part!r}")
            seg = np.logspace(math.log10(lo), math.log10(hi), n)
            for v in seg:
                if points and v <= points[-1]:
                    if v == points[-1]:
                        continue
                    raise ValueError(f"grid segments out of order near {v}")
                points.append(float(v))
        return cls(tuple(points))

    @classmethod
    def paper_default(cls) -> "RegGrid":
        return cls.from_spec(DEFAULT_GRID_SPEC)


@dataclass(frozen=True)
class SampleWeights:
    """Positive per-row weights; balanced gives each class equal total mass."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if (vals <= 0).any():
            raise ValueError("weights must be strictly positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def uniform(cls, n: int) -> "SampleWeights":
        return cls(np.ones(n))

    @classmethod
    def balanced(cls, y01: np.ndarray) -> "SampleWeights":
        """w = N / (2 * N_class), so each class carries total weight N/2."""
        y01 = np.asarray(y01)
        n = y01.shape[0]
        n1 = int(y01.sum())
        n0 = n - n1
        if n0 == 0 or n1 == 0:
            raise DegenerateDataset("balanced weights need both classes present")
        w = np.where(y01 == 1, n / (2.0 * n1), n / (2.0 * n0))
        return cls(w)

    @classmethod
    def for_scheme(cls, scheme: str, y01: np.ndarray) -> "SampleWeights":
        if scheme == "uniform":
            return cls.uniform(len(y01))
        if scheme == "balanced":
            return cls.balanced(y01)
        raise ValueError(f"unknown weight scheme {scheme!r}")


@dataclass(frozen=True)
class LogisticModel:
    """A fitted penalized logit model with convergence diagnostics."""

    beta0: float
    beta: np.ndarray
    c: float
    converged: bool
    iterations: int
    final_gradient_norm: float

    def __post_init__(self) -> None:
        beta = np.array(self.beta, dtype=np.float64).reshape(-1)
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)

    @property
    def p(self) -> int:
        return int(self.beta.shape[0])

    def score(self, x_row: Sequence[float]) -> float:
        z = self.beta0 + float(np.dot(self.beta, np.asarray(x_row, dtype=np.float64)))
        return _sigma(z)

    def to_json(self) -> dict:
        return {
            "beta0": self.beta0,
            "beta": [float(b) for b in self.beta],
            "c": self.c,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def _sigma(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _compress(ds: Dataset, weights: SampleWeights) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collapse identical (x, y) rows into (design, target, weight-mass)."""
    x = ds.x.astype(np.float64)
    y = ds.y.astype(np.float64)
    rows = np.column_stack([y, x])
    patterns, inverse = np.unique(rows, axis=0, return_inverse=True)
    mass = np.bincount(inverse, weights=weights.values, minlength=patterns.shape[0])
    return patterns[:, 1:], patterns[:, 0], mass


def _objective(z: np.ndarray, yv: np.ndarray, mass: np.ndarray, n: int,
               c: float, beta: np.ndarray) -> float:
    nll = float(np.dot(mass, np.logaddexp(0.0, z) - yv * z)) / n
    return nll + c * float(np.dot(beta, beta))


def fit_logistic(
    ds: Dataset,
    c: float,
    weights: SampleWeights | None = None,
    start: LogisticModel | None = None,
) -> LogisticModel:
    """Minimize the penalized objective by damped Newton iterations.

    Accepted steps strictly decrease the objective (step halving), the Newton
    system is solved by Cholesky with an escalating jitter re-try on
    factorization failure, and iteration stops at gradient norm < 1e-8 or
    after 200 steps.  Non-convergence (expected for c = 0 on separable data)
    is flagged, not raised; the best iterate is returned.  ``start`` warm
    starts the iteration, e.g. from the previous point of a grid sweep.
    """
    if c < 0:
        raise ValueError(f"penalty scale must be >= 0, got {c}")
    y01 = ds.bits()[0]
    if y01.min() == y01.max():
        raise DegenerateDataset("both response classes must be present")
    if weights is None:
        weights = SampleWeights.uniform(ds.n)
    if weights.values.shape[0] != ds.n:
        raise WrongShape(f"{weights.values.shape[0]} weights for {ds.n} rows")

    xv, yv, mass = _compress(ds, weights)
    n = ds.n
    p = ds.p
    zdim = p + 1
    design = np.column_stack([np.ones(xv.shape[0]), xv])
    penalty = 2.0 * c * np.diag([0.0] + [1.0] * p)

    if start is not None and start.p == p:
        theta = np.concatenate([[start.beta0], start.beta])
    else:
        theta = np.zeros(zdim)

    def obj(t: np.ndarray) -> float:
        return _objective(design @ t, yv, mass, n, c, t[1:])

    current = obj(theta)
    grad_norm = math.inf
    iterations = 0
    converged = False
    for iterations in range(1, MAX_ITER + 1):
        z = design @ theta
        mu = 1.0 / (1.0 + np.exp(-z))
        grad = design.T @ (mass * (mu - yv)) / n + penalty @ theta
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < GRAD_TOL:
            converged = True
            iterations -= 1
            break
        hess = (design * (mass * mu * (1.0 - mu))[:, None]).T @ design / n + penalty
        step = _solve_spd(hess, grad)
        # Halve until the objective strictly decreases.
        scale = 1.0
        proposed = theta - step
        candidate = obj(proposed)
        halvings = 0
        while candidate >= current and halvings < 60:
            scale *= 0.5
            halvings += 1
            proposed = theta - scale * step
            candidate = obj(proposed)
        if candidate >= current:
            break  # no descent direction left at float resolution
        theta = proposed
        current = candidate

    return LogisticModel(
        beta0=float(theta[0]),
        beta=theta[1:],
        c=float(c),
        converged=converged,
        iterations=iterations,
        final_gradient_norm=grad_norm,
    )


def _solve_spd(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    jitter = 0.0
    for attempt in range(5):
        try:
            h = hess if jitter == 0.0 else hess + jitter * np.eye(hess.shape[0])
            return cho_solve(cho_factor(h), grad)
        except LinAlgError:
            jitter = 1e-12 * (100.0**attempt) if jitter else 1e-12
    # Last resort: steepest descent direction, scaled conservatively.
    return grad / max(float(np.abs(hess).max()), 1.0)


def objective_value(ds: Dataset, model: LogisticModel,
                    weights: SampleWeights | None = None) -> float:
    """Penalized objective of a model on a dataset (test/diagnostic helper)."""
    if weights is None:
        weights = SampleWeights.uniform(ds.n)
    xv, yv, mass = _compress(ds, weights)
    z = model.beta0 + xv @ model.beta
    return _objective(z, yv, mass, ds.n, model.c, model.beta)


def objective_gradient(ds: Dataset, model: LogisticModel,
                       weights: SampleWeights | None = None) -> np.ndarray:
    """Gradient of the penalized objective at the model's parameters."""
    if weights is None:
        weights = SampleWeights.uniform(ds.n)
    xv, yv, mass = _compress(ds, weights)
    design = np.column_stack([np.ones(xv.shape[0]), xv])
    theta = np.concatenate([[model.beta0], model.beta])
    z = design @ theta
    mu = 1.0 / (1.0 + np.exp(-z))
    penalty = 2.0 * model.c * np.concatenate([[0.0], model.beta])
    return design.T @ (mass * (mu - yv)) / ds.n + penalty


def trend_indicator_logistic(model: LogisticModel, i: int, j: int) -> float:
    """T_{X_i = j}: score difference over the other feature's two values.

    Returns sigma(b0 + b.x(0)) - sigma(b0 + b.x(1)) where x(k) has X_i = j
    and the other feature equal to k.  Monotonicity of sigma makes the sign
    equal to -sign(beta_other) for every j.
    """
    if model.p != 2:
        raise WrongShape(f"trend indicator defined for p = 2, got p = {model.p}")
    if i not in (1, 2):
        raise IndexOutOfRange(f"variable index {i} outside 1..2")
    if j not in (0, 1):
        raise IndexOutOfRange(f"conditioning value {j} must be 0 or 1")
    x0 = [0.0, 0.0]
    x1 = [0.0, 0.0]
    x0[i - 1] = x1[i - 1] = float(j)
    other = 2 - i  # 0-based position of the varied feature
    x0[other] = 0.0
    x1[other] = 1.0
    return model.score(x0) - model.score(x1)


@dataclass(frozen=True)
class GridPoint:
    """One fitted grid value with its four trend indicators."""

    c: float
    converged: bool
    trends: dict[tuple[int, int], float]


@dataclass(frozen=True)
class ScanResult:
    """Outcome of a reversal scan across the regularization grid.

    ``regimes`` maps (i, j) to grid-resolution reversal intervals; a run of
    reversed grid points is reported as the span between its non-reversed
    neighbors (clipped to the grid), since refitting is too costly to bisect.
    Non-converged grid points contribute no sign evidence.
    """

    pathological: bool
    baseline: dict[tuple[int, int], float]
    regimes: dict[tuple[int, int], "Regime"]
    most_reversed: tuple[int, int, float, float] | None
    grid: RegGrid
    points: tuple[GridPoint, ...]

    def direction_pathological(self, i: int) -> bool:
        """True when either conditioning value of variable i shows a reversal."""
        return any(not self.regimes[(i, j)].is_empty for j in (0, 1))

    def to_json(self) -> dict:
        return {
            "pathological": self.pathological,
            "baseline": {f"{i},{j}": v for (i, j), v in self.baseline.items()},
            "regimes": [
                dict(regime.to_json(variable=i), conditioning=j)
                for (i, j), regime in self.regimes.items()
            ],
            "most_reversed": (
                None
                if self.most_reversed is None
                else {
                    "variable": self.most_reversed[0],
                    "conditioning": self.most_reversed[1],
                    "c": self.most_reversed[2],
                    "trend": self.most_reversed[3],
                }
            ),
        }


def scan_pathological_logistic(
    ds: Dataset,
    grid: RegGrid | None = None,
    weights: SampleWeights | None = None,
) -> ScanResult:
    """Warm-started grid sweep testing every T_{X_i=j} for sign reversal.

    The baseline ("true trend" proxy) is the trend at the smallest grid
    value, where the penalty is negligible.  A dataset is pathological when
    some later grid point shows the strictly opposite sign with magnitude
    above 1e-9; the same magnitude floor is applied to the baseline so that
    numerically-zero trends are never counted as sign evidence.
    """
    from .ridge import Interval, Regime  # shared regime containers

    grid = RegGrid.paper_default() if grid is None else grid
    points: list[GridPoint] = []
    model: LogisticModel | None = None
    pairs = [(i, j) for i in (1, 2) for j in (0, 1)]
    for c in grid:
        model = fit_logistic(ds, c, weights=weights, start=model)
        points.append(
            GridPoint(
                c=c,
                converged=model.converged,
                trends={(i, j): trend_indicator_logistic(model, i, j) for i, j in pairs},
            )
        )

    baseline_point = next((pt for pt in points if pt.converged), points[0])
    baseline = dict(baseline_point.trends)
    regimes: dict[tuple[int, int], Regime] = {}
    most: tuple[int, int, float, float] | None = None
    pathological = False
    cs = list(grid)
    for pair in pairs:
        base = baseline[pair]
        if abs(base) <= REVERSAL_TOL:
            regimes[pair] = Regime(degenerate_true_trend=True)
            continue
        want = -1 if base > 0 else 1
        reversed_mask = [
            pt.converged
            and abs(pt.trends[pair]) > REVERSAL_TOL
            and (1 if pt.trends[pair] > 0 else -1) == want
            for pt in points
        ]
        spans: list[tuple[float, float]] = []
        for start, stop in _mask_runs(reversed_mask):
            # Bracket each run by its non-reversed neighbors: the sign change
            # happens somewhere in between, and we do not refit to bisect.
            lo = cs[start - 1] if start > 0 else cs[0]
            hi = cs[stop + 1] if stop < len(cs) - 1 else cs[-1]
            spans.append((lo, hi))
            pathological = True
            for idx in range(start, stop + 1):
                value = points[idx].trends[pair]
                if most is None or abs(value) > abs(most[3]):
                    most = (pair[0], pair[1], cs[idx], value)
        regimes[pair] = Regime(intervals=tuple(_merge_spans(spans)))

    return ScanResult(
        pathological=pathological,
        baseline=baseline,
        regimes=regimes,
        most_reversed=most,
        grid=grid,
        points=tuple(points),
    )


def _merge_spans(spans: Sequence[tuple[float, float]]) -> list["Interval"]:
    """Union touching or overlapping (lo, hi) spans into disjoint intervals."""
    from .ridge import Interval

    merged: list[list[float]] = []
    for lo, hi in sorted(spans):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [Interval(lo=lo, hi=hi) for lo, hi in merged if hi > lo]


def _mask_runs(mask: Sequence[bool]) -> list[tuple[int, int]]:
    runs = []
    start = None
    for idx, flag in enumerate(mask):
        if flag and start is None:
            start = idx
        elif not flag and start is not None:
            runs.append((start, idx - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CvResult:
    """Chosen penalty, the full-data refit, and the per-fold score matrix."""

    c: float
    model: LogisticModel
    grid: RegGrid
    fold_scores: np.ndarray  # shape (n_grid, k)
    mean_scores: np.ndarray  # shape (n_grid,)

    def __post_init__(self) -> None:
        for name in ("fold_scores", "mean_scores"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def stratified_folds(y01: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified k-fold assignment; class-wise shuffled splits."""
    if k < 2:
        raise ValueError(f"fold count must be >= 2, got {k}")
    n = len(y01)
    if n < 2 * k:
        raise FoldDegenerate(f"need at least {2 * k} rows for {k} folds, got {n}")
    rng = np.random.Generator(np.random.Philox(key=(seed & (2**64 - 1), 0xF01D)))
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = np.flatnonzero(y01 == cls)
        if len(idx) < 2:
            raise FoldDegenerate(f"class {cls} has {len(idx)} rows; stratification impossible")
        idx = idx[rng.permutation(len(idx))]
        for pos, row in enumerate(idx):
            folds[pos % k].append(int(row))
    out = [np.sort(np.array(f, dtype=np.int64)) for f in folds]
    for fold_id, fold in enumerate(out):
        train_y = np.delete(y01, fold)
        if train_y.min() == train_y.max():
            raise FoldDegenerate(f"training split for fold {fold_id} has one class")
    return out


def _accuracy(model: LogisticModel, x: np.ndarray, y01: np.ndarray) -> float:
    z = model.beta0 + x.astype(np.float64) @ model.beta
    pred = (z > 0).astype(np.int64)
    return float((pred == y01).mean())


def fit_logistic_cv(
    ds: Dataset,
    grid: RegGrid | None = None,
    k: int = 5,
    weight_scheme: Literal["uniform", "balanced"] = "uniform",
    seed: int = 0,
) -> CvResult:
    """Pick the penalty by stratified k-fold validation accuracy.

    Fold splits are a pure function of the seed.  Fits on each training
    split use weights computed on that split; validation accuracy is
    unweighted.  Ties in mean accuracy resolve toward the *larger* penalty
    (stronger regularization), and the returned model is refit on the full
    dataset at the chosen value.
    """
    grid = RegGrid.paper_default() if grid is None else grid
    y01 = ds.bits()[0]
    folds = stratified_folds(y01, k, seed)
    n_grid = len(grid)
    scores = np.zeros((n_grid, k))
    all_rows = np.arange(ds.n)
    for fold_id, fold in enumerate(folds):
        train_rows = np.setdiff1d(all_rows, fold)
        train = Dataset(ds.y[train_rows], ds.x[train_rows], encoding=ds.encoding)
        val_x = ds.x[fold]
        val_y = y01[fold]
        weights = SampleWeights.for_scheme(weight_scheme, train.bits()[0])
        model: LogisticModel | None = None
        for ci, c in enumerate(grid):
            model = fit_logistic(train, c, weights=weights, start=model)
            scores[ci, fold_id] = _accuracy(model, val_x, val_y)
    mean_scores = scores.mean(axis=1)
    best = max(zip(mean_scores, grid.values), key=lambda t: (t[0], t[1]))
    chosen = best[1]
    final_weights = SampleWeights.for_scheme(weight_scheme, y01)
    final = fit_logistic(ds, chosen, weights=final_weights)
    return CvResult(c=chosen, model=final, grid=grid, fold_scores=scores, mean_scores=mean_scores)
