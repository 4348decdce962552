"""Ridge regression paths, trend indicators, and pathological regimes.

For two binary features the ridge path has the explicit form

    beta_i(c) = (sy_i * c + (s_oo * sy_i - s12 * sy_o)) / D(c)
    D(c)      = c^2 + c*(s11 + s22) + s11*s22 - s12^2

where ``o`` is the other index and the s/sy values are the five sufficient
statistics of the data.  The numerator is linear in c, so each path crosses
zero at most once; a positive crossing at

    gamma = (s12 * sy_o - s_oo * sy_i) / sy_i

makes the trend indicator of the *other* variable reverse sign on
(gamma, inf).  Everything in this module that decides a sign for integral
data does so in exact rational arithmetic; floats appear only in sampled
curves and in the generic p-feature solver.

Variable indices in the public API are 1-based.  For p = 2 the trend of
variable i is read off the other path (T_i = -beta_other); for p > 2 it is
read off the path of i itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DegenerateDesign, GridTooCoarse, IndexOutOfRange, WrongShape
from .tables import Dataset

Number = Fraction | float

# Default scan grid for the numeric regime finder.
GRID_LO = 1e-6
GRID_HI = 1e8
GRID_POINTS = 200

BISECT_REL_TOL = 1e-10


def default_grid() -> np.ndarray:
    return np.logspace(math.log10(GRID_LO), math.log10(GRID_HI), GRID_POINTS)


def _other(i: int) -> int:
    return 3 - i


def _check_var(i: int, p: int) -> None:
    if not 1 <= i <= p:
        raise IndexOutOfRange(f"variable index {i} outside 1..{p}")


# ---------------------------------------------------------------------------
# Sufficient statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RidgeSummary:
    """The five sums that determine a two-feature ridge path, held exactly.

    For an (a, b)-encoded dataset every sum is a polynomial in a and b with
    integer coefficients (bit counts), so the values are exact rationals
    whenever a and b are; the default (0, 1) encoding gives plain integers.
    ``centered=True`` builds the mean-centered analogue used by the
    intercept variant.
    """

    s12: Fraction
    s11: Fraction
    s22: Fraction
    sy1: Fraction
    sy2: Fraction

    def __post_init__(self) -> None:
        if self.s12 * self.s12 > self.s11 * self.s22:
            raise ValueError("Cauchy-Schwarz violated: s12^2 > s11*s22")

    @classmethod
    def from_dataset(cls, ds: Dataset, centered: bool = False) -> "RidgeSummary":
        if ds.p != 2:
            raise WrongShape(f"RidgeSummary needs p = 2, got p = {ds.p}")
        a = Fraction(ds.encoding[0])
        b = Fraction(ds.encoding[1])
        w, u = ds.bits()
        u1, u2 = u[:, 0], u[:, 1]
        n = ds.n
        c1, c2, cy = int(u1.sum()), int(u2.sum()), int(w.sum())
        c12 = int((u1 & u2).sum())
        c1y = int((u1 & w).sum())
        c2y = int((u2 & w).sum())
        d = b - a

        def cross(ci: int, cj: int, cij: int) -> Fraction:
            # sum over rows of (a + d*bit_i)(a + d*bit_j)
            return n * a * a + a * d * (ci + cj) + d * d * cij

        s12 = cross(c1, c2, c12)
        s11 = cross(c1, c1, c1)
        s22 = cross(c2, c2, c2)
        sy1 = cross(c1, cy, c1y)
        sy2 = cross(c2, cy, c2y)
        if centered:
            sx1 = n * a + d * c1
            sx2 = n * a + d * c2
            sy = n * a + d * cy
            s12 -= Fraction(sx1 * sx2, n)
            s11 -= Fraction(sx1 * sx1, n)
            s22 -= Fraction(sx2 * sx2, n)
            sy1 -= Fraction(sx1 * sy, n)
            sy2 -= Fraction(sx2 * sy, n)
        return cls(s12=s12, s11=s11, s22=s22, sy1=sy1, sy2=sy2)

    def sy(self, i: int) -> Fraction:
        return self.sy1 if i == 1 else self.sy2

    def s_diag(self, i: int) -> Fraction:
        return self.s11 if i == 1 else self.s22

    def denominator(self, c: Number) -> Number:
        return c * c + c * (self.s11 + self.s22) + self.s11 * self.s22 - self.s12 * self.s12

    def numerator(self, i: int, c: Number) -> Number:
        """Numerator of path i at c: sy_i*c + (s_oo*sy_i - s12*sy_o)."""
        o = _other(i)
        return self.sy(i) * c + (self.s_diag(o) * self.sy(i) - self.s12 * self.sy(o))

    def path_value(self, i: int, c: Number) -> Fraction:
        """Exact path value beta_i(c); requires D(c) != 0."""
        num = Fraction(self.numerator(i, Fraction(c)))
        den = Fraction(self.denominator(Fraction(c)))
        return num / den


# ---------------------------------------------------------------------------
# Estimates, regimes, curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RidgeEstimate:
    """A fitted ridge coefficient vector at one regularization value.

    ``c = 0`` denotes the minimum-norm least-squares limit of the path.
    With an intercept the coefficients refer to column-centered inputs and
    ``intercept`` is the response mean.
    """

    beta: np.ndarray
    c: float
    intercept: float | None = None

    def __post_init__(self) -> None:
        beta = np.array(self.beta, dtype=np.float64).reshape(-1)
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)

    @property
    def p(self) -> int:
        return int(self.beta.shape[0])


@dataclass(frozen=True)
class Interval:
    """Open interval (lo, hi) in c-space; ``hi = inf`` marks an unbounded end.

    Endpoints are exact Fractions when produced by the algebraic criterion
    and floats when produced by the grid scanner.
    """

    lo: Number
    hi: Number

    def __post_init__(self) -> None:
        if self.lo < 0:
            raise ValueError(f"interval start {self.lo} < 0")
        if not self.hi > self.lo:
            raise ValueError(f"empty interval ({self.lo}, {self.hi})")

    @property
    def unbounded(self) -> bool:
        return self.hi == math.inf

    def contains(self, c: float) -> bool:
        return self.lo < c < self.hi

    def to_json(self) -> dict[str, Any]:
        return {"lo": _endpoint_json(self.lo), "hi": _endpoint_json(self.hi)}


def _endpoint_json(v: Number) -> Any:
    if isinstance(v, Fraction):
        return {"num": v.numerator, "den": v.denominator}
    if v == math.inf:
        return None
    return float(v)


@dataclass(frozen=True)
class Regime:
    """A pathological regularization regime: disjoint open intervals in (0, inf).

    ``degenerate_true_trend`` marks variables whose no-regularization trend
    carries no usable sign (it is zero, or the path is constant), so the
    reversal question is vacuous and the regime is reported empty.
    """

    intervals: tuple[Interval, ...] = ()
    degenerate_true_trend: bool = False

    def __post_init__(self) -> None:
        for left, right in zip(self.intervals, self.intervals[1:]):
            if not left.hi < right.lo:
                raise ValueError("regime intervals must be sorted and disjoint")

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def gamma(self) -> Number | None:
        """Left endpoint of the first interval, if any."""
        return self.intervals[0].lo if self.intervals else None

    def contains(self, c: float) -> bool:
        return any(iv.contains(c) for iv in self.intervals)

    def to_json(self, variable: int) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "variable": variable,
            "intervals": [iv.to_json() for iv in self.intervals],
            "gamma_float": None if self.gamma is None else float(self.gamma),
        }
        if self.degenerate_true_trend:
            doc["degenerate_true_trend"] = True
        return doc


@dataclass(frozen=True)
class TrendCurve:
    """Sampled trend indicator c -> T_i(c) plus its no-regularization limit."""

    variable: int
    cs: np.ndarray
    values: np.ndarray
    true_trend: float

    def __post_init__(self) -> None:
        cs = np.asarray(self.cs, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if cs.shape != values.shape:
            raise WrongShape("curve sample arrays differ in length")
        if cs.size and ((cs <= 0).any() or (np.diff(cs) <= 0).any()):
            raise ValueError("curve c values must be positive and strictly increasing")
        cs.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "cs", cs)
        object.__setattr__(self, "values", values)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def _design(ds: Dataset, with_intercept: bool) -> tuple[np.ndarray, np.ndarray, float]:
    x = ds.x.astype(np.float64)
    y = ds.y.astype(np.float64)
    intercept = 0.0
    if with_intercept:
        intercept = float(y.mean())
        x = x - x.mean(axis=0)
        # Centering y is a no-op for the coefficients (columns sum to zero)
        # but improves conditioning of the small solve.
        y = y - intercept
    return x, y, intercept


def fit(ds: Dataset, c: float, with_intercept: bool = False) -> RidgeEstimate:
    """Solve (X^T X + c I) beta = X^T y by Cholesky; requires c > 0.

    The c = 0 limit is available through :func:`mls_beta` / :func:`true_trend`.
    """
    if not c > 0:
        raise ValueError(f"fit requires c > 0, got {c}; use true_trend for the limit")
    x, y, intercept = _design(ds, with_intercept)
    gram = x.T @ x + c * np.eye(ds.p)
    beta = cho_solve(cho_factor(gram), x.T @ y)
    return RidgeEstimate(beta=beta, c=float(c), intercept=intercept if with_intercept else None)


def mls_beta(ds: Dataset, with_intercept: bool = False) -> np.ndarray:
    """Minimum-norm least-squares coefficients, the c -> 0 limit of the path.

    Emits :class:`DegenerateDesign` when the Gram matrix is singular (the
    limit is then the minimum-length minimizer rather than the unique one).
    """
    x, y, _ = _design(ds, with_intercept)
    gram = x.T @ x
    if np.linalg.matrix_rank(gram) < ds.p:
        warnings.warn(
            "singular design at c=0; returning the minimum-norm solution",
            DegenerateDesign,
            stacklevel=2,
        )
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    return beta


def mls_beta_exact(summary: RidgeSummary) -> tuple[Fraction, Fraction] | None:
    """Exact two-feature MLS coefficients, or None when D(0) = 0."""
    d0 = summary.denominator(Fraction(0))
    if d0 == 0:
        return None
    return (
        Fraction(summary.numerator(1, Fraction(0))) / d0,
        Fraction(summary.numerator(2, Fraction(0))) / d0,
    )


def _path_index(variable: int, p: int) -> int:
    """Path whose sign drives the trend of ``variable``.

    For p = 2 the indicator T_i compares the two values of the other feature,
    so it reads the other path; for p > 2 it reads the path of the variable
    itself (all remaining features are held fixed and drop out).
    """
    return _other(variable) if p == 2 else variable


def trend_indicator(est: RidgeEstimate, i: int) -> float:
    """T_i for a fitted estimate: minus the driving path's coefficient."""
    if est.p < 2:
        raise WrongShape("trend indicators need at least two features")
    _check_var(i, est.p)
    return -float(est.beta[_path_index(i, est.p) - 1])


def true_trend(ds: Dataset, i: int, with_intercept: bool = False) -> float:
    """Trend indicator in the c -> 0 limit (the reference or "true" trend)."""
    if ds.p < 2:
        raise WrongShape("trend indicators need at least two features")
    _check_var(i, ds.p)
    path = _path_index(i, ds.p)
    if ds.p == 2:
        summary = RidgeSummary.from_dataset(ds, centered=with_intercept)
        exact = mls_beta_exact(summary)
        if exact is not None:
            return -float(exact[path - 1])
    return -float(mls_beta(ds, with_intercept)[path - 1])


def _true_trend_sign_exact(summary: RidgeSummary, variable: int) -> int | None:
    """Exact sign of the p = 2 true trend; None when D(0) = 0."""
    if summary.denominator(Fraction(0)) == 0:
        return None
    num = summary.numerator(_other(variable), Fraction(0))
    return -_sign(num)


def _sign(v: Any) -> int:
    return (v > 0) - (v < 0)


# ---------------------------------------------------------------------------
# Exact regime (two features)
# ---------------------------------------------------------------------------


def pathological_regime_exact(
    ds: Dataset, with_intercept: bool = False
) -> dict[int, Regime]:
    """Closed-form pathological regimes for both variables of a p = 2 dataset.

    Path i has numerator sy_i*c + K_i with K_i = s_oo*sy_i - s12*sy_o
    (centered sums for the intercept variant).  A strictly positive root
    gamma = -K_i/sy_i makes the trend of the other variable reverse on
    (gamma, inf); it exists iff s12*sy_o > s_oo*sy_i holds with the sign of
    sy_i taken into account, which reduces to gamma > 0.

    When sy_i = 0 the path never changes sign, so no reversal relative to
    the c -> 0 limit exists and the regime is empty; the variable is flagged
    ``degenerate_true_trend`` (likewise when the limit itself is exactly
    zero), keeping the verdict consistent with a grid sign-scan.
    """
    if ds.p != 2:
        raise WrongShape(f"exact criterion needs p = 2, got p = {ds.p}")
    summary = RidgeSummary.from_dataset(ds, centered=with_intercept)
    out: dict[int, Regime] = {}
    for path in (1, 2):
        variable = _other(path)
        t = summary.sy(path)
        k = summary.s_diag(_other(path)) * t - summary.s12 * summary.sy(_other(path))
        if t == 0:
            # Constant-sign (or identically zero) path: no reversal possible.
            out[variable] = Regime(degenerate_true_trend=True)
            continue
        gamma = -Fraction(k) / t
        if gamma > 0:
            out[variable] = Regime(intervals=(Interval(lo=gamma, hi=math.inf),))
        elif k == 0:
            # Root exactly at 0: the reference trend itself is zero.
            out[variable] = Regime(degenerate_true_trend=True)
        else:
            out[variable] = Regime()
    return out


# ---------------------------------------------------------------------------
# Numeric regime (any number of features)
# ---------------------------------------------------------------------------


def _trend_evaluator(
    ds: Dataset, variable: int, with_intercept: bool
) -> tuple[Callable[[float], float], Callable[[float], int]]:
    """Return (value, exact-or-float sign) callables for T_variable(c).

    For two integral features the sign callable works on the exact rational
    numerator, so bisection boundaries are placed within float resolution of
    the true crossing even when the terms nearly cancel.
    """
    p = ds.p
    path = _path_index(variable, p)
    if p == 2:
        summary = RidgeSummary.from_dataset(ds, centered=with_intercept)
        s_num = [float(v) for v in (summary.sy(path),)][0]
        k_num = float(
            summary.s_diag(_other(path)) * summary.sy(path)
            - summary.s12 * summary.sy(_other(path))
        )
        s11f, s22f, s12f = float(summary.s11), float(summary.s22), float(summary.s12)

        def value(c: float) -> float:
            den = c * c + c * (s11f + s22f) + s11f * s22f - s12f * s12f
            return -(s_num * c + k_num) / den

        def sign(c: float) -> int:
            # D(c) > 0 for c > 0, so only the numerator decides.
            return -_sign(summary.numerator(path, Fraction(c)))

        return value, sign

    x, y, _ = _design(ds, with_intercept)
    gram = x.T @ x
    xty = x.T @ y
    eye = np.eye(p)

    def value_general(c: float) -> float:
        beta = cho_solve(cho_factor(gram + c * eye), xty)
        return -float(beta[path - 1])

    def sign_general(c: float) -> int:
        return _sign(value_general(c))

    return value_general, sign_general


def _asymptotic_trend_sign(ds: Dataset, variable: int, with_intercept: bool) -> int:
    """Sign of T_variable(c) as c -> inf.

    The path expands as sum_m (-X^T X)^m X^T y / c^(m+1); the sign for large
    c is that of the first non-vanishing term's component.  A component that
    vanishes in every term is identically zero along the whole tail.
    """
    path = _path_index(variable, ds.p)
    x, y, _ = _design(ds, with_intercept)
    gram = x.T @ x
    v = x.T @ y
    scale = max(float(np.abs(v).max()), 1.0)
    for _ in range(ds.p + 1):
        comp = float(v[path - 1])
        if abs(comp) > 1e-12 * scale:
            return _sign(comp) * -1
        v = -gram @ v
        scale = max(float(np.abs(v).max()), scale)
    return 0


def _bisect_boundary(
    sign_at: Callable[[float], int],
    lo: float,
    hi: float,
    reversed_sign: int,
    hi_is_reversed: bool,
) -> float:
    """Locate the sign boundary in (lo, hi) by geometric bisection."""
    while (hi - lo) > BISECT_REL_TOL * hi:
        mid = math.sqrt(lo * hi)
        mid_reversed = sign_at(mid) == reversed_sign
        if mid_reversed == hi_is_reversed:
            hi = mid
        else:
            lo = mid
    return math.sqrt(lo * hi)


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True as inclusive (start, stop) index pairs."""
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


def pathological_regime_numeric(
    ds: Dataset,
    grid: np.ndarray | None = None,
    with_intercept: bool = False,
) -> dict[int, Regime]:
    """Grid sign-scan of every trend indicator, with bisection refinement.

    Each maximal run of grid points whose trend sign opposes the true trend
    becomes an interval; finite endpoints are refined by bisection on the
    path sign to 1e-10 relative.  A run touching the right edge of the grid
    extends to infinity only when the asymptotic sign of the path confirms
    that no further crossing exists; otherwise the crossing is bracketed
    beyond the grid and refined as usual.

    For p = 2 the detected crossing count is compared against the exact
    criterion and a :class:`GridTooCoarse` warning is emitted on mismatch.
    """
    if ds.p < 2:
        raise WrongShape("regime scan needs at least two features")
    cs = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if cs.size < 2 or (cs <= 0).any() or (np.diff(cs) <= 0).any():
        raise ValueError("grid must be >= 2 strictly increasing positive values")

    exact: dict[int, Regime] | None = None
    if ds.p == 2:
        exact = pathological_regime_exact(ds, with_intercept)

    out: dict[int, Regime] = {}
    for variable in range(1, ds.p + 1):
        value_at, sign_at = _trend_evaluator(ds, variable, with_intercept)
        base_sign = _baseline_sign(ds, variable, with_intercept)
        if base_sign == 0:
            out[variable] = Regime(degenerate_true_trend=True)
            continue
        reversed_sign = -base_sign
        signs = np.array([sign_at(float(c)) for c in cs])
        mask = signs == reversed_sign
        intervals = []
        for start, stop in _runs(mask):
            if start == 0:
                lo: float = float(cs[0])
            else:
                lo = _bisect_boundary(
                    sign_at, float(cs[start - 1]), float(cs[start]),
                    reversed_sign, hi_is_reversed=True,
                )
            if stop < cs.size - 1:
                hi: float = _bisect_boundary(
                    sign_at, float(cs[stop]), float(cs[stop + 1]),
                    reversed_sign, hi_is_reversed=False,
                )
            else:
                hi = _extend_right(ds, variable, with_intercept, sign_at,
                                   float(cs[-1]), reversed_sign)
            intervals.append(Interval(lo=lo, hi=hi))
        out[variable] = Regime(intervals=tuple(intervals))

    if exact is not None:
        want = sum(not r.is_empty for r in exact.values())
        got = sum(not r.is_empty for r in out.values())
        if want != got:
            warnings.warn(
                f"grid scan found {got} reversing variables, exact criterion {want}",
                GridTooCoarse,
                stacklevel=2,
            )
    return out


def _baseline_sign(ds: Dataset, variable: int, with_intercept: bool) -> int:
    if ds.p == 2:
        summary = RidgeSummary.from_dataset(ds, centered=with_intercept)
        exact_sign = _true_trend_sign_exact(summary, variable)
        if exact_sign is not None:
            return exact_sign
    return _sign(true_trend(ds, variable, with_intercept))


def _extend_right(
    ds: Dataset,
    variable: int,
    with_intercept: bool,
    sign_at: Callable[[float], int],
    last_c: float,
    reversed_sign: int,
) -> float:
    if _asymptotic_trend_sign(ds, variable, with_intercept) == reversed_sign:
        return math.inf
    # The reversal ends past the grid: march out by decades to bracket it.
    lo, hi = last_c, last_c * 10.0
    for _ in range(60):
        if sign_at(hi) != reversed_sign:
            return _bisect_boundary(sign_at, lo, hi, reversed_sign, hi_is_reversed=False)
        lo, hi = hi, hi * 10.0
    warnings.warn(
        f"no sign change found up to c={hi:g}; treating regime as unbounded",
        GridTooCoarse,
        stacklevel=2,
    )
    return math.inf


def pathological_from_counts(counts8: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized exact criterion over a (B, 8) array of (0,1)-encoded counts.

    Returns (pathological flags, gamma values); gamma is NaN where no regime
    exists.  At most one variable can have a regime for non-negative data
    (both inequalities together would violate Cauchy-Schwarz), so a single
    gamma per table is well-defined.  Columns follow the flattened
    (y, x1, x2) cell order.
    """
    d = np.asarray(counts8, dtype=np.int64)
    s12 = d[:, 3] + d[:, 7]
    s11 = d[:, 2] + d[:, 3] + d[:, 6] + d[:, 7]
    s22 = d[:, 1] + d[:, 3] + d[:, 5] + d[:, 7]
    sy1 = d[:, 6] + d[:, 7]
    sy2 = d[:, 5] + d[:, 7]
    lhs1 = s12 * sy2  # path 1 -> regime of variable 2
    rhs1 = s22 * sy1
    lhs2 = s12 * sy1  # path 2 -> regime of variable 1
    rhs2 = s11 * sy2
    hit1 = (sy1 > 0) & (lhs1 > rhs1)
    hit2 = (sy2 > 0) & (lhs2 > rhs2)
    gamma = np.full(d.shape[0], np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        np.place(gamma, hit1, ((lhs1 - rhs1)[hit1] / sy1[hit1]).astype(np.float64))
        np.place(gamma, hit2, ((lhs2 - rhs2)[hit2] / sy2[hit2]).astype(np.float64))
    return hit1 | hit2, gamma


def trend_curve(
    ds: Dataset,
    i: int,
    grid: np.ndarray | None = None,
    with_intercept: bool = False,
) -> TrendCurve:
    """Sample T_i over a grid and attach the c -> 0 reference value."""
    _check_var(i, ds.p)
    cs = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    value_at, _ = _trend_evaluator(ds, i, with_intercept)
    values = np.array([value_at(float(c)) for c in cs])
    return TrendCurve(
        variable=i,
        cs=cs,
        values=values,
        true_trend=true_trend(ds, i, with_intercept),
    )
