"""Monte-Carlo drivers reproducing the headline quantitative results.

Four experiment kinds:

* ``ratio_vs_n`` — fraction of sampled tables with a non-empty exact ridge
  regime, per sample size, optionally conditioned on a Simpson verdict;
* ``avg_gamma_vs_n`` — mean left regime endpoint among pathological tables;
* ``logistic_ratios`` — per sample size, the fraction of Simpson and of
  non-Simpson datasets flagged by the logistic grid scan;
* ``cv_demo`` — the cross-validation reversal demonstration on one dataset.

Every run is a pure function of (spec, seed): sampling streams are keyed by
(seed, point index) windows, aggregation uses counts and sums only, and
``results.csv`` / ``summary.json`` carry no timestamps (the manifest does).
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Literal, Sequence

import numpy as np

from ._version import __version__ as _pkg_version
from .errors import InsufficientPathologicalDraws, PathregError
from .logistic import (
    CvResult,
    RegGrid,
    ScanResult,
    fit_logistic,
    fit_logistic_cv,
    scan_pathological_logistic,
    trend_indicator_logistic,
)
from .ridge import pathological_from_counts
from .sampling import PRNG_VERSION, Scheme, batch_counts, sample_conditioned_tables
from .tables import ContingencyTable222, Dataset, decode, encode, is_simpson

# Bare invocations must be reproducible, so the default seed is a constant.
DEFAULT_SEED = 1729

# Disjoint stream windows per experiment point; Philox streams are 64-bit.
_STREAM_WINDOW = 2**32

ExperimentKind = Literal["ratio_vs_n", "avg_gamma_vs_n", "logistic_ratios", "cv_demo"]

KINDS: tuple[str, ...] = ("ratio_vs_n", "avg_gamma_vs_n", "logistic_ratios", "cv_demo")

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class ExperimentSpec:
    """Configuration of one experiment run; all fields enter the summary."""

    kind: ExperimentKind
    sizes: tuple[int, ...] = (50, 100, 200, 400, 800, 1600)
    m: int = 500
    scheme: Scheme = "uniform_composition"
    simpson: bool = False
    intercept: bool = False
    weights: str = "uniform"
    grid: RegGrid | None = None
    k: int = 5
    seed: int = DEFAULT_SEED
    threads: int = 1

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.sizes:
            raise ValueError("at least one sample size is required")
        if any(n < 1 for n in self.sizes):
            raise ValueError("sample sizes must be >= 1")
        if self.m < 1:
            raise ValueError("datasets per point must be >= 1")
        if self.threads < 1:
            raise ValueError("thread count must be >= 1")

    def to_json(self) -> dict[str, Any]:
        doc = asdict(self)
        doc["grid"] = None if self.grid is None else list(self.grid.values)
        return doc


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% by default)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    # The boundary cases pinch to the estimate exactly; avoid float residue.
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return (lo, hi)


@dataclass(frozen=True)
class RatioEstimate:
    """Binomial point estimate with its Wilson 95% interval."""

    estimate: float
    lo: float
    hi: float
    successes: int
    m: int

    @classmethod
    def from_counts(cls, successes: int, m: int) -> "RatioEstimate":
        lo, hi = wilson_interval(successes, m)
        return cls(estimate=successes / m, lo=lo, hi=hi, successes=successes, m=m)

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


# ---------------------------------------------------------------------------
# Ridge experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RidgeRatioRow:
    n: int
    scheme_label: str
    ratio: RatioEstimate


def _draw_plain_counts(scheme: Scheme, n: int, m: int, seed: int, window: int) -> np.ndarray:
    """m unconditioned tables from one stream window, as (m, 8) counts."""
    chunks: list[np.ndarray] = []
    have = 0
    stream = window
    while have < m:
        block = batch_counts(scheme, n, seed, stream)
        stream += 1
        chunks.append(block)
        have += block.shape[0]
    return np.concatenate(chunks, axis=0)[:m]


def _exact_pathological(counts: np.ndarray, intercept: bool) -> tuple[np.ndarray, np.ndarray]:
    if not intercept:
        return pathological_from_counts(counts)
    flags = np.zeros(counts.shape[0], dtype=bool)
    gammas = np.full(counts.shape[0], np.nan)
    from .ridge import pathological_regime_exact

    for row in range(counts.shape[0]):
        table = ContingencyTable222(counts[row].reshape(2, 2, 2))
        regimes = pathological_regime_exact(encode(table), with_intercept=True)
        hit = [r for r in regimes.values() if not r.is_empty]
        if hit:
            flags[row] = True
            gammas[row] = float(hit[0].gamma)
    return flags, gammas


def run_ridge_ratio_experiment(spec: ExperimentSpec) -> list[RidgeRatioRow]:
    """Fraction of tables with a non-empty ridge regime, per sample size.

    With ``spec.simpson`` the draws are rejection-conditioned on a strict
    Simpson verdict before the criterion is applied.
    """
    if spec.kind != "ratio_vs_n":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'ratio_vs_n'")
    label = f"{spec.scheme}:simpson" if spec.simpson else spec.scheme
    rows = []
    for point, n in enumerate(spec.sizes):
        window = point * _STREAM_WINDOW
        if spec.simpson:
            sample = sample_conditioned_tables(
                spec.m, n, spec.scheme, spec.seed, simpson=True, start_stream=window
            )
            counts = np.array([t.counts.reshape(8) for t in sample.tables])
        else:
            counts = _draw_plain_counts(spec.scheme, n, spec.m, spec.seed, window)
        flags, _ = _exact_pathological(counts, spec.intercept)
        rows.append(
            RidgeRatioRow(
                n=n,
                scheme_label=label,
                ratio=RatioEstimate.from_counts(int(flags.sum()), spec.m),
            )
        )
    return rows


@dataclass(frozen=True)
class GammaRow:
    n: int
    n_pathological: int
    mean_gamma: float
    lo: float
    hi: float


def run_avg_gamma_experiment(spec: ExperimentSpec) -> list[GammaRow]:
    """Conditional mean of the regime's left endpoint among pathological draws."""
    if spec.kind != "avg_gamma_vs_n":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'avg_gamma_vs_n'")
    rows = []
    for point, n in enumerate(spec.sizes):
        counts = _draw_plain_counts(spec.scheme, n, spec.m, spec.seed, point * _STREAM_WINDOW)
        flags, gammas = _exact_pathological(counts, spec.intercept)
        hits = gammas[flags]
        if hits.size < 30:
            raise InsufficientPathologicalDraws(
                f"only {hits.size} pathological draws at n={n}; need >= 30"
            )
        mean = float(hits.mean())
        half = _Z95 * float(hits.std(ddof=1)) / math.sqrt(hits.size)
        rows.append(
            GammaRow(n=n, n_pathological=int(hits.size), mean_gamma=mean,
                     lo=mean - half, hi=mean + half)
        )
    return rows


# ---------------------------------------------------------------------------
# Logistic experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogisticRatioRow:
    n: int
    simpson: RatioEstimate
    non_simpson: RatioEstimate


def _scan_verdict(table: ContingencyTable222, grid: RegGrid | None) -> bool:
    """Reversal verdict for the ratio experiment.

    Counts a dataset pathological when the trend conditioned on the first
    feature reverses, i.e. the indicator pair aligned with the Simpson
    systems (which certify reversal of the second feature's trend across
    first-feature strata).  Scanning that single direction reproduces the
    single-indicator sweep of the reference methodology; the full per-pair
    map remains available on :class:`ScanResult`.
    """
    result = scan_pathological_logistic(encode(table), grid=grid)
    return result.direction_pathological(1)


def run_logistic_ratio_experiment(spec: ExperimentSpec) -> list[LogisticRatioRow]:
    """Simpson vs non-Simpson pathological ratios for the logistic scan."""
    if spec.kind != "logistic_ratios":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'logistic_ratios'")
    rows = []
    for point, n in enumerate(spec.sizes):
        window_s = (2 * point) * _STREAM_WINDOW
        window_ns = (2 * point + 1) * _STREAM_WINDOW
        simpson_tables = sample_conditioned_tables(
            spec.m, n, spec.scheme, spec.seed, simpson=True, start_stream=window_s
        ).tables
        plain_tables = sample_conditioned_tables(
            spec.m, n, spec.scheme, spec.seed, simpson=False, start_stream=window_ns
        ).tables

        def verdicts(tables: Sequence[ContingencyTable222]) -> int:
            if spec.threads > 1:
                with ThreadPoolExecutor(max_workers=spec.threads) as pool:
                    flags = list(pool.map(lambda t: _scan_verdict(t, spec.grid), tables))
            else:
                flags = [_scan_verdict(t, spec.grid) for t in tables]
            return sum(flags)

        rows.append(
            LogisticRatioRow(
                n=n,
                simpson=RatioEstimate.from_counts(verdicts(simpson_tables), spec.m),
                non_simpson=RatioEstimate.from_counts(verdicts(plain_tables), spec.m),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Cross-validation demo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CvArm:
    """One weighting scheme's CV outcome on the demo dataset."""

    weight_scheme: str
    chosen_c: float
    trends: dict[tuple[int, int], float]
    reversed_pairs: tuple[tuple[int, int], ...]
    chosen_in_regime: bool


@dataclass(frozen=True)
class CvDemoReport:
    baseline: dict[tuple[int, int], float]
    scan_pathological: bool
    uniform: CvArm
    balanced: CvArm

    def to_json(self) -> dict[str, Any]:
        def arm(a: CvArm) -> dict[str, Any]:
            return {
                "weight_scheme": a.weight_scheme,
                "chosen_c": a.chosen_c,
                "trends": {f"{i},{j}": v for (i, j), v in a.trends.items()},
                "reversed_pairs": [list(p) for p in a.reversed_pairs],
                "chosen_in_regime": a.chosen_in_regime,
            }

        return {
            "baseline": {f"{i},{j}": v for (i, j), v in self.baseline.items()},
            "scan_pathological": self.scan_pathological,
            "uniform": arm(self.uniform),
            "balanced": arm(self.balanced),
        }


def run_cv_demo(spec: ExperimentSpec, ds: Dataset) -> CvDemoReport:
    """Baseline trends, CV-chosen penalties, and the reversal verdicts.

    The dataset must carry a strict Simpson verdict; the report compares the
    smallest-grid-value trends against the trends at the CV choice under
    uniform and balanced weighting, and checks whether each chosen penalty
    falls inside a scanned reversal regime.
    """
    if spec.kind != "cv_demo":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'cv_demo'")
    if not is_simpson(decode(ds)):
        raise PathregError("cv demo requires a dataset with a strict Simpson verdict")
    grid = RegGrid.paper_default() if spec.grid is None else spec.grid
    scan = scan_pathological_logistic(ds, grid=grid)
    pairs = [(i, j) for i in (1, 2) for j in (0, 1)]

    def arm(scheme: str) -> CvArm:
        cv = fit_logistic_cv(ds, grid=grid, k=spec.k, weight_scheme=scheme, seed=spec.seed)
        trends = {p: trend_indicator_logistic(cv.model, *p) for p in pairs}
        reversed_pairs = tuple(
            p for p in pairs
            if abs(scan.baseline[p]) > 1e-9
            and abs(trends[p]) > 1e-9
            and (scan.baseline[p] > 0) != (trends[p] > 0)
        )
        in_regime = any(scan.regimes[p].contains(cv.c) for p in reversed_pairs)
        return CvArm(
            weight_scheme=scheme,
            chosen_c=cv.c,
            trends=trends,
            reversed_pairs=reversed_pairs,
            chosen_in_regime=in_regime,
        )

    return CvDemoReport(
        baseline=dict(scan.baseline),
        scan_pathological=scan.pathological,
        uniform=arm("uniform"),
        balanced=arm("balanced"),
    )


# ---------------------------------------------------------------------------
# Output writing
# ---------------------------------------------------------------------------


def _results_rows(kind: str, rows: Sequence[Any]) -> tuple[list[str], list[list[Any]]]:
    if kind == "ratio_vs_n":
        header = ["n", "scheme", "ratio", "wilson_lo", "wilson_hi", "successes", "m"]
        data = [
            [r.n, r.scheme_label, repr(r.ratio.estimate), repr(r.ratio.lo),
             repr(r.ratio.hi), r.ratio.successes, r.ratio.m]
            for r in rows
        ]
    elif kind == "avg_gamma_vs_n":
        header = ["n", "n_pathological", "mean_gamma", "ci_lo", "ci_hi"]
        data = [
            [r.n, r.n_pathological, repr(r.mean_gamma), repr(r.lo), repr(r.hi)]
            for r in rows
        ]
    elif kind == "logistic_ratios":
        header = [
            "n", "simpson_ratio", "simpson_lo", "simpson_hi",
            "non_simpson_ratio", "non_simpson_lo", "non_simpson_hi", "m",
        ]
        data = [
            [r.n, repr(r.simpson.estimate), repr(r.simpson.lo), repr(r.simpson.hi),
             repr(r.non_simpson.estimate), repr(r.non_simpson.lo),
             repr(r.non_simpson.hi), r.simpson.m]
            for r in rows
        ]
    elif kind == "cv_demo":
        report: CvDemoReport = rows[0]
        header = ["arm", "chosen_c", "trend_1_0", "trend_1_1", "trend_2_0", "trend_2_1"]
        data = [["baseline", repr(0.0)] + [repr(report.baseline[(i, j)]) for i in (1, 2) for j in (0, 1)]]
        for a in (report.uniform, report.balanced):
            data.append([a.weight_scheme, repr(a.chosen_c)]
                        + [repr(a.trends[(i, j)]) for i in (1, 2) for j in (0, 1)])
    else:
        raise ValueError(f"unknown experiment kind {kind!r}")
    return header, data


def _rows_json(kind: str, rows: Sequence[Any]) -> list[dict[str, Any]]:
    if kind == "ratio_vs_n":
        return [{"n": r.n, "scheme": r.scheme_label, "ratio": r.ratio.to_json()} for r in rows]
    if kind == "avg_gamma_vs_n":
        return [asdict(r) for r in rows]
    if kind == "logistic_ratios":
        return [
            {"n": r.n, "simpson": r.simpson.to_json(), "non_simpson": r.non_simpson.to_json()}
            for r in rows
        ]
    if kind == "cv_demo":
        return [rows[0].to_json()]
    raise ValueError(f"unknown experiment kind {kind!r}")


def write_experiment_outputs(
    spec: ExperimentSpec,
    rows: Sequence[Any],
    outdir: str | Path,
    created_utc: str | None = None,
) -> dict[str, Path]:
    """Write results.csv, summary.json, and manifest.json into ``outdir``.

    ``results.csv`` and ``summary.json`` are byte-reproducible for a fixed
    (spec, seed); only ``manifest.json`` carries the wall-clock timestamp.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    header, data = _results_rows(spec.kind, rows)
    results = outdir / "results.csv"
    with open(results, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(data)
    summary = outdir / "summary.json"
    summary.write_text(
        json.dumps(
            {
                "kind": spec.kind,
                "spec": spec.to_json(),
                "prng_version": PRNG_VERSION,
                "rows": _rows_json(spec.kind, rows),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    manifest = outdir / "manifest.json"
    if created_utc is None:
        import datetime

        created_utc = (
            datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0).isoformat()
        )
    manifest.write_text(
        json.dumps(
            {
                "created_utc": created_utc,
                "package_version": _pkg_version,
                "prng_version": PRNG_VERSION,
                "kind": spec.kind,
                "seed": spec.seed,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return {"results": results, "summary": summary, "manifest": manifest}


def run_experiment(spec: ExperimentSpec, dataset: Dataset | None = None) -> Sequence[Any]:
    """Dispatch a spec to its runner; cv_demo requires the dataset argument."""
    if spec.kind == "ratio_vs_n":
        return run_ridge_ratio_experiment(spec)
    if spec.kind == "avg_gamma_vs_n":
        return run_avg_gamma_experiment(spec)
    if spec.kind == "logistic_ratios":
        return run_logistic_ratio_experiment(spec)
    if spec.kind == "cv_demo":
        if dataset is None:
            raise ValueError("cv_demo needs a dataset")
        return [run_cv_demo(spec, dataset)]
    raise ValueError(f"unknown experiment kind {spec.kind!r}")
