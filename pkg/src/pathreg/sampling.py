"""Random dataset and table generators with a counter-based, splittable PRNG.

Three base schemes are supported:

* ``bernoulli`` — every entry of (Y, X) is an independent fair coin;
* ``uniform_composition`` — a table drawn uniformly from all 8-part weak
  compositions of N (the stars-and-bars bijection);
* ``dirichlet_rounded`` — a Dirichlet(1, ..., 1) point on the 7-simplex
  scaled to N, rounded half-to-even, and redrawn until the total is N.

Generators are Philox keyed by (seed, stream), so every stream is a pure
function of the pair and parallel workers can consume disjoint streams.
Single-draw functions use one stream per call; the bulk path packs a fixed
number of draws per stream (a pure function of N), which keeps rejection
loops vectorized without losing reproducibility.  Simpson-conditioned
sampling is a rejection loop over one of the base schemes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import RejectionBudgetExceeded
from .tables import (
    ContingencyTable222,
    Dataset,
    counts_from_bits,
    encode,
    is_simpson,
    simpson_types_from_counts,
)

PRNG_VERSION = "philox4x64:numpy"

Scheme = Literal["bernoulli", "uniform_composition", "dirichlet_rounded"]

SCHEMES: tuple[str, ...] = ("bernoulli", "uniform_composition", "dirichlet_rounded")

DEFAULT_MAX_REJECTS = 10_000_000

_MASK64 = 2**64 - 1


@dataclass(frozen=True)
class SamplerConfig:
    """Scheme + size + seed for one sampling stream."""

    scheme: Scheme
    n: int
    seed: int
    max_rejects: int = DEFAULT_MAX_REJECTS

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.n < 1:
            raise ValueError(f"sample size must be >= 1, got {self.n}")
        if self.max_rejects < 1:
            raise ValueError("max_rejects must be >= 1")


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for (seed, stream); counter-based, hence splittable."""
    return np.random.Generator(np.random.Philox(key=(seed & _MASK64, stream & _MASK64)))


def sample_bernoulli_dataset(n: int, seed: int, stream: int = 0) -> Dataset:
    """N x 2 design and response with i.i.d. Ber(0.5) entries."""
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = generator(seed, stream)
    bits = rng.integers(0, 2, size=(n, 3), dtype=np.int64)
    return Dataset(y=bits[:, 0], x=bits[:, 1:])


def sample_uniform_table(n: int, seed: int, stream: int = 0) -> ContingencyTable222:
    """Uniform draw from all 2x2x2 tables with total count n.

    Stars and bars: a uniform 7-subset of the n+7 slots (the positions of
    the 7 smallest of n+7 i.i.d. uniforms) is in bijection with the 8-part
    weak compositions of n.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = generator(seed, stream)
    parts = _compositions_from_uniforms(rng.random((1, n + 7)), n)[0]
    return ContingencyTable222(parts.reshape(2, 2, 2))


def sample_dirichlet_table(
    n: int,
    seed: int,
    stream: int = 0,
    max_rejects: int = DEFAULT_MAX_REJECTS,
) -> ContingencyTable222:
    """Dirichlet(1,...,1) point scaled to n; rounding must preserve the total.

    Rounding is half-to-even per cell, which never moves a cell by more than
    0.5; draws whose rounded total misses n are rejected and redrawn.  The
    rounding rejection is internal to the scheme: callers see only tables
    that sum to n.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = generator(seed, stream)
    for _ in range(max_rejects):
        p = rng.dirichlet(np.ones(8))
        counts = np.rint(p * n).astype(np.int64)
        if counts.sum() == n:
            return ContingencyTable222(counts.reshape(2, 2, 2))
    raise RejectionBudgetExceeded(
        f"no total-preserving rounding in {max_rejects} Dirichlet draws at n={n}"
    )


# ---------------------------------------------------------------------------
# Bulk draws
# ---------------------------------------------------------------------------


def _batch_size(scheme: str, n: int) -> int:
    if scheme == "dirichlet_rounded":
        return 1024
    # Cap the working set at a few million entries for the row-level schemes.
    return max(16, min(1024, 4_000_000 // (3 * n)))


def _compositions_from_uniforms(u: np.ndarray, n: int) -> np.ndarray:
    """Map rows of i.i.d. uniforms over n+7 slots to 8-part compositions."""
    bars = np.sort(np.argpartition(u, 7, axis=1)[:, :7], axis=1)
    b = u.shape[0]
    slots = np.empty((b, 9), dtype=np.int64)
    slots[:, 0] = -1
    slots[:, 1:8] = bars
    slots[:, 8] = n + 7
    return np.diff(slots, axis=1) - 1


def batch_counts(scheme: Scheme, n: int, seed: int, stream: int) -> np.ndarray:
    """One stream's worth of tables as a (B, 8) count array, cell-ordered.

    For ``dirichlet_rounded`` only the total-preserving draws are returned,
    so B varies with the stream; the other schemes return the full batch.
    """
    rng = generator(seed, stream)
    b = _batch_size(scheme, n)
    if scheme == "bernoulli":
        bits = rng.integers(0, 2, size=(b, n, 3), dtype=np.int64)
        idx = 4 * bits[:, :, 0] + 2 * bits[:, :, 1] + bits[:, :, 2]
        offset = 8 * np.arange(b, dtype=np.int64)[:, None]
        return np.bincount((idx + offset).ravel(), minlength=8 * b).reshape(b, 8)
    if scheme == "uniform_composition":
        return _compositions_from_uniforms(rng.random((b, n + 7)), n)
    if scheme == "dirichlet_rounded":
        p = rng.dirichlet(np.ones(8), size=b)
        counts = np.rint(p * n).astype(np.int64)
        return counts[counts.sum(axis=1) == n]
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class ConditionedSample:
    """Accepted tables plus the bookkeeping of the rejection loop."""

    tables: tuple[ContingencyTable222, ...]
    n_draws: int
    acceptance_rate: float


def sample_conditioned_tables(
    m: int,
    n: int,
    scheme: Scheme,
    seed: int,
    simpson: bool = True,
    max_rejects: int = DEFAULT_MAX_REJECTS,
    start_stream: int = 0,
) -> ConditionedSample:
    """Rejection-sample m tables with (or without) a strict Simpson verdict.

    ``n_draws`` counts the base-scheme tables examined up to and including
    the m-th acceptance, so ``acceptance_rate = m / n_draws`` estimates the
    conditioning probability.
    """
    if m < 1:
        raise ValueError(f"number of datasets must be >= 1, got {m}")
    accepted: list[ContingencyTable222] = []
    draws = 0
    stream = start_stream
    while len(accepted) < m:
        counts = batch_counts(scheme, n, seed, stream)
        stream += 1
        if counts.shape[0] == 0:
            continue
        keep = simpson_types_from_counts(counts) != 0
        if not simpson:
            keep = ~keep
        hits = np.flatnonzero(keep)
        needed = m - len(accepted)
        if hits.size >= needed:
            last = int(hits[needed - 1])
            draws += last + 1
            hits = hits[:needed]
        else:
            draws += counts.shape[0]
        for row in hits:
            accepted.append(ContingencyTable222(counts[row].reshape(2, 2, 2)))
        if draws > max_rejects and len(accepted) < m:
            raise RejectionBudgetExceeded(
                f"accepted {len(accepted)}/{m} tables in {draws} draws at n={n}"
            )
    return ConditionedSample(
        tables=tuple(accepted),
        n_draws=draws,
        acceptance_rate=m / draws,
    )


def sample_simpson_datasets(
    m: int,
    n: int,
    base_scheme: Scheme = "bernoulli",
    seed: int = 0,
    max_rejects: int = DEFAULT_MAX_REJECTS,
) -> tuple[list[Dataset], ConditionedSample]:
    """Simpson rejection sampling, returned as canonically encoded datasets.

    Every returned dataset satisfies ``is_simpson != NONE``.  The second
    element reports the draw count and acceptance rate of the loop.
    """
    sample = sample_conditioned_tables(
        m, n, base_scheme, seed, simpson=True, max_rejects=max_rejects
    )
    return [encode(t) for t in sample.tables], sample
