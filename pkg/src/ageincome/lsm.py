"""Least-squares calibration from individual consecutive-year transitions.

Per age, (q, mu) minimize the sum of squared residuals of
y' = q y + mu over the observed (y, y') pairs and sigma is the population
standard deviation of the residuals (divisor n). Optional bounds clip q
and refit mu; uncertainty comes from a nonparametric pair bootstrap with
percentile intervals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, EstimationError
from .ingest import TransitionSet
from .model import AgeProfile
from .noise import NoiseSpec

# replicate chunking keeps resample index matrices around ~4M elements
_CHUNK_ELEMENTS = 4_000_000


def fit_age(pairs: np.ndarray) -> tuple[float, float, float]:
    """(q, mu, sigma) for one age from an (n, 2) array of (y, y') pairs."""
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise EstimationError("pairs must be an (n, 2) array")
    n = len(pairs)
    if n < 2:
        raise EstimationError(f"need at least 2 pairs, got {n}")
    y, y_next = pairs[:, 0], pairs[:, 1]
    ybar, nbar = y.mean(), y_next.mean()
    var_y = np.mean((y - ybar) ** 2)
    if var_y == 0.0:
        raise EstimationError("zero variance in y, slope is undefined")
    q = float(np.mean((y - ybar) * (y_next - nbar)) / var_y)
    mu = float(nbar - q * ybar)
    resid = y_next - q * y - mu
    return q, mu, float(np.sqrt(np.mean(resid**2)))


def _clip_refit(pairs: np.ndarray, q: float, bounds: tuple[float, float]) -> tuple[float, float, float, bool]:
    """Clip q into bounds and refit mu as mean(y' - q y); sigma from residuals."""
    lo, hi = bounds
    clipped = False
    if q < lo or q > hi:
        q = float(min(max(q, lo), hi))
        clipped = True
    y, y_next = pairs[:, 0], pairs[:, 1]
    mu = float(np.mean(y_next - q * y))
    resid = y_next - q * y - mu
    return q, mu, float(np.sqrt(np.mean(resid**2))), clipped


@dataclass
class LsmResult:
    """Per-age point estimates; NaN rows are ages that could not be fit."""

    a_min: int
    a_max: int
    q: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    n_pairs: np.ndarray
    flags: dict[int, list[str]] = field(default_factory=dict)

    @property
    def profile(self) -> AgeProfile:
        return AgeProfile(
            a_min=self.a_min,
            a_max=self.a_max,
            q=self.q.copy(),
            mu=self.mu.copy(),
            sigma=self.sigma.copy(),
            flags={a: list(f) for a, f in self.flags.items()},
        )


def fit_all(
    transitions: TransitionSet,
    bounds: tuple[float, float] | None = None,
    a_min: int | None = None,
    a_max: int | None = None,
) -> LsmResult:
    """Fit every age in [a_min, a_max); defaults cover the observed ages."""
    if bounds is not None and bounds[0] > bounds[1]:
        raise ConfigError(f"bounds out of order: {bounds}")
    ages = transitions.ages
    if not ages and (a_min is None or a_max is None):
        raise EstimationError("no transitions to fit")
    if a_min is None:
        a_min = ages[0]
    if a_max is None:
        a_max = ages[-1] + 1

    n = a_max - a_min
    q = np.full(n, np.nan)
    mu = np.full(n, np.nan)
    sigma = np.full(n, np.nan)
    n_pairs = np.zeros(n, dtype=np.int64)
    flags: dict[int, list[str]] = {}
    for a in range(a_min, a_max):
        i = a - a_min
        pairs = transitions.pairs(a)
        n_pairs[i] = len(pairs)
        try:
            q_a, mu_a, sigma_a = fit_age(pairs)
        except EstimationError:
            flags[a] = ["missing"]
            continue
        if bounds is not None:
            q_a, mu_a, sigma_a, clipped = _clip_refit(pairs, q_a, bounds)
            if clipped:
                flags[a] = ["clipped"]
        q[i], mu[i], sigma[i] = q_a, mu_a, sigma_a
    return LsmResult(a_min=a_min, a_max=a_max, q=q, mu=mu, sigma=sigma, n_pairs=n_pairs, flags=flags)


@dataclass
class CalibrationReport:
    """Point estimates with percentile bootstrap intervals per age."""

    a_min: int
    a_max: int
    q: np.ndarray
    q_lo: np.ndarray
    q_hi: np.ndarray
    mu: np.ndarray
    mu_lo: np.ndarray
    mu_hi: np.ndarray
    sigma: np.ndarray
    sigma_lo: np.ndarray
    sigma_hi: np.ndarray
    n_pairs: np.ndarray
    n_boot: int
    level: float
    degenerate_resamples: dict[int, int] = field(default_factory=dict)
    flags: dict[int, list[str]] = field(default_factory=dict)

    @property
    def ages(self) -> np.ndarray:
        return np.arange(self.a_min, self.a_max)

    @property
    def profile(self) -> AgeProfile:
        return AgeProfile(
            a_min=self.a_min,
            a_max=self.a_max,
            q=self.q.copy(),
            mu=self.mu.copy(),
            sigma=self.sigma.copy(),
            flags={a: list(f) for a, f in self.flags.items()},
        )

    def write_csv(self, path: str | Path) -> None:
        cols = ["age", "q", "q_lo", "q_hi", "mu", "mu_lo", "mu_hi", "sigma", "sigma_lo", "sigma_hi", "n_pairs"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for i, a in enumerate(self.ages):
                writer.writerow(
                    [int(a)]
                    + [
                        repr(float(arr[i]))
                        for arr in (self.q, self.q_lo, self.q_hi, self.mu, self.mu_lo, self.mu_hi, self.sigma, self.sigma_lo, self.sigma_hi)
                    ]
                    + [int(self.n_pairs[i])]
                )


def _bootstrap_age(
    pairs: np.ndarray, B: int, rng: np.random.Generator, bounds: tuple[float, float] | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Resampled (q, mu, sigma) per replicate; degenerate replicates are NaN.

    Bounds are applied inside each replicate (clip q, refit mu) so the
    replicate distribution matches the bounded point estimator.
    """
    n = len(pairs)
    y, y_next = pairs[:, 0], pairs[:, 1]
    qs = np.empty(B)
    mus = np.empty(B)
    sigmas = np.empty(B)
    chunk = max(1, _CHUNK_ELEMENTS // max(n, 1))
    done = 0
    while done < B:
        b = min(chunk, B - done)
        idx = rng.integers(0, n, size=(b, n))
        ys = y[idx]
        yns = y_next[idx]
        m_y = ys.mean(axis=1)
        m_yn = yns.mean(axis=1)
        var_y = (ys * ys).mean(axis=1) - m_y**2
        cov = (ys * yns).mean(axis=1) - m_y * m_yn
        with np.errstate(divide="ignore", invalid="ignore"):
            q_b = np.where(var_y > 0, cov / var_y, np.nan)
        if bounds is not None:
            q_b = np.clip(q_b, bounds[0], bounds[1])
        mu_b = m_yn - q_b * m_y  # equals mean(y' - q y), valid clipped or not
        resid = yns - q_b[:, None] * ys - mu_b[:, None]
        qs[done : done + b] = q_b
        mus[done : done + b] = mu_b
        sigmas[done : done + b] = np.sqrt((resid**2).mean(axis=1))
        done += b
    bad = int(np.sum(~np.isfinite(qs)))
    return qs, mus, sigmas, bad


def bootstrap_ci(
    transitions: TransitionSet,
    B: int = 2000,
    level: float = 0.95,
    noise: NoiseSpec = NoiseSpec(seed=0),
    bounds: tuple[float, float] | None = None,
) -> CalibrationReport:
    """Pair bootstrap: resample transitions with replacement B times per age.

    Intervals are percentile at (1-level)/2 and 1-(1-level)/2 over the
    replicate estimates. Replicates whose resample has zero variance in y
    are excluded from the percentiles and counted per age. Each age uses
    its own seeded substream, so results do not depend on the order ages
    are processed.
    """
    if B < 1:
        raise ConfigError("bootstrap sample count must be at least 1")
    if not (0.0 < level < 1.0):
        raise ConfigError("level must be in (0, 1)")
    point = fit_all(transitions, bounds=bounds)
    n = point.a_max - point.a_min
    lo_pct = 100.0 * (1.0 - level) / 2.0
    hi_pct = 100.0 - lo_pct

    shape = (n,)
    q_lo, q_hi = np.full(shape, np.nan), np.full(shape, np.nan)
    mu_lo, mu_hi = np.full(shape, np.nan), np.full(shape, np.nan)
    s_lo, s_hi = np.full(shape, np.nan), np.full(shape, np.nan)
    degenerate: dict[int, int] = {}

    for a in range(point.a_min, point.a_max):
        i = a - point.a_min
        pairs = transitions.pairs(a)
        if np.isnan(point.q[i]) or len(pairs) < 2:
            continue
        rng = noise.generator("bootstrap", a)
        qs, mus, sigmas, bad = _bootstrap_age(pairs, B, rng, bounds)
        if bad:
            degenerate[a] = bad
        ok = np.isfinite(qs)
        if not np.any(ok):
            continue
        q_lo[i], q_hi[i] = np.percentile(qs[ok], [lo_pct, hi_pct])
        mu_lo[i], mu_hi[i] = np.percentile(mus[ok], [lo_pct, hi_pct])
        s_lo[i], s_hi[i] = np.percentile(sigmas[ok], [lo_pct, hi_pct])

    return CalibrationReport(
        a_min=point.a_min,
        a_max=point.a_max,
        q=point.q,
        q_lo=q_lo,
        q_hi=q_hi,
        mu=point.mu,
        mu_lo=mu_lo,
        mu_hi=mu_hi,
        sigma=point.sigma,
        sigma_lo=s_lo,
        sigma_hi=s_hi,
        n_pairs=point.n_pairs,
        n_boot=B,
        level=level,
        degenerate_resamples=degenerate,
        flags=point.flags,
    )
