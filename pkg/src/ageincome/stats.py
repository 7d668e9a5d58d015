"""Descriptive statistics over panels and simulated wave dumps.

Per-age weighted mean/std curves, joint age-by-log-income histograms, and
population pyramids. All three accept either a cleaned panel or simulated
populations, so observed and simulated data flow through identically.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ingest import LogIncomePanel
from .simulate import Population

DEFAULT_INCOME_BINS = 60
DEFAULT_INCOME_RANGE = (np.log(1000.0), np.log(200000.0))

Source = LogIncomePanel | Population | list


def _columns(source: Source, wave: int | None) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(years, ages, log incomes, weights) from any supported source."""
    if isinstance(source, Population):
        source = [source]
    if isinstance(source, list):
        years = np.concatenate([np.full(len(p), p.wave_year, dtype=np.int64) for p in source])
        ages = np.concatenate([p.ages for p in source])
        y = np.concatenate([p.log_income for p in source])
        w = np.ones(len(years))
    else:
        years, ages, y, w = source.years, source.ages, source.log_income, source.weights
    if wave is not None:
        m = years == wave
        return years[m], ages[m], y[m], w[m]
    return years, ages, y, w


@dataclass
class AgeCurves:
    """Weighted mean and std of log income per age, with effective counts."""

    ages: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    count: np.ndarray

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["age", "mean", "std", "count"])
            for i, a in enumerate(self.ages):
                writer.writerow(
                    [int(a), repr(float(self.mean[i])), repr(float(self.std[i])), repr(float(self.count[i]))]
                )


def age_curves(source: Source, wave: int | None = None) -> AgeCurves:
    """Per-age weighted mean/std over one wave, or pooled when wave is None."""
    _, ages, y, w = _columns(source, wave)
    uniq, inv = np.unique(ages, return_inverse=True)
    w_tot = np.bincount(inv, weights=w)
    w_sq = np.bincount(inv, weights=w * w)
    mean = np.bincount(inv, weights=w * y) / w_tot
    dev = y - mean[inv]
    var = np.bincount(inv, weights=w * dev * dev) / w_tot
    return AgeCurves(
        ages=uniq,
        mean=mean,
        std=np.sqrt(np.maximum(var, 0.0)),
        count=w_tot**2 / w_sq,
    )


@dataclass
class JointHistogram:
    """Weight mass on an age-by-log-income grid; bins are [lo, hi) except the last."""

    age_edges: np.ndarray
    income_edges: np.ndarray
    mass: np.ndarray
    normalized: bool
    in_range_weight: float
    out_of_range_weight: float

    def write_long_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["age", "bin_lo", "bin_hi", "mass"])
            for i in range(len(self.age_edges) - 1):
                for j in range(len(self.income_edges) - 1):
                    writer.writerow(
                        [
                            repr(float(self.age_edges[i])),
                            repr(float(self.income_edges[j])),
                            repr(float(self.income_edges[j + 1])),
                            repr(float(self.mass[i, j])),
                        ]
                    )

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(
                {
                    "age_edges": [float(v) for v in self.age_edges],
                    "income_edges": [float(v) for v in self.income_edges],
                    "mass": [[float(v) for v in row] for row in self.mass],
                    "normalized": self.normalized,
                    "in_range_weight": self.in_range_weight,
                    "out_of_range_weight": self.out_of_range_weight,
                },
                indent=2,
            )
        )


def default_age_edges(a_min: int = 15, a_max: int = 100) -> np.ndarray:
    """Unit-width bins, one per age, last bin closed so a_max is included."""
    return np.arange(a_min, a_max + 2)


def default_income_edges() -> np.ndarray:
    return np.linspace(*DEFAULT_INCOME_RANGE, DEFAULT_INCOME_BINS + 1)


def jdf(
    source: Source,
    age_edges: np.ndarray | None = None,
    income_edges: np.ndarray | None = None,
    normalize: bool = False,
    wave: int | None = None,
) -> JointHistogram:
    """Weight-accumulated 2-D histogram of (age, log income)."""
    age_edges = default_age_edges() if age_edges is None else np.asarray(age_edges, dtype=float)
    income_edges = default_income_edges() if income_edges is None else np.asarray(income_edges, dtype=float)
    for name, edges in (("age", age_edges), ("income", income_edges)):
        if len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ConfigError(f"{name} edges must be strictly increasing with >= 2 entries")

    _, ages, y, w = _columns(source, wave)
    mass, _, _ = np.histogram2d(
        ages.astype(float), y, bins=[age_edges, income_edges], weights=w
    )
    in_range = float(mass.sum())
    out_of_range = float(w.sum() - in_range)
    if normalize and in_range > 0:
        mass = mass / in_range
    return JointHistogram(
        age_edges=age_edges,
        income_edges=income_edges,
        mass=mass,
        normalized=normalize,
        in_range_weight=in_range,
        out_of_range_weight=out_of_range,
    )


@dataclass
class PyramidSeries:
    """Total weight per age for each wave."""

    by_wave: dict[int, dict[int, float]]

    def waves(self) -> list[int]:
        return sorted(self.by_wave)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["wave", "age", "weight"])
            for wave in self.waves():
                for age in sorted(self.by_wave[wave]):
                    writer.writerow([wave, age, repr(self.by_wave[wave][age])])


def pyramid(source: Source, waves: list[int] | None = None) -> PyramidSeries:
    """Per-wave, per-age total weight."""
    years, ages, _, w = _columns(source, None)
    if waves is None:
        waves = sorted(int(v) for v in np.unique(years))
    by_wave: dict[int, dict[int, float]] = {}
    for wave in waves:
        m = years == wave
        uniq, inv = np.unique(ages[m], return_inverse=True)
        totals = np.bincount(inv, weights=w[m])
        by_wave[int(wave)] = {int(a): float(t) for a, t in zip(uniq, totals)}
    return PyramidSeries(by_wave=by_wave)
