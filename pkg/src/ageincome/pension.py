"""Pay-as-you-go pension cash flows over simulated or observed waves.

Outflow in a wave is a constant annual pension times the number of people
older than the retirement age. Inflow is a constant contribution rate
applied to the total level income, exp(log income), of everyone at or
below the retirement age. People exactly at the threshold contribute;
only those strictly older draw a pension. Weighted inputs use their
survey weights in both the pensioner count and the income total.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ingest import LogIncomePanel
from .simulate import Population

DEFAULT_ANNUAL_PENSION = 16368.0
DEFAULT_CONTRIBUTION_RATE = 0.0775
CONTRIBUTION_RATE_RANGE = (0.0775, 0.2)


@dataclass(frozen=True)
class PensionParams:
    p: float = DEFAULT_ANNUAL_PENSION
    alpha: float = DEFAULT_CONTRIBUTION_RATE
    retirement_age: int = 65

    def __post_init__(self) -> None:
        if self.p < 0:
            raise ConfigError("annual pension must be non-negative")
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigError("contribution rate must be in [0, 1]")


@dataclass
class CashflowSeries:
    """Per-wave inflow, outflow, balance, pensioner count, contributor income."""

    waves: np.ndarray
    inflow: np.ndarray
    outflow: np.ndarray
    balance: np.ndarray
    pensioners: np.ndarray
    contributor_income: np.ndarray

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["wave", "inflow", "outflow", "balance", "pensioners", "contributor_income"])
            for i in range(len(self.waves)):
                writer.writerow(
                    [
                        int(self.waves[i]),
                        repr(float(self.inflow[i])),
                        repr(float(self.outflow[i])),
                        repr(float(self.balance[i])),
                        repr(float(self.pensioners[i])),
                        repr(float(self.contributor_income[i])),
                    ]
                )


def _waves_as_columns(waves) -> list[tuple[int, np.ndarray, np.ndarray, np.ndarray]]:
    """Normalize input to a list of (wave, ages, log incomes, weights)."""
    if isinstance(waves, Population):
        waves = [waves]
    if isinstance(waves, LogIncomePanel):
        return [
            (year, w.ages, w.log_income, w.weights)
            for year in waves.wave_years()
            for w in (waves.wave(year),)
        ]
    return [
        (p.wave_year, p.ages, p.log_income, np.ones(len(p)))
        for p in sorted(waves, key=lambda p: p.wave_year)
    ]


def cashflow(waves, params: PensionParams) -> CashflowSeries:
    """Inflow, outflow, and balance per wave under the given parameters."""
    rows = _waves_as_columns(waves)
    wave_ids = np.array([r[0] for r in rows], dtype=np.int64)
    inflow = np.empty(len(rows))
    outflow = np.empty(len(rows))
    pensioners = np.empty(len(rows))
    contrib_income = np.empty(len(rows))
    for i, (_, ages, y, w) in enumerate(rows):
        retired = ages > params.retirement_age
        pensioners[i] = float(w[retired].sum())
        contrib_income[i] = float((w[~retired] * np.exp(y[~retired])).sum())
        inflow[i] = params.alpha * contrib_income[i]
        outflow[i] = params.p * pensioners[i]
    return CashflowSeries(
        waves=wave_ids,
        inflow=inflow,
        outflow=outflow,
        balance=inflow - outflow,
        pensioners=pensioners,
        contributor_income=contrib_income,
    )


def sweep_alpha(waves, p: float, alphas: list[float], retirement_age: int = 65) -> list[tuple[float, CashflowSeries]]:
    """Cash flows for each contribution rate; inflow is linear in the rate."""
    return [
        (alpha, cashflow(waves, PensionParams(p=p, alpha=alpha, retirement_age=retirement_age)))
        for alpha in alphas
    ]
