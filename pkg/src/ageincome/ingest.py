"""Survey microdata ingestion: deflation, filtering, log transform.

Raw rows are (id, year, age, nominal income, survey weight). Cleaning
applies, in order: sentinel-code removal, numeric validation, deflation to
base-year terms, a floor-wage cut, top-coded and out-of-range age removal,
and de-duplication on (id, year). Surviving incomes are stored as natural
logs. Every dropped record is counted under the first reason that applied.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError, SchemaError

PANEL_COLUMNS = ["id", "year", "age", "log_income", "weight"]

DROP_REASONS = [
    "sentinel_income",
    "missing_value",
    "bad_weight",
    "missing_deflator_year",
    "below_floor",
    "topcoded_age",
    "out_of_range_age",
    "duplicate",
]


@dataclass(frozen=True)
class IndividualRecord:
    """One person-year observation as it appears in a source file."""

    id: str
    year: int
    age: int
    income: float
    weight: float = 1.0


@dataclass(frozen=True)
class DeflatorSeries:
    """Price index by year; deflation rescales incomes to base-year terms."""

    index: dict[int, float]
    base_year: int

    def __post_init__(self) -> None:
        if self.base_year not in self.index:
            raise ConfigError(f"base year {self.base_year} missing from deflator series")
        if any(v <= 0 for v in self.index.values()):
            raise ConfigError("deflator indices must be positive")

    @classmethod
    def from_csv(cls, path: str | Path, base_year: int) -> "DeflatorSeries":
        table: dict[int, float] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"year", "index"}.issubset(reader.fieldnames):
                raise SchemaError(f"deflator file {path} must have columns year,index")
            for row in reader:
                table[int(row["year"])] = float(row["index"])
        return cls(index=table, base_year=base_year)

    def factor(self, year: int) -> float:
        """Multiplier taking a nominal income in `year` to base-year terms."""
        return self.index[self.base_year] / self.index[year]


@dataclass(frozen=True)
class IngestConfig:
    """Column mapping and cleaning thresholds for one source file."""

    id_col: str
    year_col: str
    age_col: str
    income_col: str
    weight_col: str | None = None
    floor_wage: float = 0.0
    sentinel_codes: tuple[float, ...] = ()
    age_topcodes: tuple[int, ...] = ()
    age_min: int = 15
    age_max: int = 100

    def __post_init__(self) -> None:
        cols = [self.id_col, self.year_col, self.age_col, self.income_col]
        if self.weight_col is not None:
            cols.append(self.weight_col)
        if len(set(cols)) != len(cols):
            raise ConfigError(f"mapped columns must be distinct, got {cols}")
        if self.floor_wage < 0:
            raise ConfigError("floor_wage must be non-negative")
        if self.age_min >= self.age_max:
            raise ConfigError("age_min must be below age_max")


@dataclass
class DropReport:
    """Record counts dropped during ingestion, by first matching reason."""

    counts: dict[str, int] = field(default_factory=lambda: {r: 0 for r in DROP_REASONS})
    n_read: int = 0
    n_kept: int = 0

    @property
    def n_dropped(self) -> int:
        return sum(self.counts.values())

    def as_dict(self) -> dict:
        return {"read": self.n_read, "kept": self.n_kept, "dropped": dict(self.counts)}


@dataclass
class LogIncomePanel:
    """Cleaned panel of log incomes, at most one record per (id, year)."""

    ids: np.ndarray
    years: np.ndarray
    ages: np.ndarray
    log_income: np.ndarray
    weights: np.ndarray
    base_year: int | None = None

    def __post_init__(self) -> None:
        self.years = np.asarray(self.years, dtype=np.int64)
        self.ages = np.asarray(self.ages, dtype=np.int64)
        self.log_income = np.asarray(self.log_income, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        n = len(self.ids)
        for name, arr in (
            ("years", self.years),
            ("ages", self.ages),
            ("log_income", self.log_income),
            ("weights", self.weights),
        ):
            if len(arr) != n:
                raise DataError(f"panel column {name} has length {len(arr)}, expected {n}")
        if n and not np.all(np.isfinite(self.log_income)):
            raise DataError("panel log incomes must be finite")
        if n and np.any(self.weights < 0):
            raise DataError("panel weights must be non-negative")

    def __len__(self) -> int:
        return len(self.ids)

    def validate_unique(self) -> "LogIncomePanel":
        key = pd.MultiIndex.from_arrays([self.ids, self.years])
        if key.has_duplicates:
            raise DataError("panel has more than one record per (id, year)")
        return self

    def wave_years(self) -> list[int]:
        return sorted(int(y) for y in np.unique(self.years))

    def wave(self, year: int) -> "LogIncomePanel":
        m = self.years == year
        return LogIncomePanel(
            ids=np.asarray(self.ids)[m],
            years=self.years[m],
            ages=self.ages[m],
            log_income=self.log_income[m],
            weights=self.weights[m],
            base_year=self.base_year,
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "id": self.ids,
                "year": self.years,
                "age": self.ages,
                "log_income": self.log_income,
                "weight": self.weights,
            }
        )

    def write_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def read_csv(cls, path: str | Path, base_year: int | None = None) -> "LogIncomePanel":
        df = pd.read_csv(path, dtype={"id": str}, float_precision="round_trip")
        missing = [c for c in PANEL_COLUMNS if c not in df.columns]
        if missing:
            raise SchemaError(f"panel file {path} lacks columns {missing}")
        return cls(
            ids=df["id"].to_numpy(),
            years=df["year"].to_numpy(),
            ages=df["age"].to_numpy(),
            log_income=df["log_income"].to_numpy(),
            weights=df["weight"].to_numpy(),
            base_year=base_year,
        )


@dataclass
class TransitionSet:
    """Consecutive-year log-income pairs (y_a, y_{a+1}) grouped by age a."""

    by_age: dict[int, np.ndarray]

    @property
    def ages(self) -> list[int]:
        return sorted(self.by_age)

    def pairs(self, a: int) -> np.ndarray:
        return self.by_age.get(a, np.empty((0, 2)))

    def n_pairs(self, a: int) -> int:
        return len(self.pairs(a))

    @property
    def total(self) -> int:
        return sum(len(v) for v in self.by_age.values())


def load_panel(
    source, config: IngestConfig, deflator: DeflatorSeries
) -> tuple[LogIncomePanel, DropReport]:
    """Read a source CSV, clean it, and return the log-income panel.

    Raises SchemaError when a mapped column is absent. Record-level
    problems (sentinels, unknown deflator years, sub-floor incomes, bad
    ages) drop the record and are tallied in the returned DropReport.
    """
    df = pd.read_csv(source, dtype={config.id_col: str}, float_precision="round_trip")
    mapped = {
        "id": config.id_col,
        "year": config.year_col,
        "age": config.age_col,
        "income": config.income_col,
    }
    if config.weight_col is not None:
        mapped["weight"] = config.weight_col
    missing = [src for src in mapped.values() if src not in df.columns]
    if missing:
        raise SchemaError(f"input lacks mapped columns {missing}")

    work = pd.DataFrame({dst: df[src] for dst, src in mapped.items()})
    if config.weight_col is None:
        work["weight"] = 1.0
    for col in ("year", "age", "income", "weight"):
        work[col] = pd.to_numeric(work[col], errors="coerce")

    report = DropReport(n_read=len(work))
    reason = pd.Series("", index=work.index, dtype=object)

    def mark(mask: pd.Series, why: str) -> None:
        hit = mask.fillna(False) & (reason == "")
        reason[hit] = why

    if config.sentinel_codes:
        mark(work["income"].isin(list(config.sentinel_codes)), "sentinel_income")
    mark(work["year"].isna() | work["age"].isna() | work["income"].isna(), "missing_value")
    mark(work["weight"].isna() | (work["weight"] < 0), "bad_weight")

    known_years = work["year"].isin(list(deflator.index))
    mark(~known_years, "missing_deflator_year")

    factors = work["year"].map(lambda y: deflator.factor(int(y)) if not pd.isna(y) and int(y) in deflator.index else np.nan)
    deflated = work["income"] * factors
    mark((deflated < config.floor_wage) | (deflated <= 0), "below_floor")

    if config.age_topcodes:
        mark(work["age"].isin(list(config.age_topcodes)), "topcoded_age")
    mark((work["age"] < config.age_min) | (work["age"] > config.age_max), "out_of_range_age")

    mark(work.duplicated(subset=["id", "year"], keep="first"), "duplicate")

    for why, count in reason[reason != ""].value_counts().items():
        report.counts[str(why)] = int(count)

    keep = reason == ""
    kept = work[keep]
    report.n_kept = len(kept)

    panel = LogIncomePanel(
        ids=kept["id"].to_numpy(),
        years=kept["year"].to_numpy(dtype=np.int64),
        ages=kept["age"].to_numpy(dtype=np.int64),
        log_income=np.log(deflated[keep].to_numpy(dtype=float)),
        weights=kept["weight"].to_numpy(dtype=float),
        base_year=deflator.base_year,
    ).validate_unique()
    return panel, report


def make_transitions(panel: LogIncomePanel) -> TransitionSet:
    """Pair each record with the same id one year later and one year older."""
    if len(panel) == 0:
        return TransitionSet(by_age={})
    df = panel.to_frame().sort_values(["id", "year"], kind="mergesort")
    nxt = df.groupby("id", sort=False).shift(-1)
    ok = (nxt["year"] == df["year"] + 1) & (nxt["age"] == df["age"] + 1)
    ages = df.loc[ok, "age"].to_numpy(dtype=np.int64)
    y = df.loc[ok, "log_income"].to_numpy(dtype=float)
    y_next = nxt.loc[ok, "log_income"].to_numpy(dtype=float)

    by_age: dict[int, np.ndarray] = {}
    order = np.argsort(ages, kind="stable")
    ages, y, y_next = ages[order], y[order], y_next[order]
    for a in np.unique(ages):
        m = ages == a
        by_age[int(a)] = np.column_stack([y[m], y_next[m]])
    return TransitionSet(by_age=by_age)
