"""Forward simulation: evolve a bootstrapped population wave by wave.

Every wave update advances each agent one age with the income law, drops
agents that would leave the modelled age range, and injects a fresh cohort
at the injection age by resampling, with replacement, the initial wave's
agents of that age. The injected cohort size equals the initial wave's
headcount at the injection age, so population size changes only through
top-age exits. Per-agent shocks are keyed by (seed, wave, agent id):
updating agents in any order, or in parallel, gives identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ConfigError, DataError
from .ingest import LogIncomePanel
from .model import Agent, AgeProfile, step_many
from .noise import NoiseSpec


@dataclass
class Population:
    """All agents alive in one wave; ids are unique within the wave."""

    wave_year: int
    ids: np.ndarray
    ages: np.ndarray
    log_income: np.ndarray

    def __post_init__(self) -> None:
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.ages = np.asarray(self.ages, dtype=np.int64)
        self.log_income = np.asarray(self.log_income, dtype=float)
        if not (len(self.ids) == len(self.ages) == len(self.log_income)):
            raise DataError("population arrays must have equal length")
        if len(self.ids) != len(np.unique(self.ids)):
            raise DataError(f"duplicate agent ids in wave {self.wave_year}")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def agents(self) -> Iterator[Agent]:
        for i in range(len(self.ids)):
            yield Agent(id=int(self.ids[i]), age=int(self.ages[i]), log_income=float(self.log_income[i]))

    def to_panel(self) -> LogIncomePanel:
        """Wave dump in the panel interchange layout, all weights 1."""
        return LogIncomePanel(
            ids=self.ids.copy(),
            years=np.full(len(self), self.wave_year, dtype=np.int64),
            ages=self.ages.copy(),
            log_income=self.log_income.copy(),
            weights=np.ones(len(self)),
        )


@dataclass(frozen=True)
class SimConfig:
    """Run length, cohort injection rule, exit age, and seed."""

    waves: int
    injection_age: int = 25
    exit_age: int | None = None  # default: profile a_max
    seed: int = 0

    def __post_init__(self) -> None:
        if self.waves < 1:
            raise ConfigError("waves must be at least 1")


def bootstrap_from_panel(panel: LogIncomePanel, year: int) -> Population:
    """One agent per record of the given wave; survey weights are ignored."""
    wave = panel.wave(year)
    if len(wave) == 0:
        raise DataError(f"panel has no records for wave {year}")
    return Population(
        wave_year=year,
        ids=np.arange(len(wave), dtype=np.int64),
        ages=wave.ages.copy(),
        log_income=wave.log_income.copy(),
    )


def advance_wave(
    pop: Population,
    profile: AgeProfile,
    cfg: SimConfig,
    noise: NoiseSpec,
    injection_pool: np.ndarray | None = None,
) -> Population:
    """One wave update: age, step incomes, drop top-age exits, inject.

    `injection_pool` holds the initial wave's log incomes at the injection
    age; the new cohort resamples it with replacement and its size equals
    the pool size. An empty or missing pool injects nobody.
    """
    profile.require_complete()
    exit_age = cfg.exit_age if cfg.exit_age is not None else profile.a_max
    new_year = pop.wave_year + 1

    survives = pop.ages + 1 <= exit_age
    ages = pop.ages[survives]
    if ages.size and (ages.min() < profile.a_min or ages.max() >= profile.a_max):
        bad = sorted(set(int(a) for a in ages[(ages < profile.a_min) | (ages >= profile.a_max)]))
        raise DataError(f"profile is missing transitions for ages {bad}")
    ids = pop.ids[survives]
    eta = noise.normals(("wave", new_year), ids)
    y = step_many(pop.log_income[survives], ages, profile, eta)
    ages = ages + 1

    if injection_pool is not None and len(injection_pool) > 0:
        if not (profile.a_min <= cfg.injection_age <= profile.a_max):
            raise ConfigError(
                f"injection age {cfg.injection_age} outside profile range "
                f"[{profile.a_min}, {profile.a_max}]"
            )
        k = len(injection_pool)
        pick = noise.generator("inject", new_year).integers(0, k, size=k)
        next_id = int(pop.ids.max()) + 1 if len(pop) else 0
        ids = np.concatenate([ids, np.arange(next_id, next_id + k, dtype=np.int64)])
        ages = np.concatenate([ages, np.full(k, cfg.injection_age, dtype=np.int64)])
        y = np.concatenate([y, np.asarray(injection_pool, dtype=float)[pick]])

    return Population(wave_year=new_year, ids=ids, ages=ages, log_income=y)


def run(panel: LogIncomePanel, profile: AgeProfile, cfg: SimConfig) -> list[Population]:
    """Bootstrap from the panel's first wave and advance cfg.waves - 1 times."""
    noise = NoiseSpec(seed=cfg.seed)
    first_year = min(panel.wave_years())
    pop = bootstrap_from_panel(panel, first_year)
    pool = pop.log_income[pop.ages == cfg.injection_age].copy()
    out = [pop]
    for _ in range(cfg.waves - 1):
        pop = advance_wave(pop, profile, cfg, noise, injection_pool=pool)
        out.append(pop)
    return out
