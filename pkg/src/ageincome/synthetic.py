"""Synthetic panels with known ground truth, for calibration testing.

Wave 1 draws each age's log incomes from a normal with configurable mean
and spread. Later waves advance every agent one age with the income law;
agents stepping past the top age leave the panel and, unless injection is
disabled, a fresh cohort enters at the bottom age so every age stays
populated in every wave. All weights are 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .ingest import LogIncomePanel
from .model import AgeProfile, step_many
from .noise import NoiseSpec


@dataclass(frozen=True)
class InitialAges:
    """Per-age wave-1 normal parameters and headcounts over a_min..a_max."""

    a_min: int
    a_max: int
    mean: np.ndarray
    std: np.ndarray
    count: np.ndarray

    def __post_init__(self) -> None:
        n = self.a_max - self.a_min + 1
        for name in ("mean", "std", "count"):
            arr = np.asarray(getattr(self, name))
            if arr.shape != (n,):
                raise ConfigError(f"initial {name} must have one entry per age ({n})")
        if np.any(np.asarray(self.count) < 1):
            raise ConfigError("initial counts must be positive")
        if np.any(np.asarray(self.std) < 0):
            raise ConfigError("initial stds must be non-negative")

    def for_age(self, a: int) -> tuple[float, float, int]:
        i = a - self.a_min
        return float(self.mean[i]), float(self.std[i]), int(self.count[i])


@dataclass
class SyntheticPanel:
    """A generated panel plus the profile and initial state that made it."""

    panel: LogIncomePanel
    truth: AgeProfile
    initial: InitialAges
    seed: int


def generate_synthetic_panel(
    profile: AgeProfile,
    initial: InitialAges,
    waves: int,
    noise: NoiseSpec,
    start_year: int = 1,
    inject: bool = True,
) -> SyntheticPanel:
    """Evolve a balanced panel for `waves` annual waves under `profile`.

    Agents keep their ids across waves; ids are assigned in order of
    creation so the same seed reproduces the panel bit for bit. With
    ``inject=False`` no new cohort enters and the panel ages out at the
    top, which is useful for ageing-population fixtures.
    """
    if waves < 2:
        raise ConfigError("waves must be at least 2")
    if (initial.a_min, initial.a_max) != (profile.a_min, profile.a_max):
        raise ConfigError("initial age range must match the profile range")
    profile.require_complete()

    init_rng = noise.generator("synthetic-init")
    ages_all = np.arange(profile.a_min, profile.a_max + 1)

    cur_ids: list[np.ndarray] = []
    cur_ages: list[np.ndarray] = []
    cur_y: list[np.ndarray] = []
    next_id = 0
    for a in ages_all:
        m, s, c = initial.for_age(int(a))
        cur_ids.append(np.arange(next_id, next_id + c, dtype=np.int64))
        cur_ages.append(np.full(c, a, dtype=np.int64))
        cur_y.append(init_rng.normal(m, s, size=c))
        next_id += c

    ids = np.concatenate(cur_ids)
    ages = np.concatenate(cur_ages)
    y = np.concatenate(cur_y)

    out_ids = [ids]
    out_ages = [ages]
    out_y = [y]
    out_years = [np.full(len(ids), start_year, dtype=np.int64)]

    for w in range(1, waves):
        survivors = ages < profile.a_max
        eta = noise.normals(("wave", w), ids[survivors])
        y = step_many(y[survivors], ages[survivors], profile, eta)
        ages = ages[survivors] + 1
        ids = ids[survivors]
        if inject:
            m, s, c = initial.for_age(profile.a_min)
            inj_rng = noise.generator("synthetic-inject", w)
            ids = np.concatenate([ids, np.arange(next_id, next_id + c, dtype=np.int64)])
            ages = np.concatenate([ages, np.full(c, profile.a_min, dtype=np.int64)])
            y = np.concatenate([y, inj_rng.normal(m, s, size=c)])
            next_id += c
        out_ids.append(ids)
        out_ages.append(ages)
        out_y.append(y)
        out_years.append(np.full(len(ids), start_year + w, dtype=np.int64))

    panel = LogIncomePanel(
        ids=np.concatenate(out_ids),
        years=np.concatenate(out_years),
        ages=np.concatenate(out_ages),
        log_income=np.concatenate(out_y),
        weights=np.ones(sum(len(v) for v in out_ids)),
    )
    return SyntheticPanel(panel=panel, truth=profile, initial=initial, seed=noise.seed)


def stationary_initial(
    profile: AgeProfile,
    mean_first: float,
    std_first: float,
    count_per_age: int,
) -> InitialAges:
    """Initial wave whose per-age mean/std reproduce themselves in time.

    The mean and std ladders are obtained by iterating the two moment
    recursions from the bottom age, so a panel generated from this state
    is stationary: each (age, wave) cell has the same distribution.
    """
    n_ages = profile.a_max - profile.a_min + 1
    mean = np.empty(n_ages)
    std = np.empty(n_ages)
    mean[0], std[0] = mean_first, std_first
    for i in range(n_ages - 1):
        mean[i + 1] = profile.q[i] * mean[i] + profile.mu[i]
        std[i + 1] = np.hypot(profile.q[i] * std[i], profile.sigma[i])
    return InitialAges(
        a_min=profile.a_min,
        a_max=profile.a_max,
        mean=mean,
        std=std,
        count=np.full(n_ages, count_per_age, dtype=np.int64),
    )


def smooth_profile(
    a_min: int,
    a_max: int,
    q_start: float,
    q_end: float,
    target_mean: float,
    sigma: float,
) -> AgeProfile:
    """Linearly rising persistence with mu pinned to a flat mean profile.

    Choosing mu[a] = (1 - q[a]) * target_mean makes `target_mean` a fixed
    point of the mean recursion at every age.
    """
    n = a_max - a_min
    q = np.linspace(q_start, q_end, n)
    return AgeProfile(
        a_min=a_min,
        a_max=a_max,
        q=q,
        mu=(1.0 - q) * target_mean,
        sigma=np.full(n, float(sigma)),
    )
