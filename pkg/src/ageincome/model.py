"""Age-conditional income process: state types and one-step evolution law.

Log income y of an agent aged a advances to age a+1 as

    y' = q[a] * y + mu[a] + sigma[a] * eta,      eta ~ N(0, 1) i.i.d.

with one parameter triple (q, mu, sigma) per age transition. Averaging the
law over a stationary population gives the moment recursions used by the
calibrators and by the stationarity checks:

    mean'    = q * mean + mu
    std'**2  = q**2 * std**2 + sigma**2

and, combining the two, the squared-moment identity

    mean'**2 + std'**2 = q**2 (mean**2 + std**2) + mu**2 + sigma**2
                         + 2 q mu mean
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AgeRangeError, DataError

DEFAULT_AGE_MIN = 15
DEFAULT_AGE_MAX = 100


@dataclass(frozen=True)
class Agent:
    """One individual: identifier, age in years, natural log of real income."""

    id: int | str
    age: int
    log_income: float


@dataclass
class AgeProfile:
    """Per-age parameter triples over the transitions a -> a+1.

    Arrays are indexed by transition: entry i governs the step from age
    a_min + i to a_min + i + 1, so each array has length a_max - a_min.
    NaN entries mark ages a calibrator could not estimate; a profile must
    be complete (all finite) before it can drive a simulation.
    """

    a_min: int
    a_max: int
    q: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    flags: dict[int, list[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.a_min >= self.a_max:
            raise DataError(f"need a_min < a_max, got [{self.a_min}, {self.a_max}]")
        n = self.a_max - self.a_min
        self.q = np.asarray(self.q, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        for name, arr in (("q", self.q), ("mu", self.mu), ("sigma", self.sigma)):
            if arr.shape != (n,):
                raise DataError(f"{name} must have length a_max - a_min = {n}, got {arr.shape}")
        if np.any(np.isinf(self.q)) or np.any(np.isinf(self.mu)) or np.any(np.isinf(self.sigma)):
            raise DataError("profile entries must be finite or NaN")
        if np.any(self.sigma[np.isfinite(self.sigma)] < 0):
            raise DataError("sigma entries must be non-negative")

    @property
    def ages(self) -> np.ndarray:
        """Transition ages a_min .. a_max - 1."""
        return np.arange(self.a_min, self.a_max)

    @property
    def complete(self) -> bool:
        return bool(
            np.all(np.isfinite(self.q))
            and np.all(np.isfinite(self.mu))
            and np.all(np.isfinite(self.sigma))
        )

    def index(self, a: int) -> int:
        if not (self.a_min <= a < self.a_max):
            raise AgeRangeError(
                f"age {a} has no transition in profile range [{self.a_min}, {self.a_max}]"
            )
        return int(a) - self.a_min

    def at(self, a: int) -> tuple[float, float, float]:
        """(q, mu, sigma) for the transition a -> a+1."""
        i = self.index(a)
        return float(self.q[i]), float(self.mu[i]), float(self.sigma[i])

    def require_complete(self) -> "AgeProfile":
        if not self.complete:
            missing = [int(a) for a, ok in zip(self.ages, np.isfinite(self.q)) if not ok]
            raise DataError(f"profile has missing entries at ages {missing}")
        return self

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["age", "q", "mu", "sigma", "flags"])
            for i, a in enumerate(self.ages):
                writer.writerow(
                    [
                        int(a),
                        repr(float(self.q[i])),
                        repr(float(self.mu[i])),
                        repr(float(self.sigma[i])),
                        ";".join(self.flags.get(int(a), [])),
                    ]
                )

    @classmethod
    def read_csv(cls, path: str | Path) -> "AgeProfile":
        rows: dict[int, tuple[float, float, float, list[str]]] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"age", "q", "mu", "sigma"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise DataError(f"profile file {path} must have columns age,q,mu,sigma")
            for row in reader:
                flags = [f for f in (row.get("flags") or "").split(";") if f]
                rows[int(row["age"])] = (
                    float(row["q"]),
                    float(row["mu"]),
                    float(row["sigma"]),
                    flags,
                )
        if not rows:
            raise DataError(f"profile file {path} is empty")
        ages = sorted(rows)
        a_min, a_max = ages[0], ages[-1] + 1
        if ages != list(range(a_min, a_max)):
            raise DataError(f"profile file {path} must cover a contiguous age range")
        return cls(
            a_min=a_min,
            a_max=a_max,
            q=np.array([rows[a][0] for a in ages]),
            mu=np.array([rows[a][1] for a in ages]),
            sigma=np.array([rows[a][2] for a in ages]),
            flags={a: rows[a][3] for a in ages if rows[a][3]},
        )


def step(y: float, a: int, profile: AgeProfile, eta: float) -> float:
    """Advance one agent's log income across the transition a -> a+1."""
    q, mu, sigma = profile.at(a)
    if not (math.isfinite(y) and math.isfinite(eta)):
        raise DataError("step requires finite log income and shock")
    return q * y + mu + sigma * eta


def step_many(
    y: np.ndarray, ages: np.ndarray, profile: AgeProfile, eta: np.ndarray
) -> np.ndarray:
    """Vectorized `step` for agents at possibly different ages."""
    ages = np.asarray(ages)
    if ages.size and (ages.min() < profile.a_min or ages.max() >= profile.a_max):
        bad = ages[(ages < profile.a_min) | (ages >= profile.a_max)]
        raise AgeRangeError(
            f"ages {sorted(set(int(a) for a in bad))} have no transition in "
            f"profile range [{profile.a_min}, {profile.a_max}]"
        )
    idx = ages - profile.a_min
    return profile.q[idx] * y + profile.mu[idx] + profile.sigma[idx] * eta


def stationary_mean_next(ybar_a: float, profile: AgeProfile, a: int) -> float:
    """Population mean at age a+1 implied by the mean at age a."""
    q, mu, _ = profile.at(a)
    return q * ybar_a + mu


def stationary_std_next(std_a: float, profile: AgeProfile, a: int) -> float:
    """Population standard deviation at age a+1 implied by the value at age a."""
    if std_a < 0:
        raise DataError("standard deviation must be non-negative")
    q, _, sigma = profile.at(a)
    return math.hypot(q * std_a, sigma)


def stationary_std_ladder(std_first: float, profile: AgeProfile) -> np.ndarray:
    """Std at every age a_min..a_max obtained by iterating the std recursion."""
    out = np.empty(profile.a_max - profile.a_min + 1)
    out[0] = std_first
    for i, a in enumerate(profile.ages):
        out[i + 1] = stationary_std_next(out[i], profile, int(a))
    return out
