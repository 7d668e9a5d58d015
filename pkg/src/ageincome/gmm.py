"""Method-of-moments calibration from per-age cross-sectional moments.

Matching the first three moments of log income across one age transition
gives an exactly identified system for (q, mu, sigma):

    mean'        = q * mean + mu
    std'**2      = q**2 * std**2 + sigma**2
    E[y'**3]     = E[(q y + mu + sigma eta)**3]

Eliminating mu and sigma**2 with the first two equations collapses the
third into a pure cubic: the quadratic and linear coefficients cancel
identically, leaving

    central3(a) * q**3 - central3(a+1) = 0

where central3 is the third central moment. Equivalently, one step of the
income law scales the third central moment by q**3 (the Gaussian shock
contributes none). A pure cubic has exactly one real root, but the solver
and the selection rule below handle the general case so that perturbed or
externally supplied coefficient sets are still resolved sensibly.

The flip side of the collapse: when both third central moments vanish
(symmetric populations), the cubic is identically zero and q is not
identified by per-age moments at all. Sample noise then produces an
essentially arbitrary root; the diagnostics record the central-moment
magnitudes so downstream users can judge identification strength.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cubic
from .errors import EstimationError
from .ingest import LogIncomePanel
from .model import AgeProfile

# Scale-relative threshold below which a coefficient counts as exactly zero.
DEGENERATE_RTOL = 1e-12

# Roots are steered toward economically plausible persistence values.
PLAUSIBLE_Q = (0.0, 1.1)


@dataclass(frozen=True)
class AgeMoments:
    """Weighted cross-sectional moments of log income at one age."""

    ybar: float
    std: float
    m3: float  # raw third moment E[y**3]
    n: float  # effective count (sum w)**2 / sum w**2

    @property
    def central3(self) -> float:
        """Third central moment from the raw moments."""
        return self.m3 - 3.0 * self.ybar * self.std**2 - self.ybar**3


@dataclass
class WaveMoments:
    """Per-age moments for one wave, or pooled across waves (year=None)."""

    by_age: dict[int, AgeMoments]
    year: int | None = None

    @property
    def ages(self) -> list[int]:
        return sorted(self.by_age)

    def get(self, a: int) -> AgeMoments | None:
        return self.by_age.get(a)


def compute_wave_moments(panel: LogIncomePanel, year: int) -> WaveMoments:
    """Weighted mean, std (divisor = total weight), and raw third moment per age."""
    wave = panel.wave(year)
    by_age: dict[int, AgeMoments] = {}
    if len(wave) == 0:
        return WaveMoments(by_age=by_age, year=year)
    ages, inv = np.unique(wave.ages, return_inverse=True)
    w = wave.weights
    y = wave.log_income
    w_tot = np.bincount(inv, weights=w)
    w_sq = np.bincount(inv, weights=w * w)
    present = w_tot > 0
    ybar = np.full(len(ages), np.nan)
    ybar[present] = np.bincount(inv, weights=w * y)[present] / w_tot[present]
    dev = y - ybar[inv]
    var = np.zeros(len(ages))
    var[present] = np.bincount(inv, weights=w * dev * dev)[present] / w_tot[present]
    m3 = np.full(len(ages), np.nan)
    m3[present] = np.bincount(inv, weights=w * y**3)[present] / w_tot[present]
    for i, a in enumerate(ages):
        if not present[i]:
            continue
        by_age[int(a)] = AgeMoments(
            ybar=float(ybar[i]),
            std=float(np.sqrt(max(var[i], 0.0))),
            m3=float(m3[i]),
            n=float(w_tot[i] ** 2 / w_sq[i]),
        )
    return WaveMoments(by_age=by_age, year=year)


def pool_moments(per_wave: list[WaveMoments]) -> WaveMoments:
    """Average each age's moments over the waves where the age is present."""
    if not per_wave:
        raise EstimationError("pool_moments needs at least one wave")
    all_ages = sorted({a for wm in per_wave for a in wm.by_age})
    pooled: dict[int, AgeMoments] = {}
    for a in all_ages:
        entries = [wm.by_age[a] for wm in per_wave if a in wm.by_age]
        pooled[a] = AgeMoments(
            ybar=float(np.mean([e.ybar for e in entries])),
            std=float(np.mean([e.std for e in entries])),
            m3=float(np.mean([e.m3 for e in entries])),
            n=float(np.sum([e.n for e in entries])),
        )
    return WaveMoments(by_age=pooled, year=None)


@dataclass(frozen=True)
class CubicCoefficients:
    """c3 q^3 + c2 q^2 + c1 q + c0 = 0; c2 and c1 are zero by construction."""

    c3: float
    c2: float
    c1: float
    c0: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.c3, self.c2, self.c1, self.c0)


def cubic_for_age(pooled: WaveMoments, a: int) -> CubicCoefficients:
    """Cubic in q for the transition a -> a+1 from pooled moments.

    Requires both endpoint ages with effective count of at least 2. The
    middle coefficients are exactly zero (see module docstring), so the
    returned polynomial is central3(a) q^3 - central3(a+1).
    """
    lo, hi = pooled.get(a), pooled.get(a + 1)
    if lo is None or hi is None or lo.n < 2 or hi.n < 2:
        raise EstimationError(f"ages {a} and {a + 1} need effective counts of at least 2")
    return CubicCoefficients(c3=lo.central3, c2=0.0, c1=0.0, c0=-hi.central3)


def solve_cubic(c: CubicCoefficients) -> list[float]:
    """All distinct real roots, Newton-polished, ascending."""
    return cubic.real_roots_cubic(*c.as_tuple())


def select_root(roots: list[float], std_a: float, std_next: float) -> float:
    """Pick one root: least variance-identity violation, then plausibility.

    Violation is how negative sigma**2 = std'**2 - q**2 std**2 would go.
    Ties break by distance from the plausible persistence band, then by
    smallest magnitude.
    """
    if not roots:
        raise EstimationError("no real root to select")

    def key(q: float) -> tuple[float, float, float]:
        violation = max(0.0, q * q * std_a * std_a - std_next * std_next)
        lo, hi = PLAUSIBLE_Q
        band_dist = max(0.0, lo - q, q - hi)
        return (violation, band_dist, abs(q))

    return min(roots, key=key)


@dataclass
class AgeDiagnostics:
    """Everything estimate_gmm learned about one age transition."""

    roots: list[float]
    chosen: float | None
    central3_a: float
    central3_next: float
    clamped: bool = False
    degenerate: bool = False
    error: str | None = None


@dataclass
class GmmResult:
    """Estimated profile plus per-age diagnostics; NaN rows are missing."""

    a_min: int
    a_max: int
    q: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    flags: dict[int, list[str]] = field(default_factory=dict)
    diagnostics: dict[int, AgeDiagnostics] = field(default_factory=dict)

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

    def write_diagnostics_json(self, path: str | Path) -> None:
        payload = {
            str(a): {
                "roots": d.roots,
                "chosen": d.chosen,
                "central3_a": d.central3_a,
                "central3_next": d.central3_next,
                "clamped": d.clamped,
                "degenerate": d.degenerate,
                "error": d.error,
            }
            for a, d in sorted(self.diagnostics.items())
        }
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))


def estimate_gmm(
    pooled: WaveMoments, a_min: int | None = None, a_max: int | None = None
) -> GmmResult:
    """Estimate (q, mu, sigma) for every transition in [a_min, a_max).

    Per age: solve the cubic for q, then mu = mean' - q mean and
    sigma**2 = std'**2 - q**2 std**2. A negative sigma**2 is clamped to
    zero and flagged. An identically zero cubic (symmetric populations)
    leaves q unidentified; the selection rule then degrades to the
    smallest-magnitude plausible value, q = 0, and the age is flagged
    `degenerate`. Ages without data are marked missing (NaN).
    """
    ages = pooled.ages
    if not ages:
        raise EstimationError("no ages present in pooled moments")
    if a_min is None:
        a_min = ages[0]
    if a_max is None:
        a_max = ages[-1]
    if a_min >= a_max:
        raise EstimationError(f"need a_min < a_max, got [{a_min}, {a_max}]")

    n = a_max - a_min
    q = np.full(n, np.nan)
    mu = np.full(n, np.nan)
    sigma = np.full(n, np.nan)
    flags: dict[int, list[str]] = {}
    diagnostics: dict[int, AgeDiagnostics] = {}

    for a in range(a_min, a_max):
        i = a - a_min
        lo, hi = pooled.get(a), pooled.get(a + 1)
        try:
            coeffs = cubic_for_age(pooled, a)
        except EstimationError as exc:
            diagnostics[a] = AgeDiagnostics(
                roots=[],
                chosen=None,
                central3_a=lo.central3 if lo else float("nan"),
                central3_next=hi.central3 if hi else float("nan"),
                error=str(exc),
            )
            flags[a] = ["missing"]
            continue

        scale = DEGENERATE_RTOL * max(1.0, abs(lo.m3), abs(hi.m3))
        diag = AgeDiagnostics(
            roots=[], chosen=None, central3_a=coeffs.c3, central3_next=-coeffs.c0
        )
        if abs(coeffs.c3) <= scale and abs(coeffs.c0) <= scale:
            diag.degenerate = True
            q_a = 0.0
            diag.roots = [q_a]
        elif abs(coeffs.c3) <= scale:
            diag.error = "cubic has no real root (zero leading coefficient)"
            diagnostics[a] = diag
            flags[a] = ["missing"]
            continue
        else:
            diag.roots = solve_cubic(coeffs)
            if not diag.roots:
                diag.error = "cubic has no real root"
                diagnostics[a] = diag
                flags[a] = ["missing"]
                continue
            q_a = select_root(diag.roots, lo.std, hi.std)

        mu_a = hi.ybar - q_a * lo.ybar
        sigma_sq = hi.std**2 - q_a**2 * lo.std**2
        age_flags: list[str] = []
        if diag.degenerate:
            age_flags.append("degenerate")
        if sigma_sq < 0:
            sigma_sq = 0.0
            diag.clamped = True
            age_flags.append("clamped")
        diag.chosen = q_a
        diagnostics[a] = diag
        if age_flags:
            flags[a] = age_flags
        q[i], mu[i], sigma[i] = q_a, mu_a, np.sqrt(sigma_sq)

    return GmmResult(
        a_min=a_min, a_max=a_max, q=q, mu=mu, sigma=sigma, flags=flags, diagnostics=diagnostics
    )
