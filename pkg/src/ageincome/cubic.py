"""Real roots of cubic polynomials with real coefficients.

The closed-form (Cardano) solution is evaluated on the depressed cubic,
using the trigonometric form when all three roots are real, then each root
is polished with a few Newton iterations on the original coefficients.
Degenerate leading coefficients degrade to the quadratic / linear solve.
"""

from __future__ import annotations

import math

_NEWTON_STEPS = 4


def eval_poly(coeffs: tuple[float, ...], x: float) -> float:
    """Horner evaluation; ``coeffs`` ordered highest degree first."""
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def _polish(coeffs: tuple[float, ...], x: float) -> float:
    """A few Newton steps on the full polynomial; keeps the best iterate."""
    deriv = tuple(c * k for k, c in zip(range(len(coeffs) - 1, 0, -1), coeffs))
    best_x, best_f = x, abs(eval_poly(coeffs, x))
    for _ in range(_NEWTON_STEPS):
        fp = eval_poly(deriv, x)
        if fp == 0.0 or not math.isfinite(fp):
            break
        x = x - eval_poly(coeffs, x) / fp
        f = abs(eval_poly(coeffs, x))
        if not math.isfinite(f):
            break
        if f < best_f:
            best_x, best_f = x, f
    return best_x


def _dedupe(roots: list[float]) -> list[float]:
    roots = sorted(roots)
    out: list[float] = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-9 * max(1.0, abs(r), abs(out[-1])):
            out.append(r)
    return out


def real_roots_linear(c1: float, c0: float) -> list[float]:
    if c1 == 0.0:
        return []  # constant polynomial: no isolated roots
    return [-c0 / c1]


def real_roots_quadratic(c2: float, c1: float, c0: float) -> list[float]:
    if c2 == 0.0:
        return real_roots_linear(c1, c0)
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        return []
    if disc == 0.0:
        return [-c1 / (2.0 * c2)]
    # cancellation-safe: compute the large-magnitude root first
    s = math.sqrt(disc)
    u = -(c1 + math.copysign(s, c1)) / 2.0
    if u == 0.0:
        return sorted([0.0, -c1 / c2])
    return sorted([u / c2, c0 / u])


def real_roots_cubic(c3: float, c2: float, c1: float, c0: float) -> list[float]:
    """All distinct real roots of c3 x^3 + c2 x^2 + c1 x + c0, ascending.

    Multiple roots are reported once. A zero leading coefficient degrades
    to the quadratic (then linear) solve; the identically zero polynomial
    yields an empty list.
    """
    if not all(math.isfinite(c) for c in (c3, c2, c1, c0)):
        raise ValueError("cubic coefficients must be finite")
    if c3 == 0.0:
        return real_roots_quadratic(c2, c1, c0)

    coeffs = (c3, c2, c1, c0)
    b, c, d = c2 / c3, c1 / c3, c0 / c3
    shift = b / 3.0
    p = c - b * b / 3.0
    qd = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    half_sq = (qd / 2.0) ** 2
    third_cb = (p / 3.0) ** 3
    disc = half_sq + third_cb
    # cancellation in `disc` can flip the sign at a repeated root; treat
    # near-zero discriminants as the repeated-root boundary explicitly
    disc_tol = 8.0 * 2.0**-52 * (half_sq + abs(third_cb))

    if abs(disc) <= disc_tol:
        if p == 0.0:
            roots = [-shift]  # triple root
        else:
            roots = [3.0 * qd / p - shift, -3.0 * qd / (2.0 * p) - shift]
    elif disc > 0.0:
        # one real root; pick the large-magnitude cube-root term first to
        # avoid cancellation between the two Cardano terms
        s = math.sqrt(disc)
        u3 = -qd / 2.0 - math.copysign(s, qd)
        u = math.copysign(abs(u3) ** (1.0 / 3.0), u3)
        t = u - p / (3.0 * u) if u != 0.0 else 0.0
        roots = [t - shift]
    else:
        # three distinct real roots: trigonometric form (requires p < 0)
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * qd / (p * m)
        arg = min(1.0, max(-1.0, arg))
        theta = math.acos(arg) / 3.0
        roots = [m * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift for k in range(3)]

    return _dedupe([_polish(coeffs, r) for r in roots])
