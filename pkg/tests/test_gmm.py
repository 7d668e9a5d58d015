import numpy as np
import pytest

from ageincome.errors import EstimationError
from ageincome.gmm import (
    AgeMoments,
    WaveMoments,
    compute_wave_moments,
    cubic_for_age,
    estimate_gmm,
    pool_moments,
    select_root,
    solve_cubic,
)
from ageincome.noise import NoiseSpec
from ageincome.synthetic import generate_synthetic_panel, smooth_profile, stationary_initial
from conftest import build_panel
from oracles import next_moments_exact, third_moment_gap


def moments_from_population(values, weights):
    """Exact weighted moments of a discrete population (test-side helper)."""
    w = np.asarray(weights, dtype=float)
    v = np.asarray(values, dtype=float)
    w = w / w.sum()
    m1 = float(np.sum(w * v))
    var = float(np.sum(w * (v - m1) ** 2))
    return AgeMoments(ybar=m1, std=float(np.sqrt(var)), m3=float(np.sum(w * v**3)), n=float(len(v)))


def two_age_moments(vals, wts, q, mu, sigma, n=1000.0):
    """Pooled WaveMoments for ages 40/41 where age 41 is the exact image of 40."""
    m_a = moments_from_population(vals, wts)
    m1, std1, m3 = next_moments_exact(np.asarray(vals, dtype=float), np.asarray(wts, dtype=float), q, mu, sigma)
    return WaveMoments(
        by_age={
            40: AgeMoments(m_a.ybar, m_a.std, m_a.m3, n),
            41: AgeMoments(m1, std1, m3, n),
        }
    )


# ---------------------------------------------------------------- moments


def test_wave_moments_singleton():
    panel = build_panel([("a", 1991, 30, 2.0)])
    wm = compute_wave_moments(panel, 1991)
    m = wm.get(30)
    assert (m.ybar, m.std, m.m3) == (2.0, 0.0, 8.0)
    assert m.n == 1.0


def test_wave_moments_symmetric_pair():
    panel = build_panel([("a", 1991, 30, 1.0), ("b", 1991, 30, -1.0)])
    m = compute_wave_moments(panel, 1991).get(30)
    assert (m.ybar, m.std, m.m3) == (0.0, 1.0, 0.0)


def test_wave_moments_weighted_pair():
    panel = build_panel([("a", 1991, 30, 0.0, 3.0), ("b", 1991, 30, 4.0, 1.0)])
    m = compute_wave_moments(panel, 1991).get(30)
    assert m.ybar == pytest.approx(1.0)
    assert m.std == pytest.approx(np.sqrt(3.0))
    assert m.m3 == pytest.approx(16.0)
    assert m.n == pytest.approx(16.0 / 10.0)  # (3+1)^2 / (9+1)


def test_wave_moments_absent_age():
    panel = build_panel([("a", 1991, 30, 2.0)])
    wm = compute_wave_moments(panel, 1991)
    assert wm.get(31) is None
    assert compute_wave_moments(panel, 1990).ages == []


def test_pool_single_wave_identity():
    panel = build_panel([("a", 1991, 30, 2.0), ("b", 1991, 31, 3.0)])
    wm = compute_wave_moments(panel, 1991)
    pooled = pool_moments([wm])
    assert pooled.by_age == wm.by_age


def test_pool_two_waves_mean():
    w1 = WaveMoments(by_age={30: AgeMoments(9.0, 1.0, 700.0, 10.0)}, year=1)
    w2 = WaveMoments(by_age={30: AgeMoments(11.0, 2.0, 800.0, 12.0)}, year=2)
    pooled = pool_moments([w1, w2])
    m = pooled.get(30)
    assert m.ybar == pytest.approx(10.0)
    assert m.std == pytest.approx(1.5)
    assert m.m3 == pytest.approx(750.0)
    assert m.n == pytest.approx(22.0)


def test_pool_age_present_in_one_wave_only():
    w1 = WaveMoments(by_age={30: AgeMoments(9.0, 1.0, 700.0, 10.0)}, year=1)
    w2 = WaveMoments(by_age={31: AgeMoments(11.0, 2.0, 800.0, 12.0)}, year=2)
    pooled = pool_moments([w1, w2])
    assert pooled.get(30).ybar == 9.0
    assert pooled.get(31).ybar == 11.0


def test_pooled_moments_match_generator_truth():
    # 18 stationary waves: pooled mean/std within 4 SE of the truth ladder,
    # SE estimated from the per-wave scatter
    prof = smooth_profile(25, 35, 0.3, 0.8, 10.0, 0.3)
    init = stationary_initial(prof, 10.0, 0.5, 400)
    sp = generate_synthetic_panel(prof, init, waves=18, noise=NoiseSpec(seed=9))
    per_wave = [compute_wave_moments(sp.panel, y) for y in sp.panel.wave_years()]
    pooled = pool_moments(per_wave)
    for i, a in enumerate(range(25, 36)):
        values = [wm.get(a).ybar for wm in per_wave]
        se = np.std(values) / np.sqrt(len(values))
        assert abs(pooled.get(a).ybar - init.mean[i]) < 4 * max(se, 1e-9)
        stds = [wm.get(a).std for wm in per_wave]
        se_s = np.std(stds) / np.sqrt(len(stds))
        assert abs(pooled.get(a).std - init.std[i]) < 4 * max(se_s, 1e-9)


# ---------------------------------------------------------------- cubic


def test_cubic_point_mass_degenerate():
    m = 9.0
    pooled = WaveMoments(
        by_age={40: AgeMoments(m, 0.0, m**3, 100.0), 41: AgeMoments(m, 0.0, m**3, 100.0)}
    )
    coeffs = cubic_for_age(pooled, 40)
    # point mass: both third central moments vanish, the identity holds for any q
    assert abs(coeffs.c3) < 1e-9
    assert abs(coeffs.c0) < 1e-9
    for q in (-1.0, 0.0, 0.7, 2.0):
        assert third_moment_gap(q, m, 0.0, m**3, m, 0.0, m**3) == pytest.approx(0.0, abs=1e-9)


def test_cubic_planted_root_from_exact_population():
    vals = np.array([8.0, 12.0])
    wts = np.array([0.75, 0.25])
    q_true, mu_true, sigma_true = 0.6, 4.0, 0.5
    pooled = two_age_moments(vals, wts, q_true, mu_true, sigma_true)
    coeffs = cubic_for_age(pooled, 40)
    value = ((coeffs.c3 * q_true + coeffs.c2) * q_true + coeffs.c1) * q_true + coeffs.c0
    assert abs(value) < 1e-9 * max(1.0, abs(coeffs.c0))
    roots = solve_cubic(coeffs)
    assert min(abs(r - q_true) for r in roots) < 1e-9


def test_cubic_matches_identity_at_random_q():
    # polynomial value == direct identity evaluation for 100 random q
    rng = np.random.default_rng(13)
    for _ in range(20):
        vals = rng.normal(10.0, 1.0, size=5)
        wts = rng.uniform(0.5, 2.0, size=5)
        m_a = moments_from_population(vals, wts)
        # arbitrary (not model-consistent) next-age moments
        m_b = AgeMoments(
            ybar=rng.normal(10.0, 1.0),
            std=abs(rng.normal(1.0, 0.3)),
            m3=rng.normal(1100.0, 200.0),
            n=50.0,
        )
        pooled = WaveMoments(by_age={40: m_a, 41: m_b})
        coeffs = cubic_for_age(pooled, 40)
        for q in rng.uniform(-2.0, 2.0, size=100):
            direct = third_moment_gap(q, m_a.ybar, m_a.std, m_a.m3, m_b.ybar, m_b.std, m_b.m3)
            poly = ((coeffs.c3 * q + coeffs.c2) * q + coeffs.c1) * q + coeffs.c0
            scale = max(1.0, abs(direct), abs(poly))
            assert abs(poly - direct) / scale < 1e-9


def test_cubic_requires_both_ages():
    pooled = WaveMoments(by_age={40: AgeMoments(9.0, 1.0, 756.0, 100.0)})
    with pytest.raises(EstimationError):
        cubic_for_age(pooled, 40)
    pooled = WaveMoments(
        by_age={40: AgeMoments(9.0, 1.0, 756.0, 100.0), 41: AgeMoments(9.0, 1.0, 756.0, 1.0)}
    )
    with pytest.raises(EstimationError):
        cubic_for_age(pooled, 40)  # n < 2 at age 41


def test_solve_cubic_examples():
    from ageincome.gmm import CubicCoefficients

    assert solve_cubic(CubicCoefficients(1.0, 0.0, 0.0, -1.0)) == pytest.approx([1.0])
    assert solve_cubic(CubicCoefficients(1.0, -6.0, 11.0, -6.0)) == pytest.approx([1.0, 2.0, 3.0], abs=1e-9)


# ---------------------------------------------------------------- selection


def test_select_root_prefers_non_clamping():
    # std 1.0 -> 0.8: any |q| <= 0.8 leaves sigma^2 >= 0
    assert select_root([0.5, 1.5], std_a=1.0, std_next=0.8) == 0.5
    # both violate: pick the lesser violation
    assert select_root([0.9, 1.5], std_a=1.0, std_next=0.5) == 0.9


def test_select_root_band_then_magnitude():
    # neither clamps: prefer the one inside [0, 1.1]
    assert select_root([-0.5, 0.4], std_a=0.1, std_next=10.0) == 0.4
    # both inside the band: smallest magnitude
    assert select_root([0.9, 0.2], std_a=0.1, std_next=10.0) == 0.2


# ---------------------------------------------------------------- estimator


def test_estimate_point_mass_population():
    m = 9.0
    pooled = WaveMoments(
        by_age={a: AgeMoments(m, 0.0, m**3, 100.0) for a in (40, 41)}
    )
    res = estimate_gmm(pooled, 40, 41)
    assert res.q[0] == 0.0
    assert res.mu[0] == pytest.approx(m)
    assert res.sigma[0] == 0.0
    assert res.flags[40] == ["degenerate"]
    # the returned triple satisfies all three identities exactly
    assert res.q[0] * m + res.mu[0] == pytest.approx(m)
    assert third_moment_gap(res.q[0], m, 0.0, m**3, m, 0.0, m**3) == pytest.approx(0.0, abs=1e-9)


def test_estimate_recovers_exact_moments():
    vals = np.array([8.0, 9.5, 12.0])
    wts = np.array([0.5, 0.3, 0.2])
    q_true, mu_true, sigma_true = 0.35, 6.2, 0.4
    pooled = two_age_moments(vals, wts, q_true, mu_true, sigma_true)
    res = estimate_gmm(pooled, 40, 41)
    assert res.q[0] == pytest.approx(q_true, abs=1e-9)
    assert res.mu[0] == pytest.approx(mu_true, abs=1e-8)
    assert res.sigma[0] == pytest.approx(sigma_true, abs=1e-9)
    assert res.flags.get(40) is None
    assert res.diagnostics[40].chosen == pytest.approx(q_true, abs=1e-9)


def test_estimate_sigma_clamp_branch():
    vals = np.array([8.0, 12.0])
    wts = np.array([0.6, 0.4])
    pooled = two_age_moments(vals, wts, 0.8, 2.0, 0.3)
    # shrink the next-age std below |q| * std_a so sigma^2 would go negative
    hi = pooled.by_age[41]
    pooled.by_age[41] = AgeMoments(hi.ybar, 0.1, hi.m3, hi.n)
    res = estimate_gmm(pooled, 40, 41)
    assert res.sigma[0] == 0.0
    assert "clamped" in res.flags[40]
    assert res.diagnostics[40].clamped


def test_estimate_missing_age_marked():
    pooled = WaveMoments(
        by_age={
            40: AgeMoments(9.0, 1.0, 760.0, 100.0),
            41: AgeMoments(9.1, 1.0, 781.0, 100.0),
            # age 42 absent: transition 41 -> 42 cannot be estimated
        }
    )
    res = estimate_gmm(pooled, 40, 42)
    assert np.isfinite(res.q[0])
    assert np.isnan(res.q[1])
    assert res.flags[41] == ["missing"]
    assert res.diagnostics[41].error is not None


def test_estimate_invariant_under_duplication():
    rows = [("a", 1991, 40, 8.0, 1.0), ("b", 1991, 40, 9.0, 2.0), ("c", 1991, 40, 12.0, 1.0),
            ("d", 1992, 41, 8.8, 1.0), ("e", 1992, 41, 9.9, 2.0), ("f", 1992, 41, 11.5, 1.0)]
    panel = build_panel(rows)
    doubled = build_panel(
        [(r[0], r[1], r[2], r[3], 2 * r[4]) for r in rows]
    )
    def pooled_of(p):
        return pool_moments([compute_wave_moments(p, y) for y in p.wave_years()])
    res_a = estimate_gmm(pooled_of(panel), 40, 41)
    res_b = estimate_gmm(pooled_of(doubled), 40, 41)
    assert res_a.q[0] == pytest.approx(res_b.q[0], rel=1e-12)
    assert res_a.mu[0] == pytest.approx(res_b.mu[0], rel=1e-12)
    assert res_a.sigma[0] == pytest.approx(res_b.sigma[0], rel=1e-12)


def test_root_residual_invariant():
    # for unclamped estimates, the returned triple reproduces the next-age
    # moments through all three recursions
    vals = np.array([7.5, 9.0, 10.0, 13.0])
    wts = np.array([1.0, 2.0, 2.0, 1.0])
    q_true, mu_true, sigma_true = 0.5, 5.0, 0.6
    pooled = two_age_moments(vals, wts, q_true, mu_true, sigma_true)
    res = estimate_gmm(pooled, 40, 41)
    lo, hi = pooled.get(40), pooled.get(41)
    q, mu, sigma = res.q[0], res.mu[0], res.sigma[0]
    assert q * lo.ybar + mu == pytest.approx(hi.ybar, rel=1e-10)
    assert q**2 * lo.std**2 + sigma**2 == pytest.approx(hi.std**2, rel=1e-10)
    assert third_moment_gap(q, lo.ybar, lo.std, lo.m3, hi.ybar, hi.std, hi.m3) == pytest.approx(
        0.0, abs=1e-9 * max(1.0, abs(hi.m3))
    )


def test_quadratic_consistency_invariant():
    # +/- sqrt(std'^2 - sigma^2) / std contains the returned q when std > 0
    vals = np.array([8.0, 9.0, 11.0])
    wts = np.array([1.0, 1.0, 1.0])
    pooled = two_age_moments(vals, wts, 0.45, 5.5, 0.5)
    res = estimate_gmm(pooled, 40, 41)
    lo, hi = pooled.get(40), pooled.get(41)
    q_tilde = np.sqrt(hi.std**2 - res.sigma[0] ** 2) / lo.std
    assert min(abs(q_tilde - res.q[0]), abs(-q_tilde - res.q[0])) < 1e-9


def test_diagnostics_json(tmp_path):
    vals = np.array([8.0, 12.0])
    wts = np.array([0.75, 0.25])
    pooled = two_age_moments(vals, wts, 0.6, 4.0, 0.5)
    res = estimate_gmm(pooled, 40, 41)
    path = tmp_path / "diag.json"
    res.write_diagnostics_json(path)
    import json

    payload = json.loads(path.read_text())
    assert "40" in payload
    assert payload["40"]["chosen"] == pytest.approx(0.6, abs=1e-9)
