import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptive_cs.bounds import (AssumptionError, BoundKind, DegenerateBoundError,
                                LaplacianStats, QualityParams, clamp_measurements,
                                corollary_delta, cs_bound, interpretation_constants,
                                l1l1_bound, laplacian_bound, laplacian_mu,
                                laplacian_success_probability, lemma1_min_delta, noisy_scale,
                                quality_params, success_probability)

mpmath.mp.dps = 40


def mp_l1l1(n, s, xi, hbar):
    """High-precision reference for the l1-l1 bound."""
    u = mpmath.mpf(s) + mpmath.mpf(xi) / 2
    return 2 * hbar * mpmath.log(mpmath.mpf(n) / u) + mpmath.mpf(7) * u / 5 + 1


# --- quality parameters -----------------------------------------------------

def brute_quality(x, w, tol):
    """Per-index enumeration of the three counting rules."""
    s = xi = hbar = 0
    for xv, wv in zip(x, w):
        xv = xv if abs(xv) > tol else 0.0
        wv = wv if abs(wv) > tol else 0.0
        if xv != 0:
            s += 1
            if abs(xv - wv) <= tol:
                xi -= 1
            if (xv > 0 and xv > wv + tol) or (xv < 0 and xv < wv - tol):
                hbar += 1
        elif wv != 0:
            xi += 1
    return s, xi, hbar


@pytest.mark.parametrize("x, w, expected", [
    ((3, 0, -2, 0), (3, 0, -2, 0), (2, -2, 0)),
    ((1, 0), (0, 0), (1, 0, 1)),
    ((3, 0, -2, 0), (2, 1, -3, 0), (2, 1, 1)),
])
def test_quality_hand_examples(x, w, expected):
    q = quality_params(np.array(x, float), np.array(w, float))
    assert (q.s, q.xi, q.hbar) == expected


def test_quality_length_mismatch():
    with pytest.raises(ValueError):
        quality_params(np.zeros(3), np.zeros(4))


def test_quality_tolerance_absorbs_dust():
    x = np.array([1.0, 1e-9, 0.0])
    w = np.array([1.0 + 1e-9, 0.0, -1e-8])
    q = quality_params(x, w, zero_tol=1e-6)
    assert (q.s, q.xi, q.hbar) == (1, -1, 0)


small_vals = st.sampled_from([-2.0, -1.0, 0.0, 0.5, 1.0, 3.0])


@given(st.lists(st.tuples(small_vals, small_vals), min_size=1, max_size=30))
def test_quality_matches_enumeration(pairs):
    x = np.array([p[0] for p in pairs])
    w = np.array([p[1] for p in pairs])
    q = quality_params(x, w)
    assert (q.s, q.xi, q.hbar) == brute_quality(x, w, q.zero_tol)
    assert 0 <= q.hbar <= q.s
    assert -q.s <= q.xi <= x.size - q.s


# --- l1-l1 and basis pursuit bounds -----------------------------------------

def test_l1l1_hand_value():
    b = l1l1_bound(1000, QualityParams(50, 0, 5))
    assert b.raw_bound == pytest.approx(10 * math.log(20) + 71, rel=1e-15)
    assert b.m_required == 101
    assert b.kind is BoundKind.L1L1


def test_l1l1_perfect_side_info_is_exact():
    b = l1l1_bound(1000, QualityParams(50, -50, 0))
    assert b.raw_bound == 36.0
    assert b.m_required == 36


def test_l1l1_collapses_to_cs_when_all_bad():
    assert l1l1_bound(1000, QualityParams(50, 0, 50)).raw_bound == \
        pytest.approx(cs_bound(1000, 50).raw_bound, rel=1e-15)


def test_cs_hand_values():
    b = cs_bound(1000, 50)
    assert b.raw_bound == pytest.approx(float(mp_l1l1(1000, 50, 0, 50)), rel=1e-14)
    assert b.m_required == 371
    assert cs_bound(16384, 417).raw_bound == pytest.approx(3646.4, abs=0.05)
    tiny = cs_bound(2, 1)
    assert tiny.raw_bound == pytest.approx(2 * math.log(2) + 2.4)
    assert tiny.m_required == 2


@pytest.mark.parametrize("n, s", [(10, 0), (10, 10), (10, 11)])
def test_cs_degenerate(n, s):
    with pytest.raises(DegenerateBoundError) as err:
        cs_bound(n, s)
    assert err.value.value == s


@pytest.mark.parametrize("q", [QualityParams(2, -4, 0), QualityParams(90, 20, 5)])
def test_l1l1_degenerate_carries_value(q):
    with pytest.raises(DegenerateBoundError) as err:
        l1l1_bound(100, q)
    assert err.value.value == q.u


@settings(max_examples=300)
@given(n=st.integers(10, 10 ** 6), data=st.data())
def test_l1l1_matches_high_precision(n, data):
    s = data.draw(st.integers(1, n - 1))
    hbar = data.draw(st.integers(0, s))
    xi = data.draw(st.integers(-s + 1, min(n - s - 1, 2 * (n - s) - 1)))
    q = QualityParams(s, xi, hbar)
    if not 0 < q.u < n:
        return
    b = l1l1_bound(n, q)
    assert b.raw_bound == pytest.approx(float(mp_l1l1(n, s, xi, hbar)), rel=1e-12)
    assert b.m_required >= 1 and b.m_required <= n


@given(st.floats(-5, 5000, allow_nan=False), st.integers(1, 4000), st.integers(1, 50))
def test_clamp_measurements_range(raw, n, floor):
    m = clamp_measurements(raw, n, floor)
    assert min(floor, n) <= m <= n or m == n
    if floor <= n and floor <= math.ceil(raw) <= n:
        assert m >= raw - 1e-6


def test_clamp_survives_round_off():
    # 1.1 * 1000 evaluates to 1100.0000000000002
    assert clamp_measurements(1.1 * 1000, 5000) == 1100


def test_bound_monotone_in_hbar():
    for h in range(0, 20):
        a = l1l1_bound(1000, QualityParams(20, 0, h)).raw_bound
        b = l1l1_bound(1000, QualityParams(20, 0, h + 1)).raw_bound
        assert b > a


# --- noisy bound ------------------------------------------------------------

def test_noisy_multiplier():
    b = l1l1_bound(1000, QualityParams(50, 0, 5))
    nb = noisy_scale(b, 0.1)
    assert nb.raw_bound == pytest.approx((b.raw_bound + 0.5) / 0.81)
    assert nb.raw_bound / (b.raw_bound + 0.5) == pytest.approx(1.2346, abs=1e-4)
    assert nb.kind is BoundKind.L1L1_NOISY


def test_noisy_limit_small_tau():
    b = l1l1_bound(1000, QualityParams(40, 10, 0))
    assert noisy_scale(b, 1e-12).raw_bound == pytest.approx(7 * 45 / 5 + 1.5)


@pytest.mark.parametrize("tau", [0.0, 1.0, -0.2, 1.5])
def test_noisy_bad_tau(tau):
    with pytest.raises(ValueError):
        noisy_scale(l1l1_bound(100, QualityParams(5, 0, 1)), tau)


def test_noisy_rejects_cs_bound():
    with pytest.raises(ValueError):
        noisy_scale(cs_bound(100, 5), 0.1)


# --- probability ------------------------------------------------------------

def test_success_probability_published_values():
    assert round(success_probability(8, 100), 4) == 0.9998
    assert round(success_probability(8, 10 ** 4), 4) == 0.9845


def test_success_probability_high_precision():
    for m, k in [(8, 100), (8, 10 ** 4), (5, 3), (30, 10 ** 6)]:
        ref = (1 - mpmath.exp(-(m - mpmath.sqrt(m)) ** 2 / 2)) ** k
        assert success_probability(m, k) == pytest.approx(float(ref), rel=1e-12)


@pytest.mark.parametrize("k", [1, 7, 10 ** 5])
def test_success_probability_m_one(k):
    assert success_probability(1, k) == 0.0


@given(st.integers(2, 60), st.integers(1, 10 ** 6))
def test_success_probability_monotone(m, k):
    p = success_probability(m, k)
    assert 0.0 <= p <= 1.0
    assert success_probability(m + 1, k) >= p
    assert success_probability(m, k + 1) <= p


# --- oversampling factor ----------------------------------------------------

def test_min_delta_zero_for_equal_params():
    q = QualityParams(50, 3, 7)
    assert lemma1_min_delta(q, q, 1000) == 0.0


def test_min_delta_hand_value():
    d = lemma1_min_delta(QualityParams(50, 0, 5), QualityParams(50, 0, 10), 1000)
    ref = 10 * mpmath.log(20) / (10 * mpmath.log(20) + 71)
    assert d == pytest.approx(float(ref), rel=1e-13)
    assert d == pytest.approx(0.2967, abs=1e-4)


def random_quality(rng, n):
    s = int(rng.integers(1, n // 2))
    hbar = int(rng.integers(0, s + 1))
    xi = int(rng.integers(-s + 1, n - s))
    return QualityParams(s, xi, hbar)


@settings(max_examples=200)
@given(st.integers(0, 2 ** 32 - 1))
def test_min_delta_equals_ratio(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 10 ** 6))
    q0, q1 = random_quality(rng, n), random_quality(rng, n)
    ratio = mp_l1l1(n, q1.s, q1.xi, q1.hbar) / mp_l1l1(n, q0.s, q0.xi, q0.hbar)
    assert 1 + lemma1_min_delta(q0, q1, n) == pytest.approx(float(ratio), rel=1e-12)


@settings(max_examples=200)
@given(st.integers(0, 2 ** 32 - 1))
def test_interpretation_form_matches(seed):
    rng = np.random.default_rng(seed)
    n = 10 ** 4
    q0, q1 = random_quality(rng, n), random_quality(rng, n)
    c1, c2 = interpretation_constants(q0, q1, n)
    den = q0.hbar + c2
    if abs(den) < 1e-6:
        return
    d = lemma1_min_delta(q0, q1, n)
    assert (q1.hbar - q0.hbar + c1) / den == pytest.approx(d, rel=1e-10, abs=1e-12)


def test_interpretation_identical_params():
    q = QualityParams(30, 4, 6)
    c1, c2 = interpretation_constants(q, q, 10 ** 4)
    assert (q.hbar - q.hbar + c1) / (q.hbar + c2) == pytest.approx(0.0, abs=1e-15)


def test_interpretation_constants_decay():
    q0, q1 = QualityParams(30, 4, 6), QualityParams(33, 0, 9)
    c1_small, c2_small = interpretation_constants(q0, q1, 10 ** 4)
    c1_big, c2_big = interpretation_constants(q0, q1, 10 ** 8)
    assert abs(c1_big) < abs(c1_small)
    assert abs(c2_big) < abs(c2_small)


# --- Laplacian model --------------------------------------------------------

def test_mu_all_zero_side_info():
    stats = laplacian_mu(np.zeros(6), np.array([1.0, 2.0, 0.0, 0.5, 0.0, 3.0]))
    assert stats.mu == 4.0
    assert stats.n_sigma == 4


def test_mu_hand_value():
    s2 = math.sqrt(2.0)
    stats = laplacian_mu(np.array([1.0, 0.0]), np.array([s2, s2]))
    assert stats.mu == pytest.approx(0.5 * ((1 + math.exp(-1)) + 2))
    assert stats.mu == pytest.approx(1.6839, abs=1e-4)


def test_mu_large_side_info_halves():
    stats = laplacian_mu(np.full(10, 1e6), np.ones(10))
    assert stats.mu == pytest.approx(5.0)


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(0, 5)), min_size=1, max_size=40))
def test_mu_between_half_and_full(pairs):
    w = np.array([p[0] for p in pairs])
    sig = np.array([p[1] for p in pairs])
    stats = laplacian_mu(w, sig)
    k = stats.n_sigma
    assert k / 2 - 1e-12 <= stats.mu <= k + 1e-12


def test_mu_rejects_negative_sigma():
    with pytest.raises(ValueError):
        laplacian_mu(np.zeros(2), np.array([1.0, -1.0]))


def make_stats(n, n_sigma, n_w_out, mu, t=2.0):
    sigma = np.zeros(n)
    sigma[:n_sigma] = 1.0
    return LaplacianStats(sigma=sigma, support_sigma=np.arange(n_sigma),
                          support_w=np.arange(n_sigma, n_sigma + n_w_out), mu=mu, t=t)


def test_laplacian_bound_hand_value():
    stats = make_stats(1000, 20, 10, 15.0)
    b = laplacian_bound(1000, stats)
    assert b.raw_bound == pytest.approx(34 * math.log(40) + 36)
    assert b.raw_bound == pytest.approx(161.4, abs=0.05)


def test_laplacian_probability_second_factor():
    stats = make_stats(1000, 20, 10, 15.0)
    m = 50
    first = 1 - math.exp(-0.5 * (m - math.sqrt(m)) ** 2)
    second = 1 - math.exp(-22.5) - math.exp(-0.1)
    assert laplacian_success_probability(m, stats) == pytest.approx(first * second)


def test_laplacian_bound_needs_zero_index():
    stats = make_stats(30, 20, 10, 15.0)
    with pytest.raises(AssumptionError):
        laplacian_bound(30, stats)


def test_corollary_delta_identical():
    stats = make_stats(1000, 20, 10, 15.0)
    assert corollary_delta(stats, stats, 1000) == 0.0
    assert corollary_delta(stats, stats, 1000, approximate=True) == 1.0


def test_corollary_approximation_dominates():
    prev = make_stats(1000, 20, 0, 10.0)
    cur = make_stats(1000, 40, 0, 20.0)
    approx = corollary_delta(prev, cur, 1000, approximate=True)
    assert approx == 3.0
    for mu_prev in np.linspace(10, 20, 11):
        for mu_cur in np.linspace(20, 40, 11):
            assert approx >= (mu_cur - mu_prev) / (mu_prev + 2.0)


@settings(max_examples=200)
@given(st.integers(0, 2 ** 32 - 1))
def test_corollary_exact_equals_ratio(seed):
    rng = np.random.default_rng(seed)
    n = 2000
    a = make_stats(n, int(rng.integers(1, 500)), int(rng.integers(0, 300)), 0.0)
    b = make_stats(n, int(rng.integers(1, 500)), int(rng.integers(0, 300)), 0.0)
    a = LaplacianStats(a.sigma, a.support_sigma, a.support_w,
                       float(rng.uniform(a.n_sigma / 2, a.n_sigma)), 2.0)
    b = LaplacianStats(b.sigma, b.support_sigma, b.support_w,
                       float(rng.uniform(b.n_sigma / 2, b.n_sigma)), 2.0)
    ratio = laplacian_bound(n, b).raw_bound / laplacian_bound(n, a).raw_bound
    assert 1 + corollary_delta(a, b, n) == pytest.approx(ratio, rel=1e-12)
