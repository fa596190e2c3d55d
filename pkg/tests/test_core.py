import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conftest import ALPHA_GRID, BETA_GRID
from oracles import a_mp, central_diff, enum_moment, pmf_mp, support_limit, survival_mp
from discbs import (
    DistParams,
    DomainError,
    TailExhaustedError,
    TruncationError,
    TruncationPolicy,
    a_eval,
    a_prime,
    a_second,
    cdf,
    continuous_quantile,
    hazard,
    ihr_region_check,
    mode,
    mrlf,
    order_stat_cdf,
    pmf,
    quantile,
    raw_moment,
    reliability,
    sample,
    variance,
    vrlf,
)
from discbs.core import continuous_mode, ihr_margin, mean

GRID = [DistParams(a, b) for a in ALPHA_GRID for b in BETA_GRID]
GRID_IDS = [f"a{p.alpha}-b{p.beta}" for p in GRID]
P = DistParams(0.5, 2.0)

# 50-digit mpmath values for (alpha, beta) = (0.5, 2)
PMF0 = 0.07864960352514257
PMF1 = 0.42135039647485743
R9 = 1.7330967556733349e-4
M1 = 1.7523255004721771
M2 = 4.4653419759731518
M3 = 14.874453710057170
VAR = 1.3946973163680861


def mass_limit(p, tail=1e-10):
    return int(continuous_quantile(1 - tail, p)) + 2


# --- parameters ------------------------------------------------------------------

@pytest.mark.parametrize("a,b", [(0, 1), (-1, 1), (1, 0), (1, math.inf), (math.nan, 1)])
def test_params_reject(a, b):
    with pytest.raises(DomainError):
        DistParams(a, b)


def test_policy_validation():
    with pytest.raises(DomainError):
        TruncationPolicy(tail_epsilon=1e-3)
    with pytest.raises(DomainError):
        TruncationPolicy(max_terms=0)


# --- transform -------------------------------------------------------------------

def test_a_examples():
    assert a_eval(2.0, P) == 0.0
    assert a_eval(1.0, P) == pytest.approx(-math.sqrt(2), rel=1e-15)
    assert a_eval(0.0, P) == -math.inf
    for a in (0.3, 7.0):
        assert a_eval(5.0, DistParams(a, 5.0)) == 0.0
    with pytest.raises(DomainError):
        a_eval(-1.0, P)


def test_a_prime_examples():
    assert a_prime(1.0, DistParams(1, 1)) == pytest.approx(1.0, rel=1e-15)
    assert a_prime(1.0, P) == pytest.approx(2.1213203435596424, rel=1e-14)
    assert a_prime(4.0, DistParams(1, 4)) == pytest.approx(0.25, rel=1e-15)
    with pytest.raises(DomainError):
        a_prime(0.0, P)


@given(st.floats(0.05, 5), st.floats(0.1, 50), st.floats(0.01, 200))
def test_a_strictly_increasing(alpha, beta, t):
    p = DistParams(alpha, beta)
    assert a_eval(t * 1.001, p) > a_eval(t, p)
    assert a_prime(t, p) > 0


@pytest.mark.parametrize("t", [0.1, 0.7, 2.0, 5.0, 40.0])
@pytest.mark.parametrize("p", [DistParams(0.5, 2), DistParams(2, 10), DistParams(0.3, 0.5)])
def test_derivatives_match_finite_differences(t, p):
    h = 1e-4 * t
    fd1 = central_diff(lambda x: float(a_eval(x[0], p)), [t], h)[0]
    fd2 = central_diff(lambda x: float(a_prime(x[0], p)), [t], h)[0]
    assert fd1 == pytest.approx(a_prime(t, p), rel=1e-9)
    assert fd2 == pytest.approx(a_second(t, p), rel=1e-8)


# --- mass, cdf, survival -------------------------------------------------------

def test_pmf_examples():
    assert pmf(0, DistParams(1, 1)) == pytest.approx(0.5, abs=1e-16)
    assert pmf(0, P) == pytest.approx(PMF0, rel=1e-13)
    assert pmf(1, P) == pytest.approx(PMF1, rel=1e-13)
    assert pmf(0, P) == cdf(0, P)


def test_pmf_rejects_non_integers():
    with pytest.raises(DomainError):
        pmf(1.5, P)
    with pytest.raises(DomainError):
        pmf(-1, P)


def test_cdf_and_reliability_examples():
    assert cdf(-0.5, P) == 0.0
    assert cdf(1.7, P) == 0.5
    assert cdf(0, P) == pytest.approx(PMF0, rel=1e-13)
    assert reliability(-1, P) == 1.0
    assert reliability(1, P) == 0.5
    assert reliability(9, P) == pytest.approx(R9, rel=1e-12)


@pytest.mark.parametrize("p", [DistParams(1.0, 595.0), DistParams(0.2, 3.0), DistParams(3.0, 0.5)])
def test_pmf_relative_accuracy_deep_tails(p):
    s = np.unique(np.concatenate([np.arange(0, 30), np.geomspace(1, support_limit(p.alpha, p.beta, 1e-250), 40).astype(int)]))
    ref = np.array([float(pmf_mp(int(k), p.alpha, p.beta)) for k in s])
    got = pmf(s, p)
    live = ref > 1e-290
    # far out the two tail values differ by a factor close to 1, which costs a few digits
    assert np.max(np.abs(got[live] / ref[live] - 1)) < 1e-9
    refR = np.array([float(survival_mp(int(k), p.alpha, p.beta)) for k in s])
    live = refR > 1e-290
    assert np.max(np.abs(reliability(s, p)[live] / refR[live] - 1)) < 1e-11


def test_hazard_examples():
    assert hazard(0, DistParams(1, 1)) == pytest.approx(0.5, abs=1e-16)
    assert hazard(1, P) == pytest.approx(0.45731829940809668, rel=1e-12)
    assert hazard(3, P) == pytest.approx(0.62024851922083580, rel=1e-12)


def test_hazard_tail_exhausted():
    # hazard works from log survival, so it survives far past R underflowing ...
    far = DistParams(0.1, 1.0)
    assert reliability(10**6 - 1, far) == 0.0
    assert hazard(10**6, far) == pytest.approx(1.0)
    # ... and only gives up once log survival itself is -inf
    with pytest.raises(TailExhaustedError):
        hazard(5, DistParams(1e-300, 1.0))


@pytest.mark.parametrize("p", GRID, ids=GRID_IDS)
def test_normalization_and_telescoping(p):
    for N in (0, 1, 3, 10, 50, mass_limit(p)):
        s = np.arange(N + 1)
        total = math.fsum(pmf(s, p))
        assert abs(total + reliability(N, p) - 1) <= 1e-12
        assert abs(total - cdf(N, p)) <= 1e-12


@pytest.mark.parametrize("t", [0.0, 0.4, 1.0, 2.5, 7.9, 12.0])
@pytest.mark.parametrize("p", [P, DistParams(1.5, 4.0)])
def test_floor_relations(t, p):
    # P(S <= t) is the continuous CDF at floor(t) + 1; P(S > t) its complement
    cont = stats.norm.cdf(float(a_mp(math.floor(t) + 1, p.alpha, p.beta)))
    assert cdf(t, p) == pytest.approx(cont, abs=1e-15)
    assert reliability(t, p) == pytest.approx(1 - cont, abs=1e-15)
    assert cdf(t, p) == cdf(math.floor(t), p)


@pytest.mark.parametrize("p", GRID, ids=GRID_IDS)
def test_unimodal(p):
    s = np.arange(mass_limit(p) + 1)
    d = np.diff(pmf(s, p))
    signs = np.sign(d[d != 0])
    assert np.count_nonzero(np.diff(signs)) <= 1


@pytest.mark.parametrize("p", GRID, ids=GRID_IDS)
def test_hazard_product(p):
    s = np.arange(min(mass_limit(p), 400))
    s = s[np.asarray(reliability(s - 1, p)) > 1e-280]
    prod = np.cumprod(1 - hazard(s, p))
    R = reliability(s, p)
    assert np.max(np.abs(prod - R)) <= 1e-10


# --- quantiles and sampling -------------------------------------------------------

def test_continuous_quantile_examples():
    assert continuous_quantile(0.5, DistParams(1.3, 7.0)) == pytest.approx(7.0, rel=1e-15)
    assert continuous_quantile(0.9, P) == pytest.approx(3.7563133081170687, rel=1e-13)
    assert continuous_quantile(0.1, P) == pytest.approx(1.0648738994578395, rel=1e-13)


@given(st.floats(0.01, 0.99), st.floats(0.05, 5), st.floats(0.1, 100))
def test_continuous_quantile_inverts_cdf(p, alpha, beta):
    q = continuous_quantile(p, DistParams(alpha, beta))
    assert float(stats.norm.cdf(a_eval(q, DistParams(alpha, beta)))) == pytest.approx(p, abs=1e-12)


@given(st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6))
def test_continuous_quantile_increasing(p, q):
    if q - p > 1e-9:
        assert continuous_quantile(p, P) < continuous_quantile(q, P)


def test_discrete_quantile_examples():
    for alpha in (0.2, 1.0, 3.0):
        assert quantile(0.5, DistParams(alpha, 5.0)) == 4
        assert quantile(0.5, DistParams(alpha, 2.5)) == 2
    assert quantile(0.9, P) == 3


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, math.nan])
def test_quantile_domain(bad):
    with pytest.raises(DomainError):
        quantile(bad, P)
    with pytest.raises(DomainError):
        continuous_quantile(bad, P)


@pytest.mark.parametrize("p", GRID, ids=GRID_IDS)
def test_quantile_sandwich(p):
    probs = np.round(np.arange(0.01, 1.0, 0.01), 2)
    q = quantile(probs, p)
    assert np.all(cdf(q - 1, p) <= probs)
    assert np.all(probs <= cdf(q, p))


def test_sample_deterministic():
    assert np.array_equal(sample(3, P, seed=11), sample(3, P, seed=11))
    x = sample(1000, P, seed=np.random.default_rng(5))
    assert x.dtype == np.int64 and x.min() >= 0
    with pytest.raises(DomainError):
        sample(0, P)


def test_sample_matches_cdf():
    x = sample(100_000, P, seed=1)
    s = np.arange(x.max() + 1)
    emp = np.searchsorted(np.sort(x), s, side="right") / x.size
    assert np.max(np.abs(emp - cdf(s, P))) < 0.01
    assert abs(x.mean() - M1) < 3 * math.sqrt(VAR / x.size)


# --- mode --------------------------------------------------------------------------

def test_mode_examples():
    scan = pmf(np.arange(51), P)
    assert mode(P) == int(np.argmax(scan))
    small = DistParams(0.1, 10.0)
    m = mode(small)
    assert m in (9, 10)
    assert m == int(np.argmax(pmf(np.arange(60), small)))


@pytest.mark.parametrize("p", GRID, ids=GRID_IDS)
def test_mode_properties(p):
    m = mode(p)
    assert m <= math.floor(p.beta)
    assert continuous_mode(p) < p.beta
    N = mass_limit(p)
    assert m == int(np.argmax(pmf(np.arange(N + 1), p)))


# --- series ------------------------------------------------------------------------

def test_moment_examples():
    assert raw_moment(1, P) == pytest.approx(M1, abs=1e-12)
    assert raw_moment(2, P) == pytest.approx(M2, abs=1e-12)
    assert raw_moment(3, P) == pytest.approx(M3, abs=1e-11)
    assert raw_moment(1, DistParams(0.5, 0.05)) < 1e-15
    assert variance(P) == pytest.approx(VAR, abs=1e-12)
    assert variance(P) == pytest.approx(raw_moment(2, P) - raw_moment(1, P) ** 2, abs=1e-8)
    assert variance(DistParams(0.5, 0.01)) < 1e-15


def test_moment_heavy_shape():
    p = DistParams(3.0, 2.0)
    assert mean(p) == pytest.approx(10.580241835396721, abs=1e-9)
    assert variance(p) == pytest.approx(439.33165668562411, abs=1e-6)


def test_moment_full_output_and_truncation():
    value, info = raw_moment(1, P, full_output=True)
    assert info["tail_bound"] < 1e-14 * (value + 1)
    assert info["terms"] > 1
    with pytest.raises(TruncationError) as exc:
        raw_moment(1, DistParams(3.0, 2.0), TruncationPolicy(max_terms=10))
    assert exc.value.terms == 10
    with pytest.raises(DomainError):
        raw_moment(0, P)


def test_residual_life_examples():
    assert mrlf(0, P) == pytest.approx(M1, abs=1e-12)
    assert vrlf(0, P) == pytest.approx(VAR, abs=1e-12)
    assert mrlf(2, P) == pytest.approx(0.66195020799463923, abs=1e-10)
    assert vrlf(1, P) == pytest.approx(1.2292572388644021, abs=1e-10)
    q = DistParams(1.0, 4.0)
    assert mrlf(3, q) == pytest.approx(5.1993995384974048, abs=1e-6)
    assert vrlf(3, q) == pytest.approx(39.642516557954522, abs=1e-6)


def test_residual_life_tail_exhausted():
    with pytest.raises(TailExhaustedError):
        mrlf(5, DistParams(1e-300, 1.0))
    with pytest.raises(TailExhaustedError):
        vrlf(5, DistParams(1e-300, 1.0))


@pytest.mark.parametrize("p", GRID, ids=GRID_IDS)
def test_residual_life_anchors(p):
    assert abs(mrlf(0, p) - mean(p)) <= 1e-8
    assert abs(vrlf(0, p) - variance(p)) <= 1e-8 * max(1.0, variance(p))
    assert vrlf(5, p) >= 0


@pytest.mark.parametrize("p", [P, DistParams(1.0, 4.0), DistParams(0.3, 10.0)])
def test_moments_against_enumeration(p):
    for r in (1, 2, 3):
        ref = enum_moment(r, p.alpha, p.beta)
        assert abs(raw_moment(r, p) - ref) <= 1e-6 * max(1.0, ref)


# --- order statistics ----------------------------------------------------------------

def test_order_stat_examples():
    assert order_stat_cdf(1, 1, 1, P) == pytest.approx(0.5, abs=1e-15)
    assert order_stat_cdf(2, 3, 1, P) == pytest.approx(0.5, abs=1e-15)
    s = np.arange(8)
    assert np.allclose(order_stat_cdf(4, 4, s, P), cdf(s, P) ** 4, rtol=1e-13, atol=0)
    with pytest.raises(DomainError):
        order_stat_cdf(4, 3, 1, P)


@pytest.mark.parametrize("i,n", [(1, 5), (3, 5), (5, 5)])
def test_order_stat_binomial_form(i, n):
    s = np.arange(10)
    F, R = cdf(s, P), reliability(s, P)
    direct = sum(math.comb(n, k) * F**k * R ** (n - k) for k in range(i, n + 1))
    assert np.max(np.abs(order_stat_cdf(i, n, s, P) - direct)) < 1e-14
    assert np.all(np.diff(order_stat_cdf(i, n, s, P)) >= 0)


# --- IHR region ------------------------------------------------------------------------

def test_ihr_margin_at_beta():
    for p in GRID:
        c = ihr_margin(p.beta, p)
        assert c == pytest.approx(a_second(p.beta, p), rel=1e-15)
        assert c == pytest.approx(-1 / (p.alpha * p.beta**2), rel=1e-13)


def test_ihr_region_check():
    grid = np.linspace(0.01, 50, 500)
    assert ihr_region_check(DistParams(0.3, 2.0), grid) is False
    # points strictly below the scale where C > 0 pass
    assert ihr_region_check(DistParams(3.0, 2.0), [0.001, 0.01, 0.05]) is True
    with pytest.raises(DomainError):
        ihr_region_check(P, [])


@pytest.mark.parametrize("p", GRID, ids=GRID_IDS)
def test_ihr_region_empty(p):
    # any grid containing beta fails, so no parameter passes on a full grid
    assert ihr_region_check(p, np.geomspace(p.beta / 100, p.beta * 100, 401)) is False
