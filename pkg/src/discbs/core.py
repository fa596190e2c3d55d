"""The discrete Birnbaum-Saunders law BS_d(alpha, beta).

If ``T`` follows the continuous Birnbaum-Saunders distribution with shape
``alpha`` and scale ``beta``, then ``S = floor(T)`` is BS_d.  Everything here
is expressed through the normalizing transform

    a(t) = (sqrt(t / beta) - sqrt(beta / t)) / alpha,

so that ``P(T <= t) = Phi(a(t))`` and ``P(S = s) = Phi(a(s + 1)) - Phi(a(s))``
with the convention ``a(0) = -inf``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from . import specfun
from .errors import DomainError, TailExhaustedError, TruncationError


@dataclass(frozen=True)
class DistParams:
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a positive finite number, got {v!r}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))


@dataclass(frozen=True)
class TruncationPolicy:
    """Stopping rule for the infinite survival-weighted series.

    Summation stops at the first ``s`` where the survival term drops below
    ``tail_epsilon * (partial_sum + 1)``.
    """

    tail_epsilon: float = 1e-14
    max_terms: int = 10**7

    def __post_init__(self):
        if not 0.0 < self.tail_epsilon < 1e-6:
            raise DomainError("tail_epsilon must lie in (0, 1e-6)")
        if int(self.max_terms) < 1:
            raise DomainError("max_terms must be >= 1")


DEFAULT_POLICY = TruncationPolicy()


def _out(v):
    return v[()] if isinstance(v, np.ndarray) and v.ndim == 0 else v


def _as_support(s):
    s = np.asarray(s)
    if s.dtype.kind == "f":
        if not np.all(np.isfinite(s)) or np.any(s != np.floor(s)):
            raise DomainError("lifetimes must be integers")
    elif s.dtype.kind not in "iu":
        raise DomainError("lifetimes must be integers")
    if np.any(s < 0):
        raise DomainError("lifetimes must be nonnegative")
    return s.astype(float)


def _check_p(p):
    p = np.asarray(p, dtype=float)
    if np.isnan(p).any() or ((p <= 0.0) | (p >= 1.0)).any():
        raise DomainError("probability must lie in the open interval (0, 1)")
    return p


# --- the transform a(t) and its t-derivatives ---------------------------------

def _a(t, alpha, beta):
    # t >= 0 assumed; a(0) = -inf
    with np.errstate(divide="ignore"):
        rt = np.sqrt(t / beta)
        return np.where(t > 0, (rt - 1.0 / rt) / alpha, -np.inf)


def a_eval(t, params):
    """a(t; alpha, beta); returns -inf at t = 0."""
    t = np.asarray(t, dtype=float)
    if np.isnan(t).any() or (t < 0).any():
        raise DomainError("a(t) requires t >= 0")
    return _out(_a(t, params.alpha, params.beta))


def a_prime(t, params):
    t = np.asarray(t, dtype=float)
    if not (t > 0).all():
        raise DomainError("a'(t) requires t > 0")
    a, b = params.alpha, params.beta
    return _out((t + b) / (2.0 * a * t**1.5 * math.sqrt(b)))


def a_second(t, params):
    t = np.asarray(t, dtype=float)
    if not (t > 0).all():
        raise DomainError("a''(t) requires t > 0")
    a, b = params.alpha, params.beta
    return _out(-(t + 3.0 * b) / (4.0 * a * t**2.5 * math.sqrt(b)))


def continuous_logpdf(t, params):
    """Log density of the continuous BS law at t > 0."""
    t = np.asarray(t, dtype=float)
    a = _a(t, params.alpha, params.beta)
    return _out(specfun.std_normal_logpdf(a) + np.log(a_prime(t, params)))


# --- mass, distribution, survival, hazard -------------------------------------

def _logpmf_ab(s, alpha, beta):
    """Log P(S = s) for float arrays s >= 0; alpha, beta broadcast."""
    lo = _a(s, alpha, beta)
    hi = _a(s + 1.0, alpha, beta)
    upper = lo > 0
    # upper tail: Pbar(lo) - Pbar(hi); otherwise P(hi) - P(lo)
    big = np.where(upper, special.log_ndtr(-lo), special.log_ndtr(hi))
    small = np.where(upper, special.log_ndtr(-hi), special.log_ndtr(lo))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = big + np.log(-np.expm1(small - big))
    return np.where(np.isnan(out), -np.inf, out)


def logpmf(s, params):
    s = _as_support(s)
    return _out(_logpmf_ab(s, params.alpha, params.beta))


def pmf(s, params):
    """P(S = s), evaluated on whichever side of the median avoids cancellation."""
    s = _as_support(s)
    lo = _a(s, params.alpha, params.beta)
    hi = _a(s + 1.0, params.alpha, params.beta)
    upper = lo > 0
    val = np.where(
        upper,
        specfun._ccdf(lo) - specfun._ccdf(hi),
        specfun._cdf(hi) - specfun._cdf(lo),
    )
    return _out(np.clip(val, 0.0, 1.0))


def cdf(s, params):
    s = np.asarray(s, dtype=float)
    fl = np.floor(np.where(s >= 0, s, 0.0))
    val = specfun._cdf(_a(fl + 1.0, params.alpha, params.beta))
    return _out(np.where(s >= 0, val, 0.0))


def reliability(s, params):
    """R(s) = 1 - F(s), taken from the upper normal tail directly."""
    s = np.asarray(s, dtype=float)
    fl = np.floor(np.where(s >= 0, s, 0.0))
    val = specfun._ccdf(_a(fl + 1.0, params.alpha, params.beta))
    return _out(np.where(s >= 0, val, 1.0))


def log_reliability(s, params):
    s = np.asarray(s, dtype=float)
    fl = np.floor(np.where(s >= 0, s, 0.0))
    val = special.log_ndtr(-_a(fl + 1.0, params.alpha, params.beta))
    return _out(np.where(s >= 0, val, 0.0))


def hazard(s, params):
    """H(s) = P(S = s) / P(S >= s) = 1 - R(s) / R(s - 1)."""
    s = _as_support(s)
    log_prev = np.asarray(log_reliability(s - 1.0, params))
    if np.isneginf(log_prev).any():
        raise TailExhaustedError("R(s - 1) underflows to zero; hazard undefined")
    log_cur = np.asarray(log_reliability(s, params))
    return _out(-np.expm1(log_cur - log_prev))


# --- quantiles and sampling ----------------------------------------------------

def _continuous_quantile(p, alpha, beta):
    w = alpha * special.ndtri(p)
    root = np.sqrt(w * w + 4.0)
    # w + root, rewritten for w < 0 to avoid cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        core = np.where(w >= 0, w + root, 4.0 / (root - w))
    core = np.where(np.isneginf(w), 0.0, core)
    return 0.25 * beta * core * core


def continuous_quantile(p, params):
    p = _check_p(p)
    return _out(_continuous_quantile(p, params.alpha, params.beta))


NATURAL_TOL = 1e-9


def quantile(p, params):
    """Discrete p-quantile.

    Returns ``Q_p - 1`` when the continuous quantile ``Q_p`` is a natural
    number (to within ``1e-9 * max(1, Q_p)``) and ``floor(Q_p)`` otherwise.
    """
    p = _check_p(p)
    q = _continuous_quantile(p, params.alpha, params.beta)
    r = np.round(q)
    natural = (np.abs(q - r) < NATURAL_TOL * np.maximum(1.0, q)) & (r >= 1)
    out = np.where(natural, r - 1.0, np.floor(q)).astype(np.int64)
    return _out(out)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample(n, params, seed=None):
    """Draw ``n`` variates as floor(Q(U)) with U uniform; ``seed`` may be a Generator."""
    if int(n) < 1:
        raise DomainError("n must be >= 1")
    u = _rng(seed).random(int(n))
    t = _continuous_quantile(u, params.alpha, params.beta)
    return np.floor(t).astype(np.int64)


# --- mode ----------------------------------------------------------------------

def continuous_mode(params):
    """Maximizer of the continuous BS density (always below beta)."""
    lb = math.log(params.beta)
    span = 10.0 + 4.0 * math.log1p(params.alpha)

    def neg(u):
        return -float(continuous_logpdf(math.exp(u), params))

    res = optimize.minimize_scalar(
        neg, bounds=(lb - span, lb), method="bounded", options={"xatol": 1e-10}
    )
    return math.exp(res.x)


def mode(params):
    t0 = continuous_mode(params)
    cell = math.floor(t0)
    cands = np.array([c for c in (cell - 1, cell, cell + 1) if c >= 0], dtype=float)
    lp = _logpmf_ab(cands, params.alpha, params.beta)
    return int(cands[int(np.argmax(lp))])


# --- survival-weighted series: moments and residual life ------------------------

_CHUNK = 1024


def _tail_sums(params, k, weights, policy):
    """Sum ``w(s) * R(s) / R(k - 1)`` over ``s >= k`` for each weight function.

    The first weight (>= 1 on the range) drives the stopping rule: stop once
    both the current term and a geometric estimate of everything after it,
    ``term * q / (1 - q)`` with ``q`` the ratio of successive terms, fall below
    ``tail_epsilon * (partial + 1)``.  Heavy tails decay slowly enough that the
    bare term alone would stop far too early.

    Returns (sums, remainder_estimate, n_terms).
    """
    log_prev = float(log_reliability(k - 1, params))
    if log_prev == -np.inf:
        raise TailExhaustedError(f"R({k - 1}) underflows to zero")
    eps, budget = policy.tail_epsilon, int(policy.max_terms)
    sums = [0.0] * len(weights)
    partial0, last = 0.0, np.nan
    start, size, used = k, _CHUNK, 0
    while True:
        m = min(size, budget - used)
        if m <= 0:
            raise TruncationError(
                f"series not converged after {used} terms", partial=sums, terms=used
            )
        s = np.arange(start, start + m, dtype=float)
        ratio = np.exp(np.asarray(log_reliability(s, params)) - log_prev)
        terms0 = weights[0](s) * ratio
        running = partial0 + np.cumsum(terms0)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = terms0 / np.concatenate([[last], terms0[:-1]])
            rest = np.where(q < 1.0, terms0 * q / (1.0 - q), np.inf)
        rest = np.where(terms0 == 0.0, 0.0, rest)
        hit = np.nonzero(np.maximum(terms0, rest) < eps * (np.abs(running) + 1.0))[0]
        stop = hit[0] + 1 if hit.size else m
        for j, w in enumerate(weights):
            tj = terms0 if j == 0 else w(s) * ratio
            sums[j] = math.fsum([sums[j], *tj[:stop]])
        partial0, last = sums[0], terms0[stop - 1]
        used += stop
        if hit.size:
            return np.array(sums), float(rest[stop - 1]), used
        start += m
        size *= 2


def _power_increment(r):
    # (s + 1)^r - s^r expanded so integer s stays exact
    coef = [math.comb(r, j) for j in range(r)]
    return lambda s: sum(c * s**j for j, c in enumerate(coef))


def raw_moment(r, params, policy=DEFAULT_POLICY, full_output=False):
    """E(S^r) = sum_s [(s + 1)^r - s^r] R(s).

    With ``full_output`` also returns a dict holding the estimated remainder
    after truncation (``tail_bound``) and the number of terms summed.
    """
    if int(r) != r or r < 1:
        raise DomainError("r must be a positive integer")
    sums, bound, n = _tail_sums(params, 0, [_power_increment(int(r))], policy)
    value = float(sums[0])
    if full_output:
        return value, {"tail_bound": bound, "terms": n}
    return value


def mean(params, policy=DEFAULT_POLICY):
    return raw_moment(1, params, policy)


def variance(params, policy=DEFAULT_POLICY):
    """Var(S) = 2 sum s R(s) + sum R(s) [1 - sum R(s)]."""
    sums, _, _ = _tail_sums(params, 0, [np.ones_like, lambda s: s], policy)
    s0, s1 = sums
    return max(2.0 * s1 + s0 * (1.0 - s0), 0.0)


def mrlf(k, params, policy=DEFAULT_POLICY):
    """Mean residual life E(S - k | S >= k)."""
    k = int(_as_support(k))
    sums, _, _ = _tail_sums(params, k, [np.ones_like], policy)
    return float(sums[0])


def vrlf(k, params, policy=DEFAULT_POLICY):
    """Variance residual life Var(S - k | S >= k).

    Uses the shifted weight (s - k) in place of s; the two forms are equal but
    this one does not cancel for large k.
    """
    k = int(_as_support(k))
    sums, _, _ = _tail_sums(params, k, [np.ones_like, lambda s: s - k], policy)
    mu, s1 = sums
    return max(2.0 * s1 + mu - mu * mu, 0.0)


# --- order statistics and IHR region ------------------------------------------

def order_stat_cdf(i, n, s, params):
    """P(S_(i) <= s) = sum_{k=i}^n C(n, k) F(s)^k R(s)^(n-k)."""
    if not (1 <= i <= n):
        raise DomainError("order statistic index must satisfy 1 <= i <= n")
    F = np.asarray(cdf(s, params))
    return _out(special.betainc(i, n - i + 1, F))


def ihr_margin(t, params):
    """C(t) = a''(t) - a(t) a'(t)^2."""
    t = np.asarray(t, dtype=float)
    return _out(a_second(t, params) - _a(t, params.alpha, params.beta) * a_prime(t, params) ** 2)


def ihr_region_check(params, t_grid):
    """True iff C(t) > 0 at every grid point.

    Note C(beta) = a''(beta) = -1 / (alpha beta^2) < 0, so any grid reaching
    beta fails.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or not (t > 0).all():
        raise DomainError("t_grid must be nonempty with positive entries")
    return bool(np.all(ihr_margin(t, params) > 0))
