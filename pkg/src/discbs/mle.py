"""Maximum-likelihood estimation of (alpha, beta) from an i.i.d. BS_d sample."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._optim import FitOptions, newton_maximize
from .core import DistParams, _a, _logpmf_ab
from .errors import DomainError
from .specfun import std_normal_logpdf

N_PARAMS = 2


@dataclass(frozen=True)
class Dataset:
    observations: np.ndarray

    def __post_init__(self):
        obs = _as_counts(self.observations)
        if obs.size < 2:
            raise DomainError("need at least two observations")
        if np.unique(obs).size < 2:
            raise DomainError("need at least two distinct values; likelihood is degenerate")
        object.__setattr__(self, "observations", obs)

    @property
    def n(self):
        return int(self.observations.size)


@dataclass
class FitResult:
    params: DistParams
    std_errors: np.ndarray | None
    loglik: float
    aic: float
    bic: float
    converged: bool
    iterations: int
    grad_norm: float
    n: int
    used_simplex: bool = False
    hessian: np.ndarray | None = None
    warnings: list = field(default_factory=list)

    def as_dict(self):
        se = None if self.std_errors is None else [float(v) for v in self.std_errors]
        return {
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "std_errors": None if se is None else {"alpha": se[0], "beta": se[1]},
            "loglik": self.loglik,
            "aic": self.aic,
            "bic": self.bic,
            "n": self.n,
            "converged": self.converged,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "used_simplex": self.used_simplex,
            "warnings": list(self.warnings),
        }


def _as_counts(x):
    x = np.asarray(getattr(x, "observations", x))
    if x.ndim != 1:
        raise DomainError("observations must be one-dimensional")
    if x.dtype.kind == "f":
        if not np.all(np.isfinite(x)) or np.any(x != np.floor(x)):
            raise DomainError("observations must be integers")
    elif x.dtype.kind not in "iu":
        raise DomainError("observations must be integers")
    if np.any(x < 0):
        raise DomainError("observations must be nonnegative")
    return x.astype(np.int64)


# --- per-observation derivative engine -------------------------------------

def _endpoint(t, alpha, beta):
    """a(t) and its first/second partials in (alpha, beta); zeros where t == 0."""
    live = t > 0
    tt = np.where(live, t, 1.0)
    a = _a(tt, alpha, beta)
    rt, rb = np.sqrt(tt), np.sqrt(beta)
    da_a = -a / alpha
    da_b = -(tt + beta) / (2.0 * alpha * rt * beta * rb)
    d2_aa = 2.0 * a / alpha**2
    d2_ab = -da_b / alpha
    d2_bb = (3.0 * tt + beta) / (4.0 * alpha * rt * beta**2 * rb)
    out = [a, da_a, da_b, d2_aa, d2_ab, d2_bb]
    return live, [np.where(live, v, 0.0) for v in out]


def obs_terms(s, alpha, beta, order=2):
    """Per-observation log-probability, score and Hessian in (alpha, beta_i).

    ``beta`` may be an array (one scale per observation).  Returns
    ``(logp, grad, hess)`` with shapes (n,), (n, 2), (n, 2, 2).
    """
    s = np.asarray(s, dtype=float)
    beta = np.broadcast_to(np.asarray(beta, dtype=float), s.shape)
    logp = _logpmf_ab(s, alpha, beta)
    if order == 0:
        return logp, None, None
    if np.isneginf(logp).any():
        raise DomainError("zero probability at an observation; derivatives undefined")
    grad = np.zeros(s.shape + (2,))
    hess = np.zeros(s.shape + (2, 2))
    for sign, t in ((-1.0, s), (1.0, s + 1.0)):
        live, (a, da_a, da_b, d2_aa, d2_ab, d2_bb) = _endpoint(t, alpha, beta)
        w = np.where(live, np.exp(std_normal_logpdf(a) - logp), 0.0) * sign
        grad[:, 0] += w * da_a
        grad[:, 1] += w * da_b
        if order > 1:
            hess[:, 0, 0] += w * (d2_aa - a * da_a * da_a)
            hess[:, 0, 1] += w * (d2_ab - a * da_a * da_b)
            hess[:, 1, 1] += w * (d2_bb - a * da_b * da_b)
    if order > 1:
        hess[:, 0, 0] -= grad[:, 0] ** 2
        hess[:, 0, 1] -= grad[:, 0] * grad[:, 1]
        hess[:, 1, 1] -= grad[:, 1] ** 2
        hess[:, 1, 0] = hess[:, 0, 1]
    return logp, grad, hess


# --- public likelihood surface ---------------------------------------------

def loglik(data, params):
    """Sum of log P(S = s_i); -inf if any observation has zero probability."""
    s = _as_counts(data)
    logp = _logpmf_ab(s.astype(float), params.alpha, params.beta)
    return float(math.fsum(logp)) if np.all(np.isfinite(logp)) else -math.inf


def score(data, params):
    s = _as_counts(data)
    _, g, _ = obs_terms(s, params.alpha, params.beta, order=1)
    return g.sum(axis=0)


def hessian(data, params):
    s = _as_counts(data)
    _, _, H = obs_terms(s, params.alpha, params.beta)
    return H.sum(axis=0)


def information_criteria(loglik, k, n):
    """(AIC, BIC) = (-2 l + 2k, -2 l + k log n)."""
    if k < 1 or n < 1:
        raise DomainError("k and n must be >= 1")
    return -2.0 * loglik + 2.0 * k, -2.0 * loglik + k * math.log(n)


def bs_moment_alpha(t):
    """Modified-moment shape estimate sqrt(2 (sqrt(mean / harmonic mean) - 1)) for positive t."""
    m1 = float(np.mean(t))
    mh = 1.0 / float(np.mean(1.0 / t))
    return math.sqrt(max(2.0 * (math.sqrt(m1 / mh) - 1.0), 0.0))


def initial_params(data):
    s = _as_counts(data)
    beta0 = float(np.median(s)) + 1.0
    alpha0 = float(np.clip(bs_moment_alpha(s + 0.5), 0.05, 10.0))
    return DistParams(alpha0, beta0)


def observed_std_errors(H):
    """sqrt(diag((-H)^{-1})), or None when -H is not positive definite."""
    try:
        c = linalg.cho_factor(-H)
    except linalg.LinAlgError:
        return None
    cov = linalg.cho_solve(c, np.eye(H.shape[0]))
    return np.sqrt(np.diag(cov))


def fit(data, init=None, options=None):
    """Maximum-likelihood fit in (log alpha, log beta) by safeguarded Newton."""
    if not isinstance(data, Dataset):
        data = Dataset(data)
    s = data.observations.astype(float)
    init = init or initial_params(data)

    def f(x):
        logp = _logpmf_ab(s, math.exp(x[0]), math.exp(x[1]))
        return float(math.fsum(logp)) if np.all(np.isfinite(logp)) else -math.inf

    def fgh(x):
        al, be = math.exp(x[0]), math.exp(x[1])
        logp, g, H = obs_terms(s, al, be)
        g, H = g.sum(axis=0), H.sum(axis=0)
        jac = np.array([al, be])
        gu = jac * g
        Hu = np.outer(jac, jac) * H + np.diag(gu)
        return float(math.fsum(logp)), gu, Hu

    x0 = np.log([init.alpha, init.beta])
    options = options or FitOptions()
    st = newton_maximize(f, fgh, x0, options)
    params = DistParams(math.exp(st.x[0]), math.exp(st.x[1]))
    warnings = list(st.messages)
    converged = st.converged
    if params.alpha > options.alpha_max:
        converged = False
        warnings.append("shape estimate diverging (alpha -> inf); the MLE may not exist")
    H = hessian(data, params)
    se = observed_std_errors(H)
    if se is None:
        warnings.append("observed information not positive definite; standard errors unavailable")
    aic, bic = information_criteria(st.value, N_PARAMS, data.n)
    return FitResult(
        params=params,
        std_errors=se,
        loglik=st.value,
        aic=aic,
        bic=bic,
        converged=converged,
        iterations=st.iterations,
        grad_norm=st.grad_norm,
        n=data.n,
        used_simplex=st.used_simplex,
        hessian=H,
        warnings=warnings,
    )
