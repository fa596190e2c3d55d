"""BS_d regression with a log link on the scale: beta_i = exp(x_i' eta).

The shape alpha is shared by all observations.  Derivatives are assembled
from the per-observation (alpha, beta_i) terms of :mod:`discbs.mle` using
d beta_i / d eta = beta_i x_i and d^2 beta_i / d eta d eta' = beta_i x_i x_i'.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._optim import FitOptions, newton_maximize
from .core import _a, _continuous_quantile, _logpmf_ab
from .errors import ConvergenceError, DomainError
from .specfun import _ccdf, _cdf
from .mle import _as_counts, bs_moment_alpha, information_criteria, obs_terms, observed_std_errors


@dataclass(frozen=True)
class RegressionDataset:
    responses: np.ndarray
    design: np.ndarray

    def __post_init__(self):
        y = _as_counts(self.responses)
        X = np.asarray(self.design, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] != y.size:
            raise DomainError("design must be an n x q matrix matching the responses")
        if not np.all(np.isfinite(X)):
            raise DomainError("design contains non-finite values")
        n, q = X.shape
        if n <= q + 1:
            raise DomainError(f"need n > p + 2 observations (n={n}, columns={q})")
        if np.linalg.matrix_rank(X) < q:
            raise DomainError("design matrix is rank deficient")
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "design", X)

    @property
    def n(self):
        return int(self.responses.size)

    @property
    def n_coef(self):
        return int(self.design.shape[1])


@dataclass(frozen=True, eq=False)
class RegressionParams:
    alpha: float
    eta: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError("alpha must be positive and finite")
        eta = np.array(self.eta, dtype=float).ravel()
        if not np.all(np.isfinite(eta)):
            raise DomainError("eta must be finite")
        eta.setflags(write=False)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "eta", eta)

    def vector(self):
        return np.concatenate([[self.alpha], self.eta])


@dataclass
class RegressionFit:
    params: RegressionParams
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

    def as_dict(self, names=None):
        names = names or [f"eta{j}" for j in range(self.params.eta.size)]
        est = {"alpha": self.params.alpha}
        est.update({nm: float(v) for nm, v in zip(names, self.params.eta)})
        se = None
        if self.std_errors is not None:
            se = dict(zip(["alpha", *names], map(float, self.std_errors)))
        return {
            "estimates": est,
            "std_errors": se,
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


def link_beta(design_row, eta):
    """exp(x' eta) for one row, or row-wise for a matrix."""
    x = np.asarray(design_row, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if x.shape[-1] != eta.shape[0]:
        raise DomainError(f"dimension mismatch: x has {x.shape[-1]} entries, eta {eta.shape[0]}")
    out = np.exp(x @ eta)
    return out[()] if out.ndim == 0 else out


def _unpack(data, params):
    if params.eta.size != data.n_coef:
        raise DomainError("eta length does not match the design")
    return data.responses.astype(float), data.design, link_beta(data.design, params.eta)


def reg_loglik(data, params):
    s, _, beta = _unpack(data, params)
    logp = _logpmf_ab(s, params.alpha, beta)
    return float(math.fsum(logp)) if np.all(np.isfinite(logp)) else -math.inf


def _assemble(g, H, X, beta, order):
    ga, gb = g[:, 0], g[:, 1]
    grad = np.concatenate([[ga.sum()], X.T @ (gb * beta)])
    if order < 2:
        return grad, None
    q = X.shape[1]
    out = np.empty((q + 1, q + 1))
    out[0, 0] = H[:, 0, 0].sum()
    cross = X.T @ (H[:, 0, 1] * beta)
    out[0, 1:] = cross
    out[1:, 0] = cross
    w = H[:, 1, 1] * beta**2 + gb * beta
    block = (X * w[:, None]).T @ X
    out[1:, 1:] = 0.5 * (block + block.T)  # BLAS need not return a bitwise-symmetric product
    return grad, out


def reg_score(data, params):
    s, X, beta = _unpack(data, params)
    _, g, _ = obs_terms(s, params.alpha, beta, order=1)
    return _assemble(g, None, X, beta, 1)[0]


def reg_hessian(data, params):
    s, X, beta = _unpack(data, params)
    _, g, H = obs_terms(s, params.alpha, beta)
    return _assemble(g, H, X, beta, 2)[1]


def initial_params(data):
    """eta from least squares of log(s + 1) on the design; alpha from moments of (s + 0.5) / beta."""
    X = data.design
    eta0, *_ = np.linalg.lstsq(X, np.log1p(data.responses), rcond=None)
    beta0 = np.exp(X @ eta0)
    alpha0 = float(np.clip(bs_moment_alpha((data.responses + 0.5) / beta0), 0.05, 10.0))
    return RegressionParams(alpha0, eta0)


def reg_fit(data, init=None, options=None):
    """Maximum-likelihood fit in (log alpha, eta)."""
    if not isinstance(data, RegressionDataset):
        raise DomainError("reg_fit expects a RegressionDataset")
    s, X = data.responses.astype(float), data.design
    init = init or initial_params(data)

    def f(x):
        eta = x[1:]
        lin = X @ eta
        if not np.all(np.abs(lin) < 700):
            return -math.inf
        logp = _logpmf_ab(s, math.exp(x[0]), np.exp(lin))
        return float(math.fsum(logp)) if np.all(np.isfinite(logp)) else -math.inf

    def fgh(x):
        al = math.exp(x[0])
        beta = np.exp(X @ x[1:])
        logp, g, H = obs_terms(s, al, beta)
        grad, hess = _assemble(g, H, X, beta, 2)
        grad[0] *= al
        hess[0, 0] = al * al * hess[0, 0] + grad[0]
        hess[0, 1:] *= al
        hess[1:, 0] *= al
        return float(math.fsum(logp)), grad, hess

    x0 = np.concatenate([[math.log(init.alpha)], init.eta])
    options = options or FitOptions()
    st = newton_maximize(f, fgh, x0, options)
    params = RegressionParams(math.exp(st.x[0]), st.x[1:])
    warnings = list(st.messages)
    converged = st.converged
    if params.alpha > options.alpha_max:
        converged = False
        warnings.append("shape estimate diverging (alpha -> inf); the MLE may not exist")
    H = reg_hessian(data, params)
    se = observed_std_errors(H)
    if se is None:
        warnings.append("observed information not positive definite; standard errors unavailable")
    aic, bic = information_criteria(st.value, data.n_coef + 1, data.n)
    return RegressionFit(
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


def simulate_responses(params, design, seed=None):
    """One response per design row from BS_d(alpha, exp(x_i' eta))."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    beta = link_beta(np.asarray(design, dtype=float), params.eta)
    u = rng.random(beta.shape[0])
    return np.floor(_continuous_quantile(u, params.alpha, beta)).astype(np.int64)


# --- residuals and envelopes -------------------------------------------------

class ResidualKind(str, enum.Enum):
    RANDOMIZED_QUANTILE = "randomized-quantile"
    COX_SNELL = "generalized-cox-snell"

    @classmethod
    def parse(cls, value):
        aliases = {"rq": cls.RANDOMIZED_QUANTILE, "gcs": cls.COX_SNELL}
        if isinstance(value, cls):
            return value
        if value in aliases:
            return aliases[value]
        return cls(value)


_TINY = np.finfo(float).tiny


def _randomized_cdf(s, alpha, beta, v):
    """u_i uniform on (F(s_i - 1), F(s_i)) via v_i, returned as (u, 1 - u, degenerate)."""
    lo = _a(s, alpha, beta)
    hi = _a(s + 1.0, alpha, beta)
    upper = lo > 0
    surv_lo, surv_hi = _ccdf(lo), _ccdf(hi)
    cdf_lo, cdf_hi = _cdf(lo), _cdf(hi)
    width = np.where(upper, surv_lo - surv_hi, cdf_hi - cdf_lo)
    degenerate = ~(width > 0)
    v = np.where(degenerate, 0.5, v)
    surv = np.where(upper, surv_lo - v * (surv_lo - surv_hi), 1.0 - (cdf_lo + v * (cdf_hi - cdf_lo)))
    u = np.where(upper, 1.0 - surv, cdf_lo + v * (cdf_hi - cdf_lo))
    return np.clip(u, _TINY, 1.0), np.clip(surv, _TINY, 1.0), degenerate


def residuals(fit, data, kind="rq", seed=None, full_output=False):
    """Randomized-quantile (normal scale) or generalized Cox-Snell (unit exponential) residuals.

    Both kinds share the same uniform draw over each CDF jump, so for a given
    seed they are monotone transforms of each other.  Degenerate jumps are
    evaluated at their midpoint and reported in ``info["degenerate"]``.
    """
    params = fit.params if hasattr(fit, "params") else fit
    if hasattr(fit, "converged") and not fit.converged:
        raise DomainError("residuals require a converged fit")
    kind = ResidualKind.parse(kind)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    s, _, beta = _unpack(data, params)
    v = rng.random(s.size)
    u, surv, degenerate = _randomized_cdf(s, params.alpha, beta, v)
    if kind is ResidualKind.RANDOMIZED_QUANTILE:
        r = np.where(u < 0.5, special.ndtri(np.minimum(u, 0.5)), -special.ndtri(np.minimum(surv, 0.5)))
    else:
        r = -np.log(surv)
    if full_output:
        return r, {"degenerate": np.nonzero(degenerate)[0]}
    return r


def theoretical_quantiles(n, kind):
    """Blom plotting positions mapped to N(0, 1) or Exp(1)."""
    pp = (np.arange(1, n + 1) - 0.375) / (n + 0.25)
    if ResidualKind.parse(kind) is ResidualKind.RANDOMIZED_QUANTILE:
        return special.ndtri(pp)
    return -np.log1p(-pp)


@dataclass
class DiagnosticsReport:
    residual_kind: ResidualKind
    residuals: np.ndarray  # observed, sorted
    envelope_lower: np.ndarray
    envelope_median: np.ndarray
    envelope_upper: np.ndarray
    level: float
    replications: int
    seed: int | None
    theoretical: np.ndarray
    dropped: int = 0
    refit: bool = True

    def coverage(self):
        """Fraction of observed sorted residuals inside the band."""
        inside = (self.residuals >= self.envelope_lower) & (self.residuals <= self.envelope_upper)
        return float(np.mean(inside))

    def rows(self):
        for j in range(self.residuals.size):
            yield {
                "position": j + 1,
                "observed": float(self.residuals[j]),
                "lower": float(self.envelope_lower[j]),
                "median": float(self.envelope_median[j]),
                "upper": float(self.envelope_upper[j]),
                "theoretical": float(self.theoretical[j]),
            }


MIN_REPLICATIONS = 19
MAX_DROP_FRACTION = 0.2


def envelope(fit, data, replications=100, level=0.95, seed=None, kind="rq", refit=True, options=None):
    """Parametric-bootstrap QQ envelope for sorted residuals.

    Each replicate simulates responses at the fitted parameters on the same
    design, refits (unless ``refit=False``), and computes sorted residuals.
    Bands are pointwise quantiles at (1 - level) / 2, 1/2 and (1 + level) / 2.
    """
    if replications < MIN_REPLICATIONS:
        raise DomainError(f"need at least {MIN_REPLICATIONS} replications")
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    kind = ResidualKind.parse(kind)
    observed = np.sort(residuals(fit, data, kind, seed))
    children = np.random.SeedSequence(seed).spawn(replications)
    sims, dropped = [], 0
    for child in children:
        rng = np.random.default_rng(child)
        y = simulate_responses(fit.params, data.design, rng)
        try:
            rep = RegressionDataset(y, data.design)
            rfit = reg_fit(rep, init=fit.params, options=options) if refit else fit
        except (DomainError, FloatingPointError):
            dropped += 1
            continue
        if refit and not rfit.converged:
            dropped += 1
            continue
        sims.append(np.sort(residuals(rfit, rep, kind, rng)))
    if dropped > MAX_DROP_FRACTION * replications:
        raise ConvergenceError(f"{dropped} of {replications} envelope replicates failed")
    sims = np.array(sims)
    tail = 0.5 * (1.0 - level)
    lower, median, upper = np.quantile(sims, [tail, 0.5, 1.0 - tail], axis=0)
    return DiagnosticsReport(
        residual_kind=kind,
        residuals=observed,
        envelope_lower=lower,
        envelope_median=median,
        envelope_upper=upper,
        level=level,
        replications=replications,
        seed=seed,
        theoretical=theoretical_quantiles(data.n, kind),
        dropped=dropped,
        refit=refit,
    )
