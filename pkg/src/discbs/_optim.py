"""Safeguarded Newton ascent with a Nelder-Mead fallback.

Shared by the i.i.d. and regression fitters.  Works on an unconstrained
parameter vector; callers supply the objective and its gradient/Hessian.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize


@dataclass
class FitOptions:
    max_iter: int = 200
    grad_tol: float = 1e-8  # scaled by (1 + |loglik|)
    simplex_budget: int = 2000
    max_failures: int = 3
    max_step: float = 5.0  # cap on a single step in the unconstrained coordinates
    alpha_max: float = 1e3  # beyond this the shape estimate is on the alpha -> inf ridge


@dataclass
class OptimState:
    x: np.ndarray
    value: float
    grad: np.ndarray
    hess: np.ndarray
    converged: bool
    iterations: int
    used_simplex: bool = False
    failures: int = 0
    messages: list = field(default_factory=list)

    @property
    def grad_norm(self):
        return float(np.linalg.norm(self.grad))


def ascent_direction(g, H):
    """Newton direction for maximization, with eigenvalue repair when -H is not PD."""
    try:
        c = linalg.cho_factor(-H)
        return linalg.cho_solve(c, g)
    except linalg.LinAlgError:
        lam, V = np.linalg.eigh(-H)
        floor = max(1e-8 * np.max(np.abs(lam)), 1e-12)
        lam = np.maximum(np.abs(lam), floor)
        return V @ ((V.T @ g) / lam)


def _line_search(f, x, fx, g, d, max_step, noise):
    slope = float(g @ d)
    if not np.isfinite(slope) or slope <= 0:
        return None
    norm = np.max(np.abs(d))
    t = min(1.0, max_step / norm) if norm > 0 else 1.0
    for _ in range(50):
        xn = x + t * d
        fn = f(xn)
        if np.isfinite(fn) and fn >= fx + 1e-4 * t * slope - noise:
            return xn, fn
        t *= 0.5
    return None


def _polish(fgh, x, fx, g, H):
    # one extra full Newton step once converged: near the optimum it squares the
    # gradient norm, and it is kept only if it helps
    try:
        xn = x + ascent_direction(g, H)
        fn, gn, Hn = fgh(xn)
    except (ArithmeticError, ValueError):
        return x, fx, g, H
    if np.isfinite(fn) and fn >= fx - 1e-13 * (1.0 + abs(fx)) and np.linalg.norm(gn) < np.linalg.norm(g):
        return xn, fn, gn, Hn
    return x, fx, g, H


def newton_maximize(f, fgh, x0, options=None):
    """Maximize ``f`` from ``x0``.

    ``fgh(x)`` must return ``(value, grad, hess)``.  Converged means
    ``|grad| < grad_tol * (1 + |value|)``.
    """
    opt = options or FitOptions()
    x = np.asarray(x0, dtype=float)
    fx, g, H = fgh(x)
    if not np.isfinite(fx):
        raise FloatingPointError("log-likelihood is not finite at the starting point")
    state = OptimState(x=x, value=fx, grad=g, hess=H, converged=False, iterations=0)
    it = 0
    while True:
        if np.linalg.norm(g) < opt.grad_tol * (1.0 + abs(fx)):
            state.converged = True
            x, fx, g, H = _polish(fgh, x, fx, g, H)
            break
        if it >= opt.max_iter:
            state.messages.append("iteration limit reached")
            break
        it += 1
        noise = 1e-13 * (1.0 + abs(fx))
        step = _line_search(f, x, fx, g, ascent_direction(g, H), opt.max_step, noise)
        if step is None:
            state.failures += 1
            step = _line_search(f, x, fx, g, g / max(np.linalg.norm(g), 1.0), opt.max_step, noise)
            if state.failures >= opt.max_failures:
                if state.used_simplex:
                    state.messages.append("Newton stalled after simplex fallback")
                    break
                res = optimize.minimize(
                    lambda z: -f(z) if np.isfinite(f(z)) else np.inf,
                    x,
                    method="Nelder-Mead",
                    options={"maxfev": opt.simplex_budget, "xatol": 1e-10, "fatol": 1e-12},
                )
                state.used_simplex = True
                state.failures = 0
                state.messages.append(f"simplex fallback: {res.message}")
                if np.isfinite(res.fun) and -res.fun >= fx:
                    step = (res.x, -res.fun)
            if step is None:
                continue
        x = step[0]
        fx, g, H = fgh(x)
    state.x, state.value, state.grad, state.hess, state.iterations = x, fx, g, H, it
    return state
