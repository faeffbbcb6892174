"""Regularized incomplete gamma functions.

Series expansion below ``x < a + 1`` and a modified-Lentz continued fraction
above it. Both branches are vectorized over ``x`` for a scalar shape ``a``.
"""
import math

import numpy as np

from .errors import NumericalError

EPS = 1e-16
TINY = 1e-300
MAX_ITER = 1000


def _prefactor(a, x):
    # x^a e^{-x} / Gamma(a), evaluated in log space
    with np.errstate(divide="ignore"):
        return np.exp(-x + a * np.log(x) - math.lgamma(a))


def _series(a, x):
    term = np.full_like(x, 1.0 / a)
    total = term.copy()
    ap = np.full_like(x, a)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(MAX_ITER):
        ap[active] += 1.0
        term[active] *= x[active] / ap[active]
        total[active] += term[active]
        active &= np.abs(term) >= np.abs(total) * EPS
        if not active.any():
            break
    else:
        raise NumericalError(f"incomplete gamma series did not converge for a={a}")
    return total * _prefactor(a, x)


def _continued_fraction(a, x):
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, MAX_ITER + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < TINY, TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < TINY, TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= EPS
        if not active.any():
            break
    else:
        raise NumericalError(f"incomplete gamma continued fraction did not converge for a={a}")
    return _prefactor(a, x) * h


def _split(a, x):
    if a <= 0:
        raise ValueError("shape parameter a must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("x must be non-negative")
    flat = np.atleast_1d(x).ravel()
    lower = np.zeros_like(flat)
    upper = np.ones_like(flat)
    pos = flat > 0
    small = pos & (flat < a + 1.0)
    large = pos & ~small
    inf = np.isinf(flat)
    large &= ~inf
    # Q(a, x) underflows to zero once the prefactor x^a e^{-x} / Gamma(a) does
    vanish = np.zeros_like(large)
    vanish[large] = _prefactor(a, flat[large]) == 0.0
    large &= ~vanish
    lower[vanish] = 1.0
    upper[vanish] = 0.0
    if small.any():
        lower[small] = _series(a, flat[small])
        upper[small] = 1.0 - lower[small]
    if large.any():
        upper[large] = _continued_fraction(a, flat[large])
        lower[large] = 1.0 - upper[large]
    lower[inf] = 1.0
    upper[inf] = 0.0
    return x, lower, upper


def gammainc_lower(a, x):
    """Regularized lower incomplete gamma ``P(a, x)``."""
    x, lower, _ = _split(a, x)
    return lower.reshape(x.shape) if x.ndim else float(lower[0])


def gammainc_upper(a, x):
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``, accurate in the far tail."""
    x, _, upper = _split(a, x)
    return upper.reshape(x.shape) if x.ndim else float(upper[0])
