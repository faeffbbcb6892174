"""Integrated mean square error of piecewise constant approximation.

For knots ``t_0 < ... < t_N`` the IMSE is the sum of per-interval errors
``e_j^2 = integral_{t_{j-1}}^{t_j} v(t_{j-1}, u) du`` where ``v(s, t)`` is the
variogram ``||X(t) - X(s)||^2``. Under the model variogram
``c(s) (t - s)**alpha(s)`` each term has the closed form
``c(s) w**(alpha(s) + 1) / (alpha(s) + 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .densities import ExpPower, check_a1
from .errors import AssumptionError, DomainError, NumericalError
from .quadrature import adaptive_gauss_legendre, integrate_to_infinity
from .special import gammainc_upper


class Variogram:
    """``v(s, t) = ||X(t) - X(s)||^2`` for ``s <= t``; vectorized in ``t``."""

    model = None

    def __call__(self, s, t):
        raise NotImplementedError

    def increment(self, s, tau):
        """``v(s, s + tau)``; subclasses avoid forming ``s + tau`` when they can."""
        return self(s, s + np.asarray(tau, dtype=float))


class ModelVariogram(Variogram):
    """``c(s) (t - s)**alpha(s)``, anchored at the left point."""

    def __init__(self, model):
        self.model = model

    def __call__(self, s, t):
        a = float(self.model.alpha(s))
        c = float(self.model.scale(s))
        return c * np.maximum(np.asarray(t, dtype=float) - s, 0.0) ** a

    def increment(self, s, tau):
        return float(self.model.scale(s)) * np.asarray(tau, dtype=float) ** float(self.model.alpha(s))


class FunctionVariogram(Variogram):
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, s, t):
        return self.fn(s, np.asarray(t, dtype=float))


def interval_error_closed(s, t, model):
    """``c(s) (t - s)**(alpha(s) + 1) / (alpha(s) + 1)``."""
    if not 0.0 <= s <= t <= 1.0:
        raise DomainError("need 0 <= s <= t <= 1")
    a = float(model.alpha(s))
    return float(model.scale(s)) * (t - s) ** (a + 1.0) / (a + 1.0)


def closed_form_errors(knots, model):
    s = knots[:-1]
    w = np.diff(knots)
    a = model.alpha(s)
    return model.scale(s) * w ** (a + 1.0) / (a + 1.0)


def quadrature_errors(knots, variogram, atol=1e-12, rtol=1e-13):
    """Per-interval ``integral_0^w v(s, s + tau) dtau``, integrated in the lag ``tau``
    so the endpoint singularity at ``tau = 0`` is resolved without cancellation."""
    out = np.empty(knots.size - 1)
    for j in range(1, knots.size):
        s, t = float(knots[j - 1]), float(knots[j])
        try:
            out[j - 1], _ = adaptive_gauss_legendre(lambda tau: variogram.increment(s, tau), 0.0, t - s,
                                                    atol=atol, rtol=rtol)
        except NumericalError as exc:
            raise NumericalError(f"interval {j} [{s}, {t}]: {exc}") from None
    return out


@dataclass(frozen=True)
class ImseReport:
    e2: float
    per_interval: np.ndarray
    method: str
    s1: float | None = None
    s2: float | None = None
    s3: float | None = None
    normalized: float | None = None
    target: float | None = None

    def to_dict(self):
        out = {"e2": self.e2, "N": int(self.per_interval.size), "method": self.method}
        for key in ("s1", "s2", "s3", "normalized", "target"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


def imse(design, variogram=None, model=None, method="auto", atol=1e-12, rtol=1e-13,
         zones=None, rate=None, target=None):
    """IMSE report for ``design``.

    With ``method="auto"`` the closed form is used when the variogram is the
    model instance (or none is given and ``model`` is); otherwise each interval
    is integrated by adaptive Gauss-Legendre. ``zones=(U, rho, gamma)`` adds the
    S1/S2/S3 split, ``rate`` the normalized value ``rate * e2``.
    """
    knots = design.knots
    if variogram is None:
        if model is None:
            raise DomainError("need a variogram or a smoothness model")
        variogram = ModelVariogram(model)
    if method == "auto":
        method = "closed" if isinstance(variogram, ModelVariogram) else "quadrature"
    if method == "closed":
        m = variogram.model if variogram.model is not None else model
        if m is None:
            raise DomainError("closed form needs a smoothness model")
        per = closed_form_errors(knots, m)
    elif method == "quadrature":
        per = quadrature_errors(knots, variogram, atol=atol, rtol=rtol)
    else:
        raise DomainError(f"unknown method {method!r}")
    e2 = math.fsum(per)
    s1 = s2 = s3 = None
    if zones is not None:
        U, rho, gamma = zones
        s1, s2, s3 = zone_decomposition(knots, per, U, rho, gamma, design.n)
    normalized = rate * e2 if rate is not None else None
    return ImseReport(e2, per, method, s1, s2, s3, normalized, target)


def zone_decomposition(knots, per_interval, U, rho, gamma, n):
    """Split the per-interval errors into ``[0, U/d_n]``, ``[U/d_n, rho]`` and ``[rho, 1]``.

    An interval is assigned by its left knot, so straddling intervals go left.
    """
    d = math.log(n) ** (1.0 / gamma)
    edge = U / d
    if not U > 0 or edge >= rho:
        raise DomainError(f"need 0 < U/d_n < rho, got U/d_n = {edge:.6g}, rho = {rho}")
    left = np.asarray(knots)[:-1]
    per = np.asarray(per_interval)
    z1 = left < edge
    z3 = left >= rho
    z2 = ~(z1 | z3)
    return math.fsum(per[z1]), math.fsum(per[z2]), math.fsum(per[z3])


def constant_K(model, p, rtol=1e-10, check=True):
    """``c0/(alpha0 + 1) * integral_0^inf p(u)**-alpha0 exp(-b u**gamma) du``.

    The integral is truncated where the integrand is negligible; under (A1) the
    discarded tail is bounded by ``q1**-alpha0 integral_U^inf exp(-(b - q2 alpha0) u**gamma) du``.
    """
    a0, b, g = model.alpha0, model.b, model.gamma
    if check:
        cert = check_a1(p, model)
        q1, q2 = cert.q1, cert.q2
    else:
        bound = p.exp_lower_bound
        if bound is None or bound[2] != g:
            raise AssumptionError("unchecked K needs an exponential lower bound", clause="pointwise")
        q1, q2 = bound[0], bound[1]
    rate = b - q2 * a0
    if rate <= 0:
        raise AssumptionError(f"K diverges: b - q2 alpha0 = {rate:.6g} <= 0", clause="q2 range")

    def integrand(u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return np.exp(-a0 * np.log(p.pdf(u)) - b * u**g)

    def tail(x):
        # integral_x^inf exp(-rate u^g) du = Gamma(1/g, rate x^g) / (g rate^(1/g))
        upper = gammainc_upper(1.0 / g, rate * x**g) * math.gamma(1.0 / g)
        return q1**-a0 * upper / (g * rate ** (1.0 / g))

    value, _, _ = integrate_to_infinity(integrand, tail, rtol=rtol * 1e-2)
    return model.c0 / (a0 + 1.0) * value


def constant_K_star(model):
    """Minimal K, attained by ``pstar``: ``c0/(a0+1) * ((a0+1)**(1/g) Gamma(1/g+1) / b**(1/g))**(a0+1)``."""
    a0, b, g = model.alpha0, model.b, model.gamma
    inner = (a0 + 1.0) ** (1.0 / g) * math.gamma(1.0 / g + 1.0) / b ** (1.0 / g)
    return model.c0 / (a0 + 1.0) * inner ** (a0 + 1.0)


def constant_K_exppower(model, p):
    """Closed form of K for ``ExpPower(beta, gamma)`` sharing the model's gamma."""
    if not isinstance(p, ExpPower) or p.gamma != model.gamma:
        raise DomainError("closed form needs ExpPower with the model's gamma")
    a0, b, g = model.alpha0, model.b, model.gamma
    rate = b - a0 * p.beta
    if rate <= 0:
        return math.inf
    return model.c0 / (a0 + 1.0) * p.norm**-a0 * math.gamma(1.0 / g + 1.0) / rate ** (1.0 / g)


def constant_K1(model, p0):
    """Regular-design constant ``c0/(a0+1) * Gamma(1/g+1) / (p0**a0 b**(1/g))``."""
    if p0 <= 0:
        raise DomainError("p0 must be positive")
    a0, b, g = model.alpha0, model.b, model.gamma
    return model.c0 / (a0 + 1.0) * math.gamma(1.0 / g + 1.0) / (p0**a0 * b ** (1.0 / g))


def constant_K2(model, A, kappa):
    """Quasi-regular constant ``c0 A**-a0 Gamma(1/g+1) / ((a0+1) b**(1/g))``."""
    if not 0.0 < kappa < 1.0:
        raise DomainError("kappa must lie in (0, 1)")
    if A <= 0:
        raise DomainError("A must be positive")
    a0, b, g = model.alpha0, model.b, model.gamma
    return model.c0 * A**-a0 * math.gamma(1.0 / g + 1.0) / ((a0 + 1.0) * b ** (1.0 / g))


def quasi_regular_leading_constant(model, A, kappa):
    """Leading-order limit of ``n**a0 (log n)**((1 + kappa a0)/g) e_n^2`` for quasi-regular designs.

    Integrating ``(t**kappa / (n A))**alpha(t)`` against the knot density gives
    ``c0 A**-a0 / (a0+1) * integral_0^inf u**(kappa a0) exp(-b u**g) du``
    ``= c0 A**-a0 Gamma((1 + kappa a0)/g) / ((a0+1) g b**((1 + kappa a0)/g))``.
    It equals :func:`constant_K2` only when ``kappa = 0``.
    """
    if not 0.0 < kappa < 1.0:
        raise DomainError("kappa must lie in (0, 1)")
    a0, b, g = model.alpha0, model.b, model.gamma
    s = (1.0 + kappa * a0) / g
    return model.c0 * A**-a0 * math.gamma(s) / ((a0 + 1.0) * g * b**s)


RATE_KINDS = ("dilated", "composite", "uniform-tail", "regular", "quasi-regular")


def rate_factor(n, model, kind, kappa=None, log_n=None):
    """``l_n = n**a0 (log n)**((a0+1)/g)`` for dilated designs, ``L_n = n**a0 (log n)**(1/g)``
    for regular ones and ``n**a0 (log n)**((1 + kappa a0)/g)`` for quasi-regular ones."""
    if log_n is None:
        if n < 3:
            raise DomainError("rate factors need n >= 3")
        log_n = math.log(n)
        scale = float(n) ** model.alpha0
    else:
        scale = math.exp(model.alpha0 * log_n)
    a0, g = model.alpha0, model.gamma
    if kind in ("dilated", "composite", "uniform-tail"):
        power = (a0 + 1.0) / g
    elif kind == "regular":
        power = 1.0 / g
    elif kind == "quasi-regular":
        if kappa is None:
            raise DomainError("quasi-regular rate needs kappa")
        power = (1.0 + kappa * a0) / g
    else:
        raise DomainError(f"unknown design kind {kind!r}")
    return scale * log_n**power
