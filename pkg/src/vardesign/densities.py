"""Design densities on ``[0, inf)`` or ``(0, 1]`` and the checks (A1)-(A3).

Every density exposes vectorized ``pdf``, ``cdf`` and ``quantile``. Families
without a closed-form inverse use :func:`invert_cdf`, a bracketed Newton
iteration on the cdf.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionError, ConfigError, DomainError, NumericalError
from .smoothness import zone_coefficients
from .special import gammainc_lower, gammainc_upper

HALFLINE = "halfline"
UNIT = "unit"

MAX_ROOT_ITER = 200


def invert_cdf(cdf, pdf, q, upper=None):
    """Solve ``cdf(u) = q`` elementwise for a continuous nondecreasing cdf.

    Bracket by doubling (or use ``upper``), then Newton steps that fall back to
    bisection whenever they leave the bracket. Raises NumericalError after
    ``MAX_ROOT_ITER`` iterations.
    """
    q = np.asarray(q, dtype=float)
    flat = np.atleast_1d(q).ravel()
    lo = np.zeros_like(flat)
    if upper is None:
        hi = np.ones_like(flat)
        for _ in range(1100):
            short = cdf(hi) < flat
            if not short.any():
                break
            lo = np.where(short, hi, lo)
            with np.errstate(over="ignore"):
                hi = np.where(short, 2.0 * hi, hi)
        else:
            raise NumericalError("could not bracket quantile")
    else:
        hi = np.full_like(flat, float(upper))

    x = 0.5 * (lo + hi)
    active = np.ones(flat.shape, dtype=bool)
    for _ in range(MAX_ROOT_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa, la, ha, qa = x[idx], lo[idx], hi[idx], flat[idx]
        f = cdf(xa) - qa
        below = f < 0
        la = np.where(below, xa, la)
        ha = np.where(below, ha, xa)
        dens = pdf(xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / dens
            newton = xa - step
        ok = np.isfinite(newton) & (newton > la) & (newton < ha)
        xn = np.where(ok, newton, 0.5 * (la + ha))
        tol = 4.0 * np.finfo(float).eps * np.maximum(np.abs(xn), 1e-300)
        done = (f == 0) | (np.abs(xn - xa) <= tol) | (ha - la <= tol)
        x[idx] = np.where(f == 0, xa, xn)
        lo[idx], hi[idx] = la, ha
        active[idx[done]] = False
    else:
        raise NumericalError(f"quantile root-finding did not converge in {MAX_ROOT_ITER} iterations")
    return x.reshape(q.shape) if q.ndim else float(x[0])


def _check_q(q):
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) | (q >= 1)) or np.any(np.isnan(q)):
        raise DomainError("quantile level must lie in the open interval (0, 1)")
    return q


class DesignDensity:
    """Base class; subclasses provide ``pdf`` and ``cdf`` and may override ``quantile``."""

    support = HALFLINE
    monotone_nonincreasing = True
    rv_index = None

    @property
    def exp_lower_bound(self):
        """``(q1, q2, gamma)`` with ``pdf(u) >= q1 exp(-q2 u**gamma)``, or None."""
        return None

    @property
    def bounded(self):
        return bool(np.isfinite(self.pdf(0.0)))

    def pdf(self, u):
        raise NotImplementedError

    def cdf(self, u):
        raise NotImplementedError

    def sf(self, u):
        return 1.0 - self.cdf(u)

    def quantile(self, q):
        q = _check_q(q)
        upper = 1.0 if self.support == UNIT else None
        return invert_cdf(self.cdf, self.pdf, q, upper=upper)

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class ExpPower(DesignDensity):
    """``pdf(u) = C exp(-beta u**gamma)`` on ``[0, inf)`` with ``C = beta**(1/gamma) / Gamma(1/gamma + 1)``."""

    beta: float
    gamma: float

    def __post_init__(self):
        if self.beta <= 0 or self.gamma <= 0:
            raise DomainError("ExpPower needs beta > 0 and gamma > 0")

    @property
    def norm(self):
        return self.beta ** (1.0 / self.gamma) / math.gamma(1.0 / self.gamma + 1.0)

    @property
    def exp_lower_bound(self):
        return (self.norm, self.beta, self.gamma)

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore"):
            return self.norm * np.exp(-self.beta * np.maximum(u, 0.0) ** self.gamma) * (u >= 0)

    def cdf(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        with np.errstate(over="ignore"):
            x = self.beta * u**self.gamma
        return gammainc_lower(1.0 / self.gamma, x)

    def sf(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        with np.errstate(over="ignore"):
            x = self.beta * u**self.gamma
        return gammainc_upper(1.0 / self.gamma, x)

    def to_dict(self):
        return {"family": "exppower", "beta": self.beta, "gamma": self.gamma}


def pstar(model):
    """The K-minimizing density ``ExpPower(b / (alpha0 + 1), gamma)``."""
    return ExpPower(model.b / (model.alpha0 + 1.0), model.gamma)


@dataclass(frozen=True)
class Pareto(DesignDensity):
    """``pdf(u) = (|r| - 1)(1 + u)**r`` on ``[0, inf)``, regularly varying with index ``r < -1``."""

    r: float

    def __post_init__(self):
        if not self.r < -1:
            raise DomainError("Pareto density needs r < -1")

    @property
    def rv_index(self):
        return self.r

    def pdf(self, u):
        u = np.asarray(u, dtype=float)
        return (-self.r - 1.0) * (1.0 + np.maximum(u, 0.0)) ** self.r * (u >= 0)

    def cdf(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        return -np.expm1((self.r + 1.0) * np.log1p(u))

    def sf(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        return (1.0 + u) ** (self.r + 1.0)

    def quantile(self, q):
        q = _check_q(q)
        return np.expm1(np.log1p(-q) / (self.r + 1.0))

    def to_dict(self):
        return {"family": "pareto", "r": self.r}


@dataclass(frozen=True)
class SingularPower(DesignDensity):
    """``pdf(t) = (1 - kappa) t**(-kappa)`` on ``(0, 1]``; unbounded at 0 with coefficient ``A = 1 - kappa``."""

    kappa: float
    support = UNIT

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise DomainError("kappa must lie in (0, 1)")

    @property
    def coefficient(self):
        return 1.0 - self.kappa

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where((t >= 0) & (t <= 1), (1.0 - self.kappa) * t ** (-self.kappa), 0.0)

    def cdf(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        return t ** (1.0 - self.kappa)

    def quantile(self, q):
        q = _check_q(q)
        return q ** (1.0 / (1.0 - self.kappa))

    def to_dict(self):
        return {"family": "singular", "kappa": self.kappa}


@dataclass(frozen=True)
class Uniform01(DesignDensity):
    support = UNIT

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= 0) & (t <= 1), 1.0, 0.0)

    def cdf(self, t):
        return np.clip(np.asarray(t, dtype=float), 0.0, 1.0)

    def quantile(self, q):
        q = _check_q(q)
        return q.copy() if q.ndim else float(q)

    def to_dict(self):
        return {"family": "uniform"}


def density_from_dict(spec, model=None):
    """Build a density from its JSON spec; ``pstar`` takes its parameters from ``model`` unless given."""
    try:
        family = spec["family"]
    except (KeyError, TypeError):
        raise ConfigError(f"density spec needs a 'family': {spec!r}") from None
    try:
        if family == "exppower":
            return ExpPower(float(spec["beta"]), float(spec["gamma"]))
        if family == "pstar":
            alpha0 = float(spec.get("alpha0", model.alpha0 if model else math.nan))
            b = float(spec.get("b", model.b if model else math.nan))
            gamma = float(spec.get("gamma", model.gamma if model else math.nan))
            if math.isnan(alpha0 + b + gamma):
                raise ConfigError("pstar needs alpha0, b, gamma (or a model)")
            return ExpPower(b / (alpha0 + 1.0), gamma)
        if family == "pareto":
            return Pareto(float(spec["r"]))
        if family == "singular":
            return SingularPower(float(spec["kappa"]))
        if family == "uniform":
            return Uniform01()
    except KeyError as exc:
        raise ConfigError(f"density {family!r} is missing {exc.args[0]!r}") from None
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown density family {family!r}")


@dataclass(frozen=True)
class DilatedDensity:
    """``pdf_n(t) = d_n base.pdf(d_n t)`` on ``[0, 1]``; not normalized."""

    base: DesignDensity
    d_n: float

    def pdf(self, t):
        return self.d_n * self.base.pdf(self.d_n * np.asarray(t, dtype=float))

    def cdf(self, t):
        return self.base.cdf(self.d_n * np.asarray(t, dtype=float))

    @property
    def mass(self):
        """Integral of ``pdf_n`` over [0, 1], i.e. ``base.cdf(d_n)``."""
        return float(self.base.cdf(self.d_n))


def dilation(n, gamma, log_n=None):
    """``d_n = (log n)**(1/gamma)``; ``log_n`` overrides ``log(n)`` for exact test inputs."""
    if log_n is None:
        if n < 3:
            raise DomainError("dilation needs n >= 3 so that log n > 1")
        log_n = math.log(n)
    return log_n ** (1.0 / gamma)


def dilate(density, n, gamma, log_n=None):
    if density.support != HALFLINE:
        raise DomainError("only densities on [0, inf) can be dilated")
    return DilatedDensity(density, dilation(n, gamma, log_n))


@dataclass(frozen=True)
class A1Certificate:
    q1: float
    q2: float
    gamma: float
    min_ratio: float


A1_GRID = np.linspace(0.0, 50.0, 5001)


def _tail_increasing(density, q2, gamma):
    # log(pdf(u)) + q2 u^gamma must be nondecreasing beyond the check grid
    u = np.geomspace(50.0, 1e12, 400)
    with np.errstate(divide="ignore"):
        g = np.log(density.pdf(u)) + q2 * u**gamma
    return bool(np.all(np.isfinite(g)) and np.all(np.diff(g) >= -1e-9 * np.abs(g[1:])))


def check_a1(density, model):
    """Certificate that ``density`` is bounded, nonincreasing and satisfies
    ``pdf(u) >= q1 exp(-q2 u**gamma)`` with ``0 < q2 < b/alpha0``.

    Exponential-power densities with the model's exponent carry their own
    ``(q1, q2)``. Heavier tails get ``q2 = b / (2 alpha0)`` and ``q1`` from a
    grid minimum on ``[0, 50]`` plus a monotonicity check of the log-ratio beyond.
    Raises AssumptionError naming the broken clause.
    """
    if density.support != HALFLINE:
        raise AssumptionError("(A1) needs a density on [0, inf)", clause="support")
    if not density.monotone_nonincreasing:
        raise AssumptionError("(A1) needs a non-increasing density", clause="monotonicity")
    if not density.bounded:
        raise AssumptionError("(A1) needs a bounded density", clause="bound")

    q2_max = model.b / model.alpha0
    gamma = model.gamma
    own = density.exp_lower_bound
    if own is not None and own[2] >= gamma:
        q1, q2, g = own
        if g > gamma:
            raise AssumptionError(
                f"tail exp(-c u^{g}) decays faster than any exp(-q2 u^{gamma})", clause="pointwise"
            )
        if not q2 < q2_max:
            raise AssumptionError(
                f"(A1) needs q2 < b/alpha0 = {q2_max:.6g}, but this density forces q2 >= {q2:.6g}",
                clause="q2 range",
            )
    else:
        q2 = 0.5 * q2_max
        with np.errstate(over="ignore"):
            ratio = density.pdf(A1_GRID) * np.exp(q2 * A1_GRID**gamma)
        q1 = float(ratio.min())
        if not (q1 > 0 and _tail_increasing(density, q2, gamma)):
            raise AssumptionError("no exponential lower bound found", clause="pointwise")

    with np.errstate(over="ignore"):
        lower = q1 * np.exp(-q2 * A1_GRID**gamma)
    pdf = density.pdf(A1_GRID)
    if np.any(pdf < lower * (1.0 - 1e-12)):
        raise AssumptionError("pointwise bound pdf >= q1 exp(-q2 u^gamma) fails on the grid", clause="pointwise")
    min_ratio = float(np.min(pdf / np.maximum(lower, 1e-300)))
    return A1Certificate(q1=q1, q2=q2, gamma=gamma, min_ratio=min_ratio)


DEFAULT_A2_GRID = np.geomspace(10.0, 1e6, 11)


def check_a2(density, lambdas=(2.0, 3.0), u_grid=None, tol=1e-4):
    """Estimate the regular-variation index from ``log(pdf(lam u)/pdf(u)) / log(lam)``.

    Succeeds when the estimates at the three largest ``u`` agree within ``tol``
    (across all ``lambdas``) and the index is at most ``-1 + tol``; returns the
    estimate at the largest ``u``.
    """
    if density.support != HALFLINE:
        raise AssumptionError("(A2) needs a density on [0, inf)", clause="support")
    u = np.asarray(DEFAULT_A2_GRID if u_grid is None else u_grid, dtype=float)
    if u.max() < 1e4:
        raise DomainError("u_grid must reach at least 1e4")
    top = np.sort(u)[-3:]
    estimates = []
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for lam in lambdas:
            estimates.append(np.log(density.pdf(lam * top) / density.pdf(top)) / math.log(lam))
    est = np.array(estimates)
    if not np.all(np.isfinite(est)):
        raise AssumptionError("pdf ratios degenerate: density is not regularly varying", clause="regular variation")
    if est.max() - est.min() > tol:
        raise AssumptionError(
            f"index estimates do not stabilize (spread {est.max() - est.min():.3g})", clause="regular variation"
        )
    r_hat = float(est[:, -1].mean())
    if r_hat > -1.0 + tol:
        raise AssumptionError(f"(A2) needs index r <= -1, estimated {r_hat:.6g}", clause="index")
    return r_hat


@dataclass(frozen=True)
class A3Check:
    ok: bool
    sup_inf_margin: float
    rho_margin: float
    coefficients: object

    @property
    def message(self):
        if self.ok:
            return "(A3) holds"
        parts = []
        if self.sup_inf_margin <= 0:
            parts.append(f"q2·sup alpha < inf (alpha-alpha0)/t^gamma fails (margin {self.sup_inf_margin:.6g})")
        if self.rho_margin <= 0:
            parts.append(f"q2·ρ^γ < 1 fails (margin {self.rho_margin:.6g})")
        return "; ".join(parts)


def check_a3(model, rho, q2):
    """Both (A3) inequalities with margins ``beta2 - beta1`` and ``1 - q2 rho**gamma``."""
    if q2 <= 0:
        raise DomainError("q2 must be positive")
    coeffs = zone_coefficients(model, rho, q2)
    m1 = coeffs.beta2 - coeffs.beta1
    m2 = 1.0 - q2 * rho**model.gamma
    return A3Check(ok=bool(m1 > 0 and m2 > 0), sup_inf_margin=m1, rho_margin=m2, coefficients=coeffs)
