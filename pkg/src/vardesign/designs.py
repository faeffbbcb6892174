"""Knot sets on [0, 1]: regular, dilated, composite dilated and uniform-tail designs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .densities import HALFLINE, UNIT, SingularPower, check_a1, check_a2, check_a3, dilation
from .errors import AssumptionError, DomainError
from .smoothness import zone_coefficients

ENDPOINT = "endpoint"
ZONE_P = "zone-p"
ZONE_PTILDE = "zone-ptilde"
UNIFORM_TAIL = "uniform-tail"

DEGENERATE_BUDGET = 10


@dataclass(frozen=True)
class Design:
    """Ordered knots ``0 = t_0 < ... < t_N = 1`` with a provenance tag per knot."""

    knots: np.ndarray
    n: int
    provenance: tuple
    kind: str = "custom"
    zone_split: int | None = None
    degenerate: bool = False
    d_n: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float)
        if knots.ndim != 1 or knots.size < 2:
            raise DomainError("a design needs at least the two endpoints")
        if knots[0] != 0.0 or knots[-1] != 1.0:
            raise DomainError("designs must start at 0 and end at 1")
        if np.any(np.diff(knots) <= 0):
            raise DomainError("knots must be strictly increasing")
        if len(self.provenance) != knots.size:
            raise DomainError("one provenance tag per knot is required")
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def N(self):
        return self.knots.size - 1

    @property
    def gaps(self):
        return np.diff(self.knots)

    def zone_knots(self, tag):
        mask = np.array([p == tag for p in self.provenance])
        return self.knots[mask]


def mesh(design):
    return float(design.gaps.max())


def _tags(n_interior, tag):
    return (ENDPOINT,) + (tag,) * n_interior


def regular_design(density, n, kind="regular"):
    """Knots at the ``j/n`` percentiles of a density on [0, 1], ``j = 0..n``."""
    if n < 1:
        raise DomainError("n must be a positive integer")
    if density.support != UNIT:
        raise DomainError("regular designs need a density on [0, 1]")
    probe = np.linspace(0.0, 1.0, 1025)[1:-1]
    if np.any(density.pdf(probe) <= 0):
        raise DomainError("density vanishes inside (0, 1); percentiles are ill-conditioned")
    interior = density.quantile(np.arange(1, n) / n) if n > 1 else np.empty(0)
    knots = np.concatenate([[0.0], np.atleast_1d(interior), [1.0]])
    prov = _tags(n - 1, ZONE_P) + (ENDPOINT,)
    return Design(knots, n, prov, kind=kind, degenerate=n < DEGENERATE_BUDGET)


def quasi_regular_design(kappa, n):
    """Regular design from the singular density ``(1 - kappa) t**-kappa``."""
    return regular_design(SingularPower(kappa), n, kind="quasi-regular")


def dilated_count(density, x, n, d_n):
    """``J(p, x, n) = floor(n * cdf_p(x d_n))``."""
    return int(math.floor(n * float(density.cdf(x * d_n))))


def dilated_knots(p, n, gamma, j_range, log_n=None):
    """Knots ``t_j = quantile_p(j/n) / d_n`` for ``j`` in the inclusive range ``j_range``.

    These solve ``integral_0^{t_j} d_n p(d_n t) dt = j/n``.
    """
    d = dilation(n, gamma, log_n)
    lo, hi = j_range
    if lo < 1 or hi < lo - 1:
        raise IndexError(f"bad index range {j_range}")
    j = np.arange(lo, hi + 1)
    if j.size == 0:
        return np.empty(0)
    mass = float(p.cdf(d))
    if hi / n > mass * (1.0 + 1e-15):
        raise IndexError(f"j/n = {hi / n:.6g} exceeds the dilated mass {mass:.6g}")
    q = j / n
    t = np.empty(j.size)
    inner = q < 1.0
    t[inner] = p.quantile(q[inner]) / d
    t[~inner] = np.inf
    return np.minimum(t, 1.0)


def _close(knots, prov):
    knots = list(knots)
    prov = list(prov)
    if knots[-1] < 1.0:
        knots.append(1.0)
        prov.append(ENDPOINT)
    else:
        prov[-1] = ENDPOINT
    return np.array(knots), tuple(prov)


def dilated_design(p, n, gamma, model=None, unchecked=False):
    """Simple dilated design: one density on all of [0, 1] (``rho = 1``).

    (A1) is checked against ``model`` unless ``unchecked``; the unchecked form
    reproduces the empty-tail pathology of fast-decaying densities.
    """
    if p.support != HALFLINE:
        raise DomainError("dilated designs need a density on [0, inf)")
    if not unchecked:
        if model is None:
            raise AssumptionError("checked designs need the smoothness model", clause="model")
        check_a1(p, model)
    d = dilation(n, gamma)
    J = dilated_count(p, 1.0, n, d)
    t = dilated_knots(p, n, gamma, (1, J)) if J >= 1 else np.empty(0)
    t = t[t > 0]
    t = np.unique(t)
    knots, prov = _close(np.concatenate([[0.0], t]), _tags(t.size, ZONE_P))
    return Design(knots, n, prov, kind="dilated", zone_split=t.size, d_n=d,
                  degenerate=n < DEGENERATE_BUDGET or t.size == 0)


def _zone_one(p, rho, n, gamma, model, unchecked, ptilde=None):
    if not 0.0 < rho < 1.0:
        raise DomainError("rho must lie in (0, 1)")
    if p.support != HALFLINE:
        raise DomainError("the first-zone density must live on [0, inf)")
    cert = None
    if not unchecked:
        if model is None:
            raise AssumptionError("checked designs need the smoothness model", clause="model")
        cert = check_a1(p, model)
        if ptilde is not None:
            check_a2(ptilde)
        a3 = check_a3(model, rho, cert.q2)
        if not a3.ok:
            raise AssumptionError(a3.message, clause="A3")
    d = dilation(n, gamma)
    J1 = dilated_count(p, rho, n, d)
    t1 = dilated_knots(p, n, gamma, (1, J1)) if J1 >= 1 else np.empty(0)
    t1 = np.minimum(t1, rho)
    t1 = np.unique(t1[t1 > 0])
    return d, J1, t1, cert


def composite_design(p, rho, ptilde, n, gamma, model=None, unchecked=False):
    """Composite dilated ``(p, rho, ptilde)`` design.

    Zone 1 uses ``p`` for ``j <= J(p, rho, n)``; zone 2 uses ``ptilde`` for
    ``J(ptilde, rho, n) < j <= J(ptilde, 1, n)`` and is re-indexed after zone 1.
    Counts are floored; zone-2 knots not strictly beyond ``max(rho, last
    zone-1 knot)`` are dropped and 1 is appended when missing.
    """
    if ptilde.support != HALFLINE:
        raise DomainError("the second-zone density must live on [0, inf)")
    d, J1, t1, cert = _zone_one(p, rho, n, gamma, model, unchecked, ptilde=ptilde)
    Ja = dilated_count(ptilde, rho, n, d)
    Jb = dilated_count(ptilde, 1.0, n, d)
    t2 = dilated_knots(ptilde, n, gamma, (Ja + 1, Jb)) if Jb > Ja else np.empty(0)
    floor = max(rho, t1[-1] if t1.size else 0.0)
    t2 = t2[t2 > floor]
    knots = np.concatenate([[0.0], t1, t2])
    prov = _tags(t1.size, ZONE_P) + (ZONE_PTILDE,) * t2.size
    knots, prov = _close(knots, prov)
    meta = {"J_p_rho": J1, "J_ptilde_rho": Ja, "J_ptilde_1": Jb}
    if cert is not None:
        meta["q1"], meta["q2"] = cert.q1, cert.q2
    return Design(knots, n, prov, kind="composite", zone_split=t1.size, d_n=d,
                  degenerate=n < DEGENERATE_BUDGET or t2.size == 0, meta=meta)


def default_mu(model, rho):
    """Tail grid exponent ``min(0.95, (alpha0/alpha1 + 1) / 2)`` so that ``mu alpha1 > alpha0``."""
    alpha1 = zone_coefficients(model, rho, 1.0).alpha1
    return min(0.95, 0.5 * (model.alpha0 / alpha1 + 1.0))


def uniform_tail_design(p, rho, n, gamma, mu=None, model=None, unchecked=False):
    """Zone 1 as in :func:`composite_design`; beyond it the grid ``i * n**-mu``."""
    if mu is None:
        if model is None:
            raise DomainError("the default mu needs the smoothness model")
        mu = default_mu(model, rho)
    if not 0.0 < mu < 1.0:
        raise DomainError(f"mu must lie in (0, 1), got {mu}")
    d, J1, t1, cert = _zone_one(p, rho, n, gamma, model, unchecked)
    h = float(n) ** -mu
    last = t1[-1] if t1.size else 0.0
    i = np.arange(math.floor(last / h), math.floor(1.0 / h) + 1)
    t2 = i * h
    t2 = t2[(t2 > last) & (t2 <= 1.0)]
    knots = np.concatenate([[0.0], t1, t2])
    prov = _tags(t1.size, ZONE_P) + (UNIFORM_TAIL,) * t2.size
    knots, prov = _close(knots, prov)
    return Design(knots, n, prov, kind="uniform-tail", zone_split=t1.size, d_n=d,
                  degenerate=n < DEGENERATE_BUDGET, meta={"mu": mu, "spacing": h})


@dataclass(frozen=True)
class GapChecks:
    sandwich_ok: bool
    monotone_ok: bool
    worst_sandwich: float
    worst_monotone: float


def zone_one_gap_checks(design, p):
    """Check ``1/(n p(u_{j-1})) <= v_j <= 1/(n p(u_j))`` and that ``v_j`` is nondecreasing
    over the zone-1 knots, where ``u_j = d_n t_j`` and ``v_j = u_j - u_{j-1}``.

    A slack of a few ulps of ``u_j`` absorbs rounding in the stored knots.
    """
    if design.d_n is None or design.zone_split is None:
        raise DomainError("gap checks need a dilated design")
    k = design.zone_split
    u = design.d_n * design.knots[: k + 1]
    if u.size < 2:
        return GapChecks(True, True, 0.0, 0.0)
    v = np.diff(u)
    dens = p.pdf(u)
    n = design.n
    slack = 16.0 * np.finfo(float).eps * np.maximum(u[1:], 1.0)
    lower = 1.0 / (n * dens[:-1])
    upper = 1.0 / (n * dens[1:])
    low_gap = v - lower
    up_gap = upper - v
    worst_sandwich = float(min(low_gap.min(), up_gap.min()))
    sandwich_ok = bool(np.all(low_gap >= -slack) and np.all(up_gap >= -slack))
    if v.size > 1:
        steps = np.diff(v)
        worst_monotone = float(steps.min())
        monotone_ok = bool(np.all(steps >= -slack[1:]))
    else:
        worst_monotone, monotone_ok = 0.0, True
    return GapChecks(sandwich_ok, monotone_ok, worst_sandwich, worst_monotone)
