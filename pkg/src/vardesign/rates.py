"""Rate sweeps, limit extrapolation, the convexity lower bound and tail-gap diagnostics."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .densities import dilation
from .errors import DomainError, NumericalError
from .imse import closed_form_errors, rate_factor

CSV_FIELDS = ("n", "N", "e2", "normalized", "target", "deviation")


def fmt(x):
    """Round-trip formatting for CSV output."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


@dataclass(frozen=True)
class SweepRow:
    n: int
    N: int
    e2: float
    normalized: float
    target: float
    deviation: float


@dataclass
class SweepTable:
    rows: list
    kind: str
    meta: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        ns = [r.n for r in self.rows]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise DomainError("sweep rows must have strictly increasing n")

    @property
    def n(self):
        return np.array([r.n for r in self.rows], dtype=float)

    @property
    def normalized(self):
        return np.array([r.normalized for r in self.rows])

    @property
    def deviations(self):
        return np.array([r.deviation for r in self.rows])

    def deviation_decreasing(self):
        d = np.abs(self.deviations)
        return bool(np.all(np.diff(d) < 0))

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in self.rows:
            writer.writerow([fmt(getattr(r, k)) for k in CSV_FIELDS])
        return buf.getvalue()

    def summary(self, last=3):
        out = {
            "kind": self.kind,
            "rows": len(self.rows),
            "target": self.rows[-1].target if self.rows else None,
            "deviation_decreasing": self.deviation_decreasing(),
            "meta": self.meta,
            "warnings": list(self.warnings),
        }
        if len(self.rows) >= 3:
            fit = fit_log_correction(self.n, self.normalized, last=last)
            out["extrapolated"] = fit.a
            out["fit_slope"] = fit.b
            out["extrapolation_error"] = (fit.a - out["target"]) / out["target"]
        return out


def _row(spec, model, n, target):
    design = spec.build(model, n)
    per = closed_form_errors(design.knots, model)
    e2 = math.fsum(per)
    rate = rate_factor(n, model, design.kind, kappa=spec.kappa)
    value = rate * e2
    return SweepRow(int(n), design.N, e2, value, target, (value - target) / target)


def sweep(spec, model, n_grid, threads=1):
    """Normalized model-variogram IMSE of ``spec`` designs over ``n_grid``.

    ``spec`` is a :class:`vardesign.config.DesignSpec`; the normalization and
    target constant follow the design kind.
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise DomainError("n grid must be strictly increasing")
    target = spec.target(model)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda n: _row(spec, model, n, target), n_grid))
    else:
        rows = [_row(spec, model, n, target) for n in n_grid]
    warnings = [f"n={r.n}: N={r.N} exceeds n + 2" for r in rows if r.N > r.n + 2]
    meta = {"design": spec.to_dict()}
    try:
        meta["model"] = model.to_dict()
    except Exception:
        pass
    lead = spec.leading_constant(model)
    if lead is not None:
        meta["leading_constant"] = lead
    return SweepTable(rows, spec.kind, meta, warnings)


@dataclass(frozen=True)
class LimitFit:
    a: float
    b: float
    c: float | None
    residual: float


def fit_log_correction(n, values, last=3, log_log=False):
    """Least-squares fit of ``a + b/log n`` (plus ``c log log n / log n`` when
    ``log_log``) to the last ``last`` rows."""
    n = np.asarray(n, dtype=float)[-last:]
    y = np.asarray(values, dtype=float)[-last:]
    cols = 3 if log_log else 2
    if n.size < max(3, cols):
        raise DomainError(f"extrapolation needs at least {max(3, cols)} rows")
    L = np.log(n)
    A = [np.ones_like(L), 1.0 / L]
    if log_log:
        A.append(np.log(L) / L)
    A = np.column_stack(A)
    coef, res, rank, sv = np.linalg.lstsq(A, y, rcond=None)
    if rank < cols or sv[-1] < 1e-12 * sv[0]:
        raise NumericalError("degenerate extrapolation: the fit system is singular")
    resid = float(np.linalg.norm(A @ coef - y))
    return LimitFit(float(coef[0]), float(coef[1]), float(coef[2]) if log_log else None, resid)


def extrapolate_limit(table, last=3, log_log=False):
    """Limit ``a`` of the ``a + b/log n`` fit over the last rows of ``table``."""
    return fit_log_correction(table.n, table.normalized, last=last, log_log=log_log).a


@dataclass(frozen=True)
class LowerBoundCertificate:
    r_n: float
    J_n: int
    a_n: float
    B: float
    bound: float
    e2: float
    holds: bool
    scaled: float
    correction: float

    def to_dict(self):
        return dict(vars(self))


def prop1_certificate(design, model, n=None, grid=1025):
    """Convexity lower bound ``B r_n**(a_n+1) / N**a_n`` for the model IMSE of ``design``.

    ``r_n = (log n)**(-1/gamma)``, ``a_n`` is the maximum of ``alpha`` on
    ``[0, r_n]`` and ``B = c_min/(alpha0+1)`` with ``c_min`` the minimum of
    ``c`` on ``[0, r_n]`` (``c(0)`` for constant or increasing ``c``).
    ``correction`` is ``(d_n n)**-(a_n - alpha0)`` and ``scaled`` is ``l_n * bound``.
    """
    n = design.n if n is None else n
    if n < 3:
        raise DomainError("the certificate needs n >= 3")
    d = dilation(n, model.gamma)
    r = 1.0 / d
    knots = design.knots
    J = int(np.searchsorted(knots, r, side="left"))
    if J == 0:
        J = 1
    t = np.linspace(0.0, r, grid)
    a_n = float(np.max(model.alpha(t)))
    c_min = float(np.min(model.scale(t)))
    B = c_min / (model.alpha0 + 1.0)
    N = design.N
    bound = B * r ** (a_n + 1.0) / N**a_n
    e2 = math.fsum(closed_form_errors(knots, model))
    holds = e2 >= bound * (1.0 - 1e-9)
    scaled = rate_factor(n, model, "dilated") * bound
    correction = (d * n) ** -(a_n - model.alpha0)
    return LowerBoundCertificate(r, J, a_n, B, bound, e2, bool(holds), scaled, correction)


@dataclass(frozen=True)
class GapReport:
    a: float
    interior_in_tail: bool
    last_interior: float
    last_gap: float
    max_below: float | None


def gap_detector(design, a):
    """Does ``[1 - a, 1]`` contain interior knots, and how long is the final gap?"""
    if not 0.0 < a < 1.0:
        raise DomainError("a must lie in (0, 1)")
    interior = design.knots[1:-1]
    edge = 1.0 - a
    last = float(interior[-1]) if interior.size else 0.0
    below = interior[interior < edge]
    return GapReport(a, bool(np.any(interior >= edge)), last, 1.0 - last,
                     float(below[-1]) if below.size else None)


def tail_gap_lower_bound(n, q1, q2, gamma, a):
    """``exp(q2 log n (1-a)**gamma) / (n d_n q1)``: a lower bound on knot spacing near
    ``1 - a`` for a dilated density with ``p(u) <= q1 exp(-q2 u**gamma)``."""
    d = dilation(n, gamma)
    return math.exp(q2 * math.log(n) * (1.0 - a) ** gamma - math.log(n * d * q1))


@dataclass(frozen=True)
class Separation:
    ratios: np.ndarray
    decreasing: bool
    slope: float
    expected: float


def rate_separation(n_grid, e2_fast, e2_slow, model):
    """Slope of ``log(e2_fast/e2_slow)`` against ``log log n``; theory gives ``-alpha0/gamma``."""
    n = np.asarray(n_grid, dtype=float)
    ratio = np.asarray(e2_fast, dtype=float) / np.asarray(e2_slow, dtype=float)
    if n.size < 2:
        raise DomainError("need at least two grid points")
    slope = float(np.polyfit(np.log(np.log(n)), np.log(ratio), 1)[0])
    return Separation(ratio, bool(np.all(np.diff(ratio) < 0)), slope, -model.alpha0 / model.gamma)
