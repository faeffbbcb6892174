"""Smoothness profile ``(alpha(t), c(t))`` of a locally stationary process.

The profile is ``alpha(t) = alpha0 + b t**gamma + remainder(t)`` together with a
local variance scale ``c(t)``. Profiles are immutable and serialize to a small
JSON object; functions are encoded as strings (``"zero"``, ``"const:1.0"``,
``"table:[...]"``, ``"poly:[...]"``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class Profile:
    """A vectorized function on [0, 1] parsed from its string encoding.

    ``table:[v0, ..., vm]`` interpolates linearly between values at ``k/m``;
    ``poly:[c0, c1, ...]`` is ``sum c_k t**k``.
    """

    spec: str
    kind: str = field(init=False)
    values: tuple = field(init=False)

    def __post_init__(self):
        kind, values = _parse_profile(self.spec)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(t)
        if self.kind == "const":
            return np.full_like(t, self.values[0])
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(t, self.values)
        grid = np.linspace(0.0, 1.0, len(self.values))
        return np.interp(t, grid, self.values)

    @property
    def is_zero(self):
        return self.kind == "zero" or (self.kind in ("const", "poly", "table") and not any(self.values))

    @property
    def is_const(self):
        return self.kind in ("zero", "const")


def _parse_profile(spec):
    spec = spec.strip()
    if spec == "zero":
        return "zero", (0.0,)
    head, sep, body = spec.partition(":")
    if not sep:
        raise ConfigError(f"cannot parse function spec {spec!r}")
    if head == "const":
        try:
            return "const", (float(body),)
        except ValueError:
            raise ConfigError(f"bad constant in {spec!r}") from None
    if head in ("table", "poly"):
        try:
            values = tuple(float(v) for v in json.loads(body))
        except (ValueError, TypeError):
            raise ConfigError(f"bad list in {spec!r}") from None
        if not values or (head == "table" and len(values) < 2):
            raise ConfigError(f"{head} spec needs more values: {spec!r}")
        return head, values
    raise ConfigError(f"unknown function kind {head!r}")


def _as_profile(obj, default):
    if obj is None:
        return Profile(default)
    if isinstance(obj, Profile):
        return obj
    if isinstance(obj, str):
        return Profile(obj)
    if callable(obj):
        return obj
    raise ConfigError(f"cannot use {obj!r} as a profile function")


@dataclass(frozen=True)
class SmoothnessModel:
    """Smoothness index ``alpha(t) = alpha0 + b t**gamma + remainder(t)`` and scale ``c(t)``.

    ``remainder`` and ``c`` accept either a :class:`Profile` (or its string
    encoding) or any vectorized callable. Only profile-encoded models can be
    serialized.
    """

    alpha0: float
    b: float
    gamma: float
    remainder: object = None
    c: object = None

    def __post_init__(self):
        for name in ("alpha0", "b", "gamma"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be a positive finite number, got {value}")
        object.__setattr__(self, "remainder", _as_profile(self.remainder, "zero"))
        object.__setattr__(self, "c", _as_profile(self.c, "const:1.0"))

    def alpha(self, t):
        t = np.asarray(t, dtype=float)
        return self.alpha0 + self.b * t**self.gamma + self.remainder(t)

    def scale(self, t):
        return np.asarray(self.c(np.asarray(t, dtype=float)), dtype=float)

    @property
    def c0(self):
        return float(self.scale(0.0))

    @property
    def is_power_law(self):
        """True when the remainder is identically zero (exact formulas apply)."""
        return isinstance(self.remainder, Profile) and self.remainder.is_zero

    @property
    def has_constant_scale(self):
        return isinstance(self.c, Profile) and self.c.is_const

    def to_dict(self):
        if not (isinstance(self.c, Profile) and isinstance(self.remainder, Profile)):
            raise ConfigError("only profile-encoded models can be serialized")
        return {
            "alpha0": self.alpha0,
            "b": self.b,
            "gamma": self.gamma,
            "c": self.c.spec,
            "remainder": self.remainder.spec,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                alpha0=float(data["alpha0"]),
                b=float(data["b"]),
                gamma=float(data["gamma"]),
                remainder=data.get("remainder", "zero"),
                c=data.get("c", "const:1.0"),
            )
        except KeyError as exc:
            raise ConfigError(f"model spec is missing {exc.args[0]!r}") from None


def power_law_model(alpha0=1.0, b=1.0, gamma=1.0, c=1.0):
    """``alpha(t) = alpha0 + b t**gamma`` with constant scale ``c``."""
    return SmoothnessModel(alpha0, b, gamma, c=f"const:{float(c)!r}")


def alpha_at(model, t):
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t} is outside [0, 1]")
    return float(model.alpha(t))


@dataclass(frozen=True)
class C1C2Report:
    unique_minimum: bool
    limit_ok: bool
    fitted_b: float
    ratios: tuple
    range_ok: bool
    scale_positive: bool
    warnings: tuple = ()

    @property
    def ok(self):
        # alpha <= 2 is advisory only
        return self.unique_minimum and self.limit_ok and self.scale_positive


def validate_c1_c2(model, grid_size=4097, tol=1e-6):
    """Grid checks of (C1), (C2), the range 0 < alpha <= 2 and positivity of c.

    (C1) holds when every grid value past ``t = 0`` is strictly above ``alpha0``.
    (C2) is checked on ``t = 2**-k``, ``k = 4..24``: the last five ratios
    ``(alpha(t) - alpha0) / t**gamma`` must lie within ``tol`` of ``b``.
    """
    if grid_size < 16:
        raise DomainError("grid_size must be at least 16")
    t = np.linspace(0.0, 1.0, grid_size)
    a = model.alpha(t)
    a0 = float(model.alpha(0.0))
    unique_min = bool(np.all(a[1:] > a0))

    tk = 2.0 ** -np.arange(4, 25)
    ratios = (model.alpha(tk) - a0) / tk**model.gamma
    limit_ok = bool(np.all(np.abs(ratios[-5:] - model.b) <= tol)) and abs(a0 - model.alpha0) <= tol

    warnings = []
    range_ok = bool(np.all(a > 0) and np.all(a <= 2.0))
    if not range_ok:
        warnings.append(f"alpha leaves (0, 2] on the grid: min {a.min():.6g}, max {a.max():.6g}")
    c = model.scale(t)
    scale_positive = bool(np.all(np.isfinite(c)) and np.all(c > 0))
    if not scale_positive:
        warnings.append("c(t) is not strictly positive on the grid")
    return C1C2Report(
        unique_minimum=unique_min,
        limit_ok=limit_ok,
        fitted_b=float(ratios[-1]),
        ratios=tuple(float(r) for r in ratios),
        range_ok=range_ok,
        scale_positive=scale_positive,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class ZoneCoefficients:
    beta1: float
    beta2: float
    alpha1: float
    b_star: float
    exact: bool
    converged: bool = True


REFINEMENT_GRIDS = (4096, 16384, 65536)


def _grid_extrema(model, rho, q2, size):
    t = np.linspace(0.0, rho, size + 1)
    a = model.alpha(t)
    beta1 = q2 * a.max()
    tp = t[1:]
    ratio = (a[1:] - model.alpha0) / tp**model.gamma
    # the t -> 0 limit of the ratio is b
    beta2 = min(float(ratio.min()), model.b)
    tail = np.linspace(rho, 1.0, size + 1)
    alpha1 = float(model.alpha(tail).min())
    full = np.linspace(0.0, 1.0, size + 1)
    b_star = float((model.scale(full) / (model.alpha(full) + 1.0)).max())
    return np.array([beta1, beta2, alpha1, b_star])


def zone_coefficients(model, rho, q2, rtol=1e-9):
    """Constants ``beta1, beta2, alpha1, B*`` used by the (A3) check.

    Pure power-law profiles with constant scale use exact formulas; otherwise
    the extrema are taken on uniform grids of 4096, 16384 and 65536 cells and
    ``converged`` reports whether the last two refinements agree to ``rtol``.
    """
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    if q2 <= 0:
        raise DomainError("q2 must be positive")
    if model.is_power_law:
        a_rho = model.alpha0 + model.b * rho**model.gamma
        if model.has_constant_scale:
            b_star = model.c0 / (model.alpha0 + 1.0)
        else:
            full = np.linspace(0.0, 1.0, REFINEMENT_GRIDS[-1] + 1)
            b_star = float((model.scale(full) / (model.alpha(full) + 1.0)).max())
        return ZoneCoefficients(q2 * a_rho, model.b, a_rho, b_star, exact=True)

    previous = None
    converged = False
    for size in REFINEMENT_GRIDS:
        current = _grid_extrema(model, rho, q2, size)
        if previous is not None:
            scale = np.maximum(np.abs(current), 1.0)
            converged = bool(np.all(np.abs(current - previous) <= rtol * scale))
        previous = current
    beta1, beta2, alpha1, b_star = (float(v) for v in previous)
    return ZoneCoefficients(beta1, beta2, alpha1, b_star, exact=False, converged=converged)
