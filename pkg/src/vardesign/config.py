"""Run configuration: a single JSON document describing model, design, engine and simulation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .densities import ExpPower, Pareto, Uniform01, density_from_dict, pstar
from .designs import (
    composite_design,
    dilated_design,
    quasi_regular_design,
    regular_design,
    uniform_tail_design,
)
from .errors import ConfigError, VardesignError
from .imse import (
    constant_K,
    constant_K1,
    constant_K2,
    constant_K_exppower,
    constant_K_star,
    quasi_regular_leading_constant,
)
from .smoothness import SmoothnessModel

DESIGN_KINDS = ("regular", "quasi-regular", "dilated", "composite", "uniform-tail")


@dataclass(frozen=True)
class DesignSpec:
    kind: str
    p: object = None
    ptilde: object = None
    density: object = None
    rho: float | None = None
    mu: float | None = None
    kappa: float | None = None
    unchecked: bool = False

    def build(self, model, n):
        g = model.gamma
        if self.kind == "regular":
            return regular_design(self.density, n)
        if self.kind == "quasi-regular":
            return quasi_regular_design(self.kappa, n)
        if self.kind == "dilated":
            return dilated_design(self.p, n, g, model=model, unchecked=self.unchecked)
        if self.kind == "composite":
            return composite_design(self.p, self.rho, self.ptilde, n, g, model=model,
                                    unchecked=self.unchecked)
        return uniform_tail_design(self.p, self.rho, n, g, mu=self.mu, model=model,
                                   unchecked=self.unchecked)

    def target(self, model):
        """Limit constant of the rate-normalized IMSE for this design kind."""
        if self.kind == "regular":
            return constant_K1(model, float(self.density.pdf(0.0)))
        if self.kind == "quasi-regular":
            return constant_K2(model, 1.0 - self.kappa, self.kappa)
        if isinstance(self.p, ExpPower) and self.p.gamma == model.gamma:
            if math.isclose(self.p.beta, model.b / (model.alpha0 + 1.0), rel_tol=1e-15):
                return constant_K_star(model)
            return constant_K_exppower(model, self.p)
        return constant_K(model, self.p, check=not self.unchecked)

    def leading_constant(self, model):
        """Derived leading-order limit where it differs from :meth:`target`."""
        if self.kind == "quasi-regular":
            return quasi_regular_leading_constant(model, 1.0 - self.kappa, self.kappa)
        return None

    def to_dict(self):
        out = {"kind": self.kind}
        for key in ("p", "ptilde", "density"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value.to_dict()
        for key in ("rho", "mu", "kappa"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        if self.unchecked:
            out["unchecked"] = True
        return out


def design_spec_from_dict(data, model):
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError("design spec needs a 'kind'")
    kind = data["kind"]
    if kind not in DESIGN_KINDS:
        raise ConfigError(f"unknown design kind {kind!r}; expected one of {', '.join(DESIGN_KINDS)}")

    def dens(key, default=None):
        if key in data:
            return density_from_dict(data[key], model)
        if default is None:
            raise ConfigError(f"{kind} design needs '{key}'")
        return default

    def num(key, lo, hi, required=True):
        if key not in data or data[key] is None:
            if required:
                raise ConfigError(f"{kind} design needs '{key}'")
            return None
        value = float(data[key])
        if not lo < value < hi:
            raise ConfigError(f"{key} must lie in ({lo}, {hi}), got {value}")
        return value

    unchecked = bool(data.get("unchecked", False))
    if kind == "regular":
        return DesignSpec(kind, density=dens("density", Uniform01()))
    if kind == "quasi-regular":
        return DesignSpec(kind, kappa=num("kappa", 0.0, 1.0))
    if kind == "dilated":
        return DesignSpec(kind, p=dens("p", pstar(model)), unchecked=unchecked)
    if kind == "composite":
        return DesignSpec(kind, p=dens("p", pstar(model)), ptilde=dens("ptilde", Pareto(-2.0)),
                          rho=num("rho", 0.0, 1.0), unchecked=unchecked)
    return DesignSpec(kind, p=dens("p", pstar(model)), rho=num("rho", 0.0, 1.0),
                      mu=num("mu", 0.0, 1.0, required=False), unchecked=unchecked)


@dataclass(frozen=True)
class EngineOptions:
    atol: float = 1e-12
    rtol: float = 1e-13
    method: str = "auto"
    U: float = 1.0

    @classmethod
    def from_dict(cls, data):
        opts = cls(**{k: data[k] for k in ("atol", "rtol", "method", "U") if k in data})
        if opts.method not in ("auto", "closed", "quadrature"):
            raise ConfigError(f"unknown engine method {opts.method!r}")
        if opts.atol < 0 or opts.rtol < 0 or opts.U <= 0:
            raise ConfigError("engine tolerances must be non-negative and U positive")
        return opts


@dataclass(frozen=True)
class SimulationOptions:
    kernel: str = "mbm"
    grid: int = 1025
    paths: int = 10000
    seed: int = 0
    alpha: float | None = None

    @classmethod
    def from_dict(cls, data):
        opts = cls(**{k: data[k] for k in ("kernel", "grid", "paths", "seed", "alpha") if k in data})
        if opts.kernel not in ("fbm", "mbm"):
            raise ConfigError(f"unknown kernel {opts.kernel!r}")
        if opts.grid < 2 or opts.paths < 0 or not 0 <= opts.seed < 2**64:
            raise ConfigError("simulation needs grid >= 2, paths >= 0 and a 64-bit seed")
        return opts


@dataclass(frozen=True)
class RunConfig:
    model: SmoothnessModel
    design: DesignSpec
    engine: EngineOptions = field(default_factory=EngineOptions)
    simulation: SimulationOptions = field(default_factory=SimulationOptions)
    sweep_grid: tuple = (1000, 10000, 100000, 1000000)
    source: str | None = None

    @classmethod
    def from_dict(cls, data, source=None):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        for key in ("model", "design"):
            if key not in data:
                raise ConfigError(f"config is missing '{key}'")
        try:
            model = SmoothnessModel.from_dict(data["model"])
            design = design_spec_from_dict(data["design"], model)
            engine = EngineOptions.from_dict(data.get("engine", {}))
            sim = SimulationOptions.from_dict(data.get("simulation", {}))
        except TypeError as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        except VardesignError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None
        grid = tuple(parse_grid(data.get("sweep", {}).get("grid", cls.sweep_grid)))
        return cls(model, design, engine, sim, grid, source)

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "design": self.design.to_dict(),
            "engine": vars(self.engine).copy(),
            "simulation": vars(self.simulation).copy(),
            "sweep": {"grid": list(self.sweep_grid)},
        }


def parse_grid(grid):
    """Accept ``"1e3,1e4"`` or a list of numbers; returns strictly increasing integers >= 3."""
    if isinstance(grid, str):
        items = [s for s in grid.split(",") if s.strip()]
    else:
        items = list(grid)
    try:
        values = [int(round(float(x))) for x in items]
    except ValueError:
        raise ConfigError(f"bad n grid {grid!r}") from None
    if not values or any(v < 3 for v in values):
        raise ConfigError("n grid values must be integers >= 3")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("n grid must be strictly increasing")
    return values


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return RunConfig.from_dict(data, source=str(path))
