"""Gaussian path simulation for fractional and multifractional Brownian motion.

The multifractional covariance comes from the white-noise representation
``X(t) = int (e^{itu} - 1) |u|^{-(alpha(t)+1)/2} dW(u)``, normalized so that

    E X(s) X(t) = int_0^inf [cos((t-s)u) - cos(tu) - cos(su) + 1] u^{-(h+1)} du,
    h = (alpha(s) + alpha(t)) / 2,

which gives ``Var X(t) = c_alpha t^alpha`` with the spectral constant
``c_alpha = 2 int_0^inf (1 - cos v) v^{-(alpha+1)} dv``. The integral is split
into a Taylor-series piece near zero, Gauss-Legendre panels aligned with the
oscillation period, and a Fourier-weighted tail.

Paths are drawn from a dense Cholesky factor; path ``i`` uses its own Philox
stream keyed by ``(seed, i)`` so ensembles do not depend on batching or
thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg

from .errors import DomainError, NumericalError
from .imse import Variogram
from .quadrature import adaptive_gauss_legendre

MAX_GRID = 4096
JITTERS = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8)


def fbm_cov(s, t, alpha):
    """``(s**alpha + t**alpha - |t - s|**alpha) / 2``."""
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"fBm needs alpha in (0, 2), got {alpha}")
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return 0.5 * (np.abs(s) ** alpha + np.abs(t) ** alpha - np.abs(t - s) ** alpha)


def _spectral_integral(freqs, signs, h, rtol=1e-11, periods=24):
    """``int_0^inf sum_k sign_k (1 - cos(freq_k u)) u^{-(h+1)} du`` for ``0 < h < 2``."""
    pairs = [(float(w), float(sg)) for w, sg in zip(freqs, signs) if w > 0]
    if not pairs:
        return 0.0
    wmax = max(w for w, _ in pairs)
    u0 = 1.0 / wmax

    # near zero: 1 - cos(wu) = sum_k (-1)^(k+1) (wu)^(2k) / (2k)!
    series = []
    for k in range(1, 40):
        coef = sum(sg * w ** (2 * k) for w, sg in pairs)
        term = (-1) ** (k + 1) * coef * u0 ** (2 * k - h) / (math.factorial(2 * k) * (2 * k - h))
        series.append(term)
        if abs(term) < 1e-18 * max(abs(math.fsum(series)), 1e-300) and k > 2:
            break
    head = math.fsum(series)

    def f(u):
        num = np.zeros_like(u)
        for w, sg in pairs:
            num += sg * (1.0 - np.cos(w * u))
        return num * u ** (-h - 1.0)

    width = math.pi / wmax
    body = []
    lo = u0
    for _ in range(periods):
        value, _ = adaptive_gauss_legendre(f, lo, lo + width, atol=0.0, rtol=rtol)
        body.append(value)
        lo += width
    far = lo

    tail = []
    for w, sg in pairs:
        tail.append(sg * far ** (-h) / h)
        osc, err = integrate.quad(lambda u: u ** (-h - 1.0), far, np.inf, weight="cos", wvar=w,
                                  epsabs=rtol * far ** (-h) / h, limlst=200)
        tail.append(-sg * osc)
    return math.fsum([head, math.fsum(body), math.fsum(tail)])


def spectral_constant(alpha):
    """``c_alpha = 2 int_0^inf (1 - cos v) v^{-(alpha+1)} dv`` by quadrature."""
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"spectral constant needs alpha in (0, 2), got {alpha}")
    return 2.0 * _spectral_integral([1.0], [1.0], alpha)


def mbm_cov(s, t, model):
    """Multifractional covariance ``E X(s) X(t)`` by direct spectral quadrature."""
    if s < 0 or t < 0:
        raise DomainError("mBm covariance needs s, t >= 0")
    a_s, a_t = float(model.alpha(s)), float(model.alpha(t))
    if not (0.0 < a_s < 2.0 and 0.0 < a_t < 2.0):
        raise DomainError(f"mBm needs alpha in (0, 2); alpha(s)={a_s}, alpha(t)={a_t}")
    if s == 0 or t == 0:
        return 0.0
    h = 0.5 * (a_s + a_t)
    try:
        return _spectral_integral([t, s, abs(t - s)], [1.0, 1.0, -1.0], h)
    except NumericalError as exc:
        raise NumericalError(f"mBm covariance quadrature failed at (s, t) = ({s}, {t}): {exc}") from None


class SpectralTable:
    """Chebyshev interpolant of ``log c_h`` on ``[lo, hi]`` built from quadrature values."""

    def __init__(self, lo, hi, degree=24, tol=1e-11):
        if not 0.0 < lo <= hi < 2.0:
            raise DomainError("spectral table range must lie inside (0, 2)")
        self.lo, self.hi = lo, hi
        if hi - lo < 1e-12:
            self.const = math.log(spectral_constant(lo))
            self.poly = None
            return
        self.const = None
        while True:
            nodes = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
            h = self._to_h(nodes)
            values = np.log([spectral_constant(x) for x in h])
            self.poly = np.polynomial.chebyshev.Chebyshev.fit(nodes, values, degree, domain=[-1, 1])
            mids = np.cos(np.pi * (np.arange(degree) + 1.0) / (degree + 1))
            probe = np.log([spectral_constant(x) for x in self._to_h(mids[::4])])
            if np.max(np.abs(self.poly(mids[::4]) - probe)) < tol or degree >= 96:
                break
            degree *= 2

    def _to_h(self, x):
        return 0.5 * (self.hi + self.lo) + 0.5 * (self.hi - self.lo) * np.asarray(x)

    def __call__(self, h):
        h = np.asarray(h, dtype=float)
        if self.poly is None:
            return np.full_like(h, math.exp(self.const))
        x = (2.0 * h - (self.hi + self.lo)) / (self.hi - self.lo)
        return np.exp(self.poly(np.clip(x, -1.0, 1.0)))


class CovarianceKernel:
    kind = "custom"

    def cov(self, s, t):
        raise NotImplementedError

    def variance(self, t):
        t = np.asarray(t, dtype=float)
        return self.cov(t, t)

    def variogram(self, s, t):
        return self.variance(s) + self.variance(t) - 2.0 * self.cov(s, t)

    def lag_variogram(self, s, tau):
        return self.variogram(s, s + np.asarray(tau, dtype=float))

    def gram(self, grid):
        grid = np.asarray(grid, dtype=float)
        g = self.cov(grid[:, None], grid[None, :])
        return 0.5 * (g + g.T)

    def local_alpha(self, t):
        raise NotImplementedError


class FbmKernel(CovarianceKernel):
    kind = "fbm"

    def __init__(self, alpha):
        if not 0.0 < alpha < 2.0:
            raise DomainError(f"fBm needs alpha in (0, 2), got {alpha}")
        self.alpha = alpha

    def cov(self, s, t):
        return fbm_cov(s, t, self.alpha)

    def variogram(self, s, t):
        return np.abs(np.asarray(t, dtype=float) - s) ** self.alpha

    def lag_variogram(self, s, tau):
        return np.abs(np.asarray(tau, dtype=float)) ** self.alpha

    def local_alpha(self, t):
        return self.alpha


class MbmKernel(CovarianceKernel):
    """Multifractional kernel; grid evaluation uses ``(c_h / 2)(s^h + t^h - |t-s|^h)``
    with ``c_h`` from a quadrature-built :class:`SpectralTable`.

    ``exact_cov`` runs the full spectral quadrature per pair.
    """

    kind = "mbm"

    def __init__(self, model, grid_size=2049):
        a = model.alpha(np.linspace(0.0, 1.0, grid_size))
        if not (a.min() > 0 and a.max() < 2):
            raise DomainError("mBm needs 0 < alpha(t) < 2 on [0, 1]")
        self.model = model
        self.table = SpectralTable(float(a.min()), float(a.max()))

    def cov(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        h = 0.5 * (self.model.alpha(s) + self.model.alpha(t))
        return 0.5 * self.table(h) * (s**h + t**h - np.abs(t - s) ** h)

    def exact_cov(self, s, t):
        return mbm_cov(s, t, self.model)

    def local_scale(self, t):
        """Limit of ``||X(t+s) - X(t)||^2 / |s|^alpha(t)`` as ``s -> 0``, i.e. ``c_alpha(t)``."""
        return float(self.table(self.model.alpha(t)))

    def local_alpha(self, t):
        return float(self.model.alpha(t))


class FunctionKernel(CovarianceKernel):
    def __init__(self, fn, alpha_fn=None):
        self.fn = fn
        self.alpha_fn = alpha_fn

    def cov(self, s, t):
        return self.fn(s, t)

    def local_alpha(self, t):
        if self.alpha_fn is None:
            raise DomainError("this kernel has no smoothness index")
        return self.alpha_fn(t)


class KernelVariogram(Variogram):
    """Variogram ``cov(s,s) + cov(t,t) - 2 cov(s,t)`` derived from a kernel."""

    def __init__(self, kernel):
        self.kernel = kernel

    def __call__(self, s, t):
        return self.kernel.variogram(s, np.asarray(t, dtype=float))

    def increment(self, s, tau):
        return self.kernel.lag_variogram(s, tau)


def factorize(gram):
    """Lower Cholesky factor with diagonal jitter escalating from 1e-12 to 1e-8 (relative to the mean diagonal)."""
    scale = float(np.mean(np.diag(gram))) if gram.size else 1.0
    for jitter in JITTERS:
        try:
            a = gram + jitter * scale * np.eye(gram.shape[0]) if jitter else gram
            return linalg.cholesky(a, lower=True, check_finite=False), jitter
        except linalg.LinAlgError:
            continue
    smallest = float(linalg.eigvalsh(gram, subset_by_index=[0, 0])[0])
    raise NumericalError(f"Gram matrix not positive definite after jitter; smallest eigenvalue ~ {smallest:.3e}")


def path_normals(seed, index, size):
    """Standard normals for path ``index`` from a Philox stream keyed by ``(seed, index)``."""
    key = (int(seed) << 64) | int(index)
    return np.random.Generator(np.random.Philox(key=key)).standard_normal(size)


@dataclass(frozen=True)
class PathEnsemble:
    """Zero-mean Gaussian paths on ``grid``, generated lazily in fixed batches."""

    grid: np.ndarray
    factor: np.ndarray
    active: np.ndarray
    count: int
    seed: int
    batch_size: int = 1024
    jitter: float = 0.0

    def batch(self, k):
        start = k * self.batch_size
        stop = min(start + self.batch_size, self.count)
        m = self.factor.shape[0]
        z = np.empty((stop - start, m))
        for row, i in enumerate(range(start, stop)):
            z[row] = path_normals(self.seed, i, m)
        out = np.zeros((stop - start, self.grid.size))
        out[:, self.active] = z @ self.factor.T
        return out

    @property
    def n_batches(self):
        return -(-self.count // self.batch_size)

    def map_batches(self, fn, threads=1):
        """``[fn(batch_k) for k]`` in batch order; batches may run on worker threads."""
        work = lambda k: fn(self.batch(k))
        if threads <= 1 or self.n_batches <= 1:
            return [work(k) for k in range(self.n_batches)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, range(self.n_batches)))

    @property
    def paths(self):
        if self.count == 0:
            return np.empty((0, self.grid.size))
        if self.count * self.grid.size > 5e7:
            raise MemoryError("ensemble too large to materialize; use map_batches")
        return np.vstack(self.map_batches(lambda x: x))


def sample_paths(kernel, grid, count, seed, batch_size=1024):
    """Ensemble of ``count`` paths of ``kernel`` on the sorted ``grid``.

    Grid points with zero variance (``X(0) = 0``) are pinned to zero; the
    remaining Gram matrix is factorized once.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("grid must be a non-empty 1-d array")
    if grid.size > MAX_GRID:
        raise DomainError(f"grid size {grid.size} exceeds the dense limit {MAX_GRID}")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing")
    if count < 0:
        raise DomainError("count must be non-negative")
    if not 0 <= seed < 2**64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    active = kernel.variance(grid) > 0
    factor, jitter = factorize(kernel.gram(grid[active]))
    return PathEnsemble(grid, factor, active, int(count), int(seed), batch_size, jitter)


def grid_with_knots(size, knots, min_sep=1e-9):
    """Uniform ``size``-point grid on [0, 1] merged with ``knots``; uniform points closer
    than ``min_sep`` to a knot are dropped so the Gram matrix stays well conditioned."""
    knots = np.asarray(knots, dtype=float)
    base = np.linspace(0.0, 1.0, size)
    pos = np.clip(np.searchsorted(knots, base), 1, knots.size - 1)
    near = np.minimum(np.abs(base - knots[pos - 1]), np.abs(base - knots[pos]))
    return np.union1d(base[near > min_sep], knots)


def _knot_indices(grid, knots, tol=1e-12):
    idx = np.searchsorted(grid, knots)
    idx = np.clip(idx, 0, grid.size - 1)
    lower = np.clip(idx - 1, 0, grid.size - 1)
    pick = np.where(np.abs(grid[lower] - knots) < np.abs(grid[idx] - knots), lower, idx)
    off = np.abs(grid[pick] - knots) > tol
    if np.any(off):
        raise DomainError(f"knot {knots[np.argmax(off)]} is not on the ensemble grid")
    return pick


def _cell_anchors(grid, design):
    kidx = _knot_indices(grid, design.knots)
    if kidx[0] != 0 or kidx[-1] != grid.size - 1:
        raise DomainError("the ensemble grid must span exactly [0, 1]")
    # cell k = [grid[k], grid[k+1]] lies in interval j with left knot index kidx[j-1]
    cell_interval = np.searchsorted(kidx, np.arange(grid.size - 1), side="right") - 1
    return kidx[cell_interval]


def _path_integrals(block, grid, anchors):
    h = np.diff(grid)
    base = block[:, anchors]
    d0 = block[:, :-1] - base
    d1 = block[:, 1:] - base
    return (0.5 * (d0**2 + d1**2)) @ h


def empirical_imse(ensemble, design, threads=1):
    """Path average of ``int_0^1 (X - X_n)^2 dt`` by the trapezoid rule; returns ``(estimate, se)``."""
    if ensemble.count == 0:
        raise DomainError("empirical IMSE needs at least one path")
    anchors = _cell_anchors(ensemble.grid, design)
    parts = ensemble.map_batches(lambda b: _path_integrals(b, ensemble.grid, anchors), threads)
    values = np.concatenate(parts)
    mean = math.fsum(values) / values.size
    if values.size < 2:
        return mean, math.inf
    var = math.fsum((values - mean) ** 2) / (values.size - 1)
    return mean, math.sqrt(var / values.size)


def trapezoid_expectation(kernel, grid, design):
    """Exact expectation of the trapezoid estimator used by :func:`empirical_imse`."""
    grid = np.asarray(grid, dtype=float)
    anchors = _cell_anchors(grid, design)
    a = grid[anchors]
    v0 = np.array([float(kernel.variogram(x, y)) for x, y in zip(a, grid[:-1])])
    v1 = np.array([float(kernel.variogram(x, y)) for x, y in zip(a, grid[1:])])
    return math.fsum(0.5 * (v0 + v1) * np.diff(grid))


@dataclass(frozen=True)
class LocalRatio:
    s: float
    ratio: float
    se: float
    flagged: bool


def empirical_local_stationarity(ensemble, t, s_values, alpha_t, threads=1):
    """Sample ratios ``mean (X(t+s) - X(t))^2 / s**alpha_t``; ``s > 0.5`` is flagged as outside the local regime."""
    grid = ensemble.grid
    i0 = _knot_indices(grid, np.array([t]))[0]
    idx = _knot_indices(grid, t + np.asarray(s_values, dtype=float))
    if ensemble.count < 2:
        raise DomainError("need at least two paths")

    def sq(block):
        return (block[:, idx] - block[:, [i0]]) ** 2

    sq_all = np.vstack(ensemble.map_batches(sq, threads))
    out = []
    for k, s in enumerate(s_values):
        col = sq_all[:, k]
        scale = float(s) ** alpha_t
        mean = math.fsum(col) / col.size
        se = float(np.std(col, ddof=1)) / math.sqrt(col.size)
        out.append(LocalRatio(float(s), mean / scale, se / scale, bool(s > 0.5)))
    return out
