"""Adaptive Gauss-Legendre quadrature.

Each panel is integrated with an ``order``-point rule and compared against the
sum over its two halves; panels that disagree are bisected. Endpoint power
singularities such as ``(u - s)**alpha`` are handled by repeated bisection
toward the singular end.
"""
import math
from functools import lru_cache

import numpy as np

from .errors import NumericalError


@lru_cache(maxsize=8)
def _rule(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel(f, a, b, x, w):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return half * float(np.dot(w, f(mid + half * x)))


def adaptive_gauss_legendre(f, a, b, atol=1e-12, rtol=1e-13, order=20, max_panels=20000):
    """Integrate vectorized ``f`` over ``[a, b]``; returns ``(value, error_estimate)``.

    A panel ``[l, r]`` is accepted once the whole-panel and two-half estimates
    differ by at most ``max(atol, rtol * |I0|) * (r - l) / (b - a)``, where ``I0``
    is the initial one-panel estimate of the whole integral. Distributing the
    tolerance by width lets bisection settle next to endpoint singularities,
    where the local relative error does not shrink.
    """
    if b == a:
        return 0.0, 0.0
    if b < a:
        value, err = adaptive_gauss_legendre(f, b, a, atol, rtol, order, max_panels)
        return -value, err
    x, w = _rule(order)
    length = b - a
    first = _panel(f, a, b, x, w)
    budget = max(atol, rtol * abs(first))
    stack = [(a, b, first)]
    pieces = []
    errors = []
    evaluations = 0
    while stack:
        lo, hi, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid, x, w)
        right = _panel(f, mid, hi, x, w)
        evaluations += 1
        halves = left + right
        err = abs(halves - whole)
        tol = budget * (hi - lo) / length
        if err <= tol or mid in (lo, hi):
            pieces.append(halves)
            errors.append(err)
        else:
            if evaluations > max_panels:
                raise NumericalError(f"adaptive Gauss-Legendre did not converge on [{a}, {b}]")
            stack.append((mid, hi, right))
            stack.append((lo, mid, left))
    return math.fsum(pieces), math.fsum(errors)


def integrate_to_infinity(f, tail_bound, a=0.0, rtol=1e-12, atol=0.0, cutoff=1e-16, step=1.0):
    """Integrate ``f`` over ``[a, inf)`` by truncation.

    The cutoff ``U*`` is the first point of a geometrically widening scan where ``f`` falls
    below ``cutoff`` times its running maximum and ``tail_bound(U*)`` (an
    analytic bound on the discarded integral) is below ``rtol`` times the
    accumulated value. Returns ``(value, U*, discarded_bound)``.
    """
    total = []
    fmax = 0.0
    lo = a
    width = step
    for _ in range(120):
        hi = lo + width
        # once some mass has accumulated, far pieces only need accuracy relative to it
        floor = rtol * 1e-2 * abs(math.fsum(total)) if total else 0.0
        piece, _ = adaptive_gauss_legendre(f, lo, hi, atol=max(atol, floor), rtol=rtol * 1e-2)
        total.append(piece)
        probe = f(np.array([lo, hi, 0.5 * (lo + hi)]))
        fmax = max(fmax, float(np.max(probe)))
        value = math.fsum(total)
        bound = tail_bound(hi)
        if float(f(np.array([hi]))[0]) <= cutoff * fmax and bound <= max(rtol * abs(value), atol):
            return value, hi, bound
        lo = hi
        width *= 1.5
    raise NumericalError("integrand does not decay: integral over [a, inf) appears divergent")
