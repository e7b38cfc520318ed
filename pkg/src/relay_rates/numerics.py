"""Small 1-D search helpers shared by the Gaussian and fading modules."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ConvergenceError

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f, a: float, b: float, xtol: float = 1e-12, maxiter: int = 200):
    """Maximize ``f`` on ``[a, b]`` by golden-section search in log coordinates.

    Both endpoints are evaluated too, so a monotone ``f`` returns the right
    end value exactly. Returns ``(x, f(x))``.
    """
    if not (0 < a <= b):
        raise ValueError("golden_max works on positive intervals")
    best = max(((a, f(a)), (b, f(b))), key=lambda t: t[1])
    if a == b:
        return best
    lo, hi = math.log(a), math.log(b)
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    for _ in range(maxiter):
        if hi - lo <= xtol:
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(math.exp(c))
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(math.exp(d))
    x = math.exp(c if fc >= fd else d)
    fx = max(fc, fd)
    return max(best, (x, fx), key=lambda t: t[1])


def expanding_root(f, lo: float = 1e-6, hi: float = 1e4, limit: float = 1e8,
                   factor: float = 10.0, what: str = "root"):
    """Root of ``f`` on ``[lo, hi]``, growing ``hi`` geometrically up to ``limit``.

    ``f(lo)`` and ``f(hi)`` must end up with opposite signs; otherwise a
    :class:`ConvergenceError` carrying the tried brackets is raised.
    """
    flo = f(lo)
    if flo == 0.0:
        return lo
    tried = []
    while True:
        fhi = f(hi)
        tried.append((hi, fhi))
        if fhi == 0.0:
            return hi
        if math.copysign(1.0, flo) != math.copysign(1.0, fhi):
            return brentq(f, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=500)
        if hi >= limit:
            raise ConvergenceError(
                f"{what} not bracketed in [{lo:g}, {limit:g}]",
                {"lower": lo, "f_lower": flo, "tried_upper": tried},
            )
        hi = min(hi * factor, limit)


def grid_max(f, lo: float, hi: float, points: int = 4000):
    """Maximize a vectorized ``f`` over ``[lo, hi]``: log grid, then bounded Brent.

    The refinement runs between the neighbours of the best grid point, so it
    needs no knowledge of where ``f`` changes regime.
    """
    grid = np.geomspace(lo, hi, points)
    vals = np.asarray(f(grid), dtype=float)
    i = int(np.argmax(vals))
    best = (float(grid[i]), float(vals[i]))
    a, b = math.log(grid[max(i - 1, 0)]), math.log(grid[min(i + 1, points - 1)])
    if b > a:
        res = minimize_scalar(lambda t: -float(f(math.exp(t))), bounds=(a, b),
                              method="bounded", options={"xatol": 1e-12})
        if -res.fun > best[1]:
            best = (math.exp(res.x), float(-res.fun))
    return best


def piecewise_max(f, lo: float, hi: float, cuts=()):
    """Maximize ``f`` on ``[lo, hi]`` given every point where it may change shape.

    Each piece between consecutive cuts is searched by :func:`golden_max`.
    """
    pts = sorted({lo, hi, *[c for c in cuts if lo < c < hi and math.isfinite(c)]})
    best = (lo, f(lo))
    for a, b in zip(pts[:-1], pts[1:]):
        best = max(best, golden_max(f, a, b), key=lambda t: t[1])
    return best
