"""One-dimensional maximization used by best-response oracles."""

import math

import numpy as np


def _golden_max(f, lo, hi, tol=1e-12, iters=200):
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a <= tol * max(1.0, abs(a)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (a + b) / 2


def maximize_scalar(f, lo: float, hi: float, coarse: int = 200) -> float:
    """Maximize a unimodal-ish function on [lo, hi]: log grid, then golden section."""
    if hi <= lo:
        return lo
    if lo > 0:
        grid = np.geomspace(lo, hi, coarse)
    else:
        grid = np.linspace(lo, hi, coarse)
    vals = np.array([f(x) for x in grid])
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, coarse - 1)]
    x = _golden_max(f, a, b)
    cands = [x, lo, hi, grid[i]]
    return float(max(cands, key=f))
