"""Brute-force reference computations used to cross-check the exact algorithms.

None of these share code paths with the production routines beyond the step
function's prefix sums: suprema are taken over grids, roots come from a
bracketing solver, series are summed term by term.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .stepfn import StepFunction


def _prefix_at(f: StepFunction, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``int_0^t phi`` and ``int_0^t phi^2`` for an interval-space function (piecewise linear)."""
    v = f.values
    p1 = np.concatenate([[0.0], np.cumsum(f.lengths * v)])
    p2 = np.concatenate([[0.0], np.cumsum(f.lengths * v * v)])
    return np.interp(t, f.breaks, p1), np.interp(t, f.breaks, p2)


def grid_bmo(f: StepFunction, resolution: float = 1e-3) -> float:
    """Square root of the largest variance over intervals with endpoints on a uniform grid."""
    t = np.linspace(0.0, 1.0, int(round(1 / resolution)) + 1)
    P1, P2 = _prefix_at(f, t)
    best = 0.0
    for i in range(len(t) - 1):
        L = t[i + 1:] - t[i]
        m1 = (P1[i + 1:] - P1[i]) / L
        m2 = (P2[i + 1:] - P2[i]) / L
        best = max(best, float(np.max(m2 - m1 * m1)))
    return math.sqrt(max(best, 0.0))


def grid_weak_bmo(f: StepFunction, lam: float, resolution: float = 1e-3) -> float:
    """Constrained sup of the variance over intervals whose average lies on ``lam Z``.

    Left ends run over the grid.  For each, the average as a function of the
    right end is sampled on the grid; every crossing of a lattice level is
    bracketed between two samples and refined by bisection on the exact
    average, and the variance is evaluated at the refined right end.
    """
    t = np.linspace(0.0, 1.0, int(round(1 / resolution)) + 1)
    P1, P2 = _prefix_at(f, t)
    X, Y = np.meshgrid(t, t, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        lev = (P1[None, :] - P1[:, None]) / (Y - X) / lam
    lev[Y <= X] = np.nan
    xs_hit, ys_hit = np.nonzero(np.isclose(lev, np.round(lev), rtol=0, atol=1e-12))
    # brackets between consecutive right ends of the same row
    a, b = lev[:, :-1], lev[:, 1:]
    with np.errstate(invalid="ignore"):
        cross = np.isfinite(a) & np.isfinite(b) & (np.floor(a) != np.floor(b))
    ii, jj = np.nonzero(cross)
    lo = np.minimum(a[ii, jj], b[ii, jj])
    hi = np.maximum(a[ii, jj], b[ii, jj])
    count = (np.floor(hi) - np.ceil(lo) + 1).astype(int)
    ii, jj, lo_rep = np.repeat(ii, count), np.repeat(jj, count), np.repeat(np.ceil(lo), count)
    start = np.repeat(np.cumsum(count) - count, count)
    m = lo_rep + (np.arange(count.sum()) - start)
    # orient so that level - m is negative at ``left``
    up = a[ii, jj] < b[ii, jj]
    left = np.where(up, t[jj], t[jj + 1])
    right = np.where(up, t[jj + 1], t[jj])
    x0, p0 = t[ii], P1[ii]
    for _ in range(48):
        mid = 0.5 * (left + right)
        q1, _ = _prefix_at(f, mid)
        neg = (q1 - p0) / (mid - x0) / lam < m
        left = np.where(neg, mid, left)
        right = np.where(neg, right, mid)
    xs = np.concatenate([t[xs_hit], x0])
    ys = np.concatenate([t[ys_hit], 0.5 * (left + right)])
    if not xs.size:
        return 0.0
    a1, a2 = _prefix_at(f, xs)
    b1, b2 = _prefix_at(f, ys)
    L = ys - xs
    m1 = (b1 - a1) / L
    m2 = (b2 - a2) / L
    return math.sqrt(max(float(np.max(m2 - m1 * m1)), 0.0))


def mu_critical_root(lam: float, eps: float) -> float:
    """Zero of the vertex-value denominator ``lam/2 + s + (lam/2 - s) exp(lam mu)``."""
    s = math.sqrt(lam * lam / 4 + eps * eps)

    def den(mu):
        return lam / 2 + s + (lam / 2 - s) * math.exp(lam * mu)

    hi = 1.0 / lam
    while den(hi) > 0:
        hi *= 2
    return brentq(den, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def series_vertex_value(lam: float, eps: float, mu: float, max_terms: int = 100_000) -> tuple[float, float]:
    """Term-by-term sum of ``(1 - a) a^n exp(mu v_n)`` and a bound on the neglected rest."""
    s = math.sqrt(lam * lam / 4 + eps * eps)
    a = (s - lam / 2) / (s + lam / 2)
    q = a * math.exp(mu * lam)
    if q >= 1:
        raise ValueError("series diverges")
    terms = []
    term = (1 - a) * math.exp(mu * (lam / 2 - s))
    for _ in range(max_terms):
        terms.append(term)
        if term < 1e-18 * terms[0]:
            break
        term *= q
    total = math.fsum(terms)
    return total, term / (1 - q)
