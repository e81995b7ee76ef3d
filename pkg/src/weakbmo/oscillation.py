"""Oscillation quantities of step functions.

All suprema over subintervals are computed exactly.  The variance over
``[x, y]`` restricted to a pair of pieces is maximised on an edge of the
piece-pair rectangle (there are no isolated interior critical points), so it
suffices to pin one endpoint at a breakpoint and optimise the other in closed
form.  The same holds under the lattice constraint ``<phi>_[x,y] in lam*Z``:
along each constraint line the variance is a linear-fractional function of
the free length, hence monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .geometry import CombDomain, Region
from .stepfn import Space, StepFunction

JN_DYADIC_THRESHOLD = math.sqrt(2.0) * math.log(2.0)


@dataclass
class SupResult:
    """Square root of a supremum of variances and an interval attaining it."""

    value: float
    argmax: tuple[float, float] | None
    level: int | None = None
    error_bar: float = 0.0

    @property
    def variance(self) -> float:
        return self.value**2


@dataclass
class NormReport:
    bmo: float
    bmo_dyadic: float
    weak_bmo: float
    global_variance: float
    argmax: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "bmo": self.bmo,
            "bmo_dyadic": self.bmo_dyadic,
            "weak_bmo": self.weak_bmo,
            "global_variance": self.global_variance,
            "argmax": self.argmax,
        }


def variance(f: StepFunction, a: float, b: float) -> float:
    m1, m2 = f.moments(a, b)
    return max(m2 - m1 * m1, 0.0)


# -- unrolled representation -------------------------------------------------


class _Unrolled:
    """Breakpoints, values and prefix integrals of ``f`` on ``[0, periods]``."""

    def __init__(self, f: StepFunction, periods: int = 1, reflect: bool = False):
        lengths = f.lengths[::-1] if reflect else f.lengths
        vals = f.values[::-1] if reflect else f.values
        n = len(lengths)
        base = StepFunction(lengths, vals, Space.INTERVAL) if reflect else f
        br, p1 = base.breaks, base.prefix
        p2 = _second_prefix(base)
        tot1, tot2 = p1[-1], p2[-1]
        self.n = n
        self.B = np.concatenate([br[:-1] + r for r in range(periods)] + [[float(periods)]])
        self.P1 = np.concatenate([p1[:-1] + r * tot1 for r in range(periods)] + [[periods * tot1]])
        self.P2 = np.concatenate([p2[:-1] + r * tot2 for r in range(periods)] + [[periods * tot2]])
        self.v = np.tile(vals, periods)
        self.ell = np.tile(lengths, periods)


def _second_prefix(f: StepFunction) -> np.ndarray:
    cached = getattr(f, "_p2", None)
    if cached is None:
        cached = f.lifted.prefix[:, 1].copy()
        f._p2 = cached
    return cached


def _var(S1, S2, M):
    m = S1 / M
    return np.maximum(S2 / M - m * m, 0.0)


def _scan_unconstrained(u: _Unrolled, lefts, Lmax: float):
    """Best variance over ``[B[k], y]`` with ``k`` in ``lefts``."""
    best = (0.0, None)
    for k in lefts:
        X = u.B[k]
        j = np.arange(k, len(u.v))
        M0 = u.B[j] - X
        keep = M0 < Lmax
        j, M0 = j[keep], M0[keep]
        S1 = u.P1[j] - u.P1[k]
        S2 = u.P2[j] - u.P2[k]
        v = u.v[j]
        bmax = np.minimum(u.ell[j], Lmax - M0)
        with np.errstate(divide="ignore", invalid="ignore"):
            m0 = np.where(M0 > 0, S1 / np.where(M0 > 0, M0, 1.0), v)
            V0 = np.where(M0 > 0, np.maximum(S2 / np.where(M0 > 0, M0, 1.0) - m0 * m0, 0.0), 0.0)
            D = (v - m0) ** 2
            bstar = np.where(D + V0 > 0, M0 * (D - V0) / np.where(D + V0 > 0, D + V0, 1.0), 0.0)
        bstar = np.clip(bstar, 0.0, bmax)
        for beta in (bmax, bstar):
            M = M0 + beta
            ok = M > 0
            if not ok.any():
                continue
            var = np.where(ok, _var(S1 + beta * v, S2 + beta * v * v, np.where(ok, M, 1.0)), 0.0)
            i = int(np.argmax(var))
            if var[i] > best[0]:
                best = (float(var[i]), (float(X), float(X + M[i])))
    return best


def _scan_constrained(u: _Unrolled, lefts, Lmax: float, lam: float, tol: float):
    """Best variance over ``[B[k], y]`` whose average lies in ``lam * Z``."""
    best = (0.0, None, None)
    found = False
    for k in lefts:
        X = u.B[k]
        for j in range(k, len(u.v)):
            M0 = u.B[j] - X
            if M0 >= Lmax:
                break
            S1 = u.P1[j] - u.P1[k]
            S2 = u.P2[j] - u.P2[k]
            v = u.v[j]
            bmax = min(u.ell[j], Lmax - M0)
            a_end = (S1 + bmax * v) / (M0 + bmax)
            a_start = S1 / M0 if M0 > 0 else v
            lo, hi = min(a_start, a_end), max(a_start, a_end)
            m_lo = math.ceil((lo - tol) / lam)
            m_hi = math.floor((hi + tol) / lam)
            if m_hi < m_lo:
                continue
            levels = np.arange(m_lo, m_hi + 1)
            c = lam * levels
            denom = v - c
            flat = np.abs(denom) <= tol
            with np.errstate(divide="ignore", invalid="ignore"):
                beta = np.where(flat, bmax, (c * M0 - S1) / np.where(flat, 1.0, denom))
            beta = np.clip(beta, 0.0, bmax)
            M = M0 + beta
            ok = M > 0
            avg = np.where(ok, (S1 + beta * v) / np.where(ok, M, 1.0), np.nan)
            ok &= np.abs(avg - c) <= tol * max(1.0, abs(float(np.max(np.abs(c)))))
            if not ok.any():
                continue
            found = True
            var = np.where(ok, _var(S1 + beta * v, S2 + beta * v * v, np.where(ok, M, 1.0)), -1.0)
            i = int(np.argmax(var))
            if var[i] > best[0] or best[1] is None:
                best = (max(float(var[i]), 0.0), (float(X), float(X + M[i])), int(levels[i]))
    return best if found else (0.0, None, None)


def _sup_over_intervals(f: StepFunction, lam: float | None, periods: int, Lmax: float, tol: float):
    out = []
    for reflect in (False, True):
        u = _Unrolled(f, periods, reflect)
        lefts = range(u.n) if periods > 1 else range(len(u.v))
        if lam is None:
            var, arg = _scan_unconstrained(u, lefts, Lmax)
            level = None
        else:
            var, arg, level = _scan_constrained(u, lefts, Lmax, lam, tol)
        if arg is not None and reflect:
            x, y = arg
            arg = (periods - y, periods - x)
            if periods > 1:
                shift = math.floor(arg[0])
                arg = (arg[0] - shift, arg[1] - shift)
        out.append((var, arg, level))
    # ties resolved toward the lexicographically smallest interval
    out.sort(key=lambda r: (-r[0], r[1] if r[1] is not None else (math.inf, math.inf)))
    var, arg, level = out[0]
    # prefix differences leave ~1e-17 of noise that the square root would blow up
    if np.all(f.values == f.values[0]):
        var = 0.0
    return var, arg, level


# -- public quantities -------------------------------------------------------


def bmo_norm(f: StepFunction) -> SupResult:
    """Quadratic BMO norm ``sqrt(sup_I <(phi - <phi>_I)^2>_I)`` on [0, 1]."""
    if f.space is not Space.INTERVAL:
        raise ValueError("bmo_norm expects an interval-space function")
    var, arg, _ = _sup_over_intervals(f, None, 1, math.inf, 0.0)
    return SupResult(math.sqrt(var), arg)


def weak_bmo(f: StepFunction, lam: float, snap_tol: float | None = None) -> SupResult:
    """Variance supremum restricted to intervals with average in ``lam * Z``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    tol = 1e-9 * max(1.0, lam) if snap_tol is None else snap_tol
    if f.space is Space.CIRCLE:
        raise ValueError("use weak_bmo_circle for circle functions")
    var, arg, level = _sup_over_intervals(f, lam, 1, math.inf, tol)
    return SupResult(math.sqrt(var), arg, level)


def weak_bmo_circle(f: StepFunction, lam: float, k_max: int = 16,
                    snap_tol: float | None = None) -> SupResult:
    """Lattice-restricted variance supremum over windows of the periodisation.

    Windows are capped at length ``k_max``.  Longer windows have mean and second
    moment within ``2 M / k_max`` and ``2 M^2 / k_max`` of the global ones
    (``M = max |phi|``), so their variance is at most the global variance plus
    ``6 M^2 / k_max``; the excess of that over the computed supremum is
    returned as ``error_bar`` (variance units, zero when it cannot matter).
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    tol = 1e-9 * max(1.0, lam) if snap_tol is None else snap_tol
    var, arg, level = _sup_over_intervals(f, lam, k_max + 1, float(k_max), tol)
    big = float(np.max(np.abs(f.values)))
    m1 = f.mean()
    gvar = max(float(_second_prefix(f)[-1]) - m1 * m1, 0.0)
    error_bar = max(0.0, gvar + 6 * big * big / k_max - var)
    return SupResult(math.sqrt(var), arg, level, error_bar)


def bmo_dyadic(f: StepFunction, depth: int) -> SupResult:
    """Square root of the largest variance over dyadic intervals of generation <= depth.

    Variances are taken in centred form over the pieces cut by the dyadic
    grid, so intervals on which ``f`` is constant give exactly zero.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if f.space is not Space.INTERVAL:
        raise ValueError("bmo_dyadic expects an interval-space function")
    best, arg = -1.0, None
    for g in range(depth + 1):
        count = 2**g
        t = np.arange(count + 1) / count
        cuts = np.union1d(t, f.breaks)
        ell = np.diff(cuts)
        mid = 0.5 * (cuts[:-1] + cuts[1:])
        v = f.values[np.clip(np.searchsorted(f.breaks, mid, side="right") - 1, 0, f.n_pieces - 1)]
        owner = np.minimum((mid * count).astype(int), count - 1)
        h = 1.0 / count
        m = np.bincount(owner, ell * v, minlength=count) / h
        var = np.bincount(owner, ell * (v - m[owner]) ** 2, minlength=count) / h
        i = int(np.argmax(var))
        if var[i] > best:
            best, arg = float(var[i]), (float(t[i]), float(t[i + 1]))
    return SupResult(math.sqrt(best), arg)


def global_variance(f: StepFunction) -> float:
    m1 = f.mean()
    return max(float(_second_prefix(f)[-1]) - m1 * m1, 0.0)


def jn_classical(eps: float) -> float:
    """Sharp integral John-Nirenberg constant ``e^{-eps}/(1-eps)``, valid for ``0 <= eps < 1``."""
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"classical bound needs 0 <= eps < 1 (sharp threshold 1), got {eps}")
    return math.exp(-eps) / (1.0 - eps)


def jn_dyadic(eps: float) -> float:
    """Sharp dyadic constant, valid for ``0 <= eps < sqrt(2) log 2``."""
    if not 0.0 <= eps < JN_DYADIC_THRESHOLD:
        raise ValueError(f"dyadic bound needs 0 <= eps < sqrt(2)*log(2) = {JN_DYADIC_THRESHOLD!r}, got {eps}")
    r = eps / math.sqrt(2.0)
    return math.exp(-r) / (2.0 - math.exp(r))


def jn_bounds(eps: float) -> tuple[float, float]:
    """``(classical, dyadic)``; the dyadic entry is ``inf`` past its own threshold."""
    classical = jn_classical(eps)
    dyadic = jn_dyadic(eps) if eps < JN_DYADIC_THRESHOLD else math.inf
    return classical, dyadic


def exp_oscillation(f: StepFunction) -> float:
    """``<exp(phi - <phi>)>`` over the whole domain."""
    m = f.mean()
    return math.fsum(f.lengths * np.exp(f.values - m))


def norms(f: StepFunction, lam: float, dyadic_depth: int = 12, k_max: int = 16) -> NormReport:
    if f.space is Space.CIRCLE:
        w = weak_bmo_circle(f, lam, k_max)
        b = None
    else:
        w = weak_bmo(f, lam)
        b = bmo_norm(f)
    dy = bmo_dyadic(f, dyadic_depth)
    return NormReport(
        bmo=b.value if b else math.nan,
        bmo_dyadic=dy.value,
        weak_bmo=w.value,
        global_variance=global_variance(f),
        argmax={
            "bmo": list(b.argmax) if b and b.argmax else None,
            "bmo_dyadic": list(dy.argmax) if dy.argmax else None,
            "weak_bmo": list(w.argmax) if w.argmax else None,
            "weak_bmo_level": w.level,
            "weak_bmo_error_bar": w.error_bar,
        },
    )


# -- class membership --------------------------------------------------------


@dataclass
class Membership:
    member: bool
    weak_bmo: float
    witness: tuple[float, float] | None
    mean_point: tuple[float, float]
    mean_region: str
    hull_check: bool | None = None

    def __bool__(self):
        return self.member


def membership_A(f: StepFunction, d: CombDomain, strict: bool = True, k_max: int = 16) -> Membership:
    """Whether the lifted ``psi`` keeps every subinterval average off the rays.

    ``strict=True`` tests ``[phi] < eps``, which is exactly the class ``A_Omega``
    (the rays are closed and suprema over step functions are attained);
    ``strict=False`` tests the closure ``[phi] <= eps``.  Circle functions are
    additionally checked against the hull interior for their global mean.
    """
    if f.space is Space.CIRCLE:
        w = weak_bmo_circle(f, d.lam, k_max, d.snap_tol)
    else:
        w = weak_bmo(f, d.lam, d.snap_tol)
    eps = d.epsilon
    member = w.value < eps if strict else w.value <= eps
    m1, m2 = f.mean(), float(_second_prefix(f)[-1])
    tag = d.classify((m1, m2))
    hull_check = None
    if f.space is Space.CIRCLE:
        hull_check = tag.tag is not Region.INTERIOR_HULL_COMPONENT
    return Membership(member, w.value, None if member else w.argmax, (m1, m2), str(tag), hull_check)
