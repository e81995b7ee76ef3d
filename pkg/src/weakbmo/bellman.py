"""Closed-form minimal locally concave function on the comb domain.

Boundary data is ``f(t, t^2) = exp(mu t)``.  The function is affine along a
fan of segments issued from each ray tip ``V_m = (lam m, lam^2 m^2 + eps^2)``
to the parabola arc ``u in [u_{m-1}, u_m]``, where ``u_m = lam m + lam/2 - s``
and ``s = sqrt(lam^2/4 + eps^2)``.  The fan boundaries are the extensions of
the hull chords below the tips, so the hull chords themselves are foliation
segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import CombDomain, PlanePoint, Region, as_point


class DomainError(ValueError):
    """Point outside the closure of ``Omega_conv``."""


def mu_critical(lam: float, eps: float) -> float:
    """Supremum of the exponents for which the vertex formula stays positive."""
    if not (lam > 0 and eps > 0):
        raise ValueError("lambda and epsilon must be positive")
    r = math.sqrt(1.0 + 4.0 * eps * eps / (lam * lam))
    # (1 + r)/(r - 1) rewritten as (1 + r)^2/(r^2 - 1) to avoid cancellation for small eps/lam
    ratio = (1.0 + r) ** 2 * lam * lam / (4.0 * eps * eps)
    return math.log(ratio) / lam


def extremal_ratio(lam: float, eps: float) -> float:
    s = math.sqrt(lam * lam / 4 + eps * eps)
    return (s - lam / 2) / (s + lam / 2)


@dataclass(frozen=True)
class FoliationSegment:
    u: float
    vertex_n: int
    weight: float  # barycentric weight of the parabola end (u, u^2)

    def to_json(self):
        return {"u": self.u, "vertex_n": self.vertex_n}


class BellmanEvaluator:
    def __init__(self, domain: CombDomain, mu: float):
        lam, eps = domain.lam, domain.epsilon
        self.domain = domain
        self.mu = float(mu)
        self.s = math.sqrt(lam * lam / 4 + eps * eps)
        self.a = (self.s - lam / 2) / (self.s + lam / 2)
        self.mu_star = mu_critical(lam, eps)
        if not 0 < self.mu:
            raise ValueError(f"mu must be positive, got {mu}")
        if self.mu >= self.mu_star:
            raise ValueError(
                f"mu = {mu!r} is not below the critical exponent {self.mu_star!r}; "
                "the vertex formula has a non-positive denominator")
        denom = lam / 2 + self.s + (lam / 2 - self.s) * math.exp(lam * self.mu)
        self._v0 = lam * math.exp(self.mu * (lam / 2 - self.s)) / denom

    @property
    def lam(self):
        return self.domain.lam

    def f(self, t):
        return np.exp(self.mu * np.asarray(t, dtype=float)) if np.ndim(t) else math.exp(self.mu * t)

    def vertex_value(self, n: int) -> float:
        return self._v0 * math.exp(self.lam * self.mu * n)

    def u_fan(self, n: int) -> float:
        """Right end ``u_n`` of the parabola arc served by tip ``n + 1``."""
        return self.lam * n + self.lam / 2 - self.s

    def fan_index(self, x1: float, x2: float) -> int:
        """Index ``m`` of the tip whose fan contains the point.

        The line ``L_n`` through tips ``n, n+1`` satisfies
        ``L_n(x) = x^2 + eps^2 - w (w + lam)`` with ``w = lam n - x``, so the
        boundary index through the point solves a quadratic in ``w``.
        """
        lam, eps = self.lam, self.domain.epsilon
        h = x2 - x1 * x1
        disc = lam * lam / 4 + eps * eps - h
        w = -lam / 2 + math.sqrt(max(disc, 0.0))
        nstar = (x1 + w) / lam
        m = math.ceil(nstar)
        # on L_m itself: below the tip it bounds fan m, on the chord it is fan m + 1
        if x1 > lam * m:
            m += 1
        return int(m)

    def evaluate(self, p, with_segment: bool = False):
        x1, x2 = as_point(p)
        d = self.domain
        tag = d.classify((x1, x2))
        if tag.tag is Region.OUTSIDE:
            raise DomainError(f"({x1}, {x2}) lies below the parabola")
        if tag.tag is Region.INTERIOR_HULL_COMPONENT:
            raise DomainError(f"({x1}, {x2}) lies inside the hull of the rays")
        if tag.tag is Region.ON_FIXED_BOUNDARY and abs(x2 - x1 * x1) == 0.0:
            val = math.exp(self.mu * x1)
            seg = FoliationSegment(x1, self.fan_index(x1, x2), 1.0)
            return (val, seg) if with_segment else val
        if tag.tag is Region.ON_RAY:
            n = tag.n
            tip = d.vertex(n)
            if abs(x2 - tip.x2) > d._vsnap(x2):
                raise DomainError(f"({x1}, {x2}) lies on the ray above tip {n}")
            seg = FoliationSegment(self.u_fan(n - 1), n, 0.0)
            val = self.vertex_value(n)
            return (val, seg) if with_segment else val
        m = self.fan_index(x1, x2)
        val, seg = self._fan_value(m, x1, x2)
        return (val, seg) if with_segment else val

    def _fan_value(self, m: int, x1: float, x2: float):
        lam, eps = self.lam, self.domain.epsilon
        c = lam * m
        d1 = x1 - c
        d2 = x2 - (c * c + eps * eps)
        # the ray V_m + tau (p - V_m) meets the parabola at tau > 0 solving
        # d1^2 tau^2 + B tau - eps^2 = 0 with B = 2 c d1 - d2; we need 1/tau
        B = 2 * c * d1 - d2
        root = math.sqrt(B * B + 4 * d1 * d1 * eps * eps)
        if B >= 0:
            inv_tau = (B + root) / (2 * eps * eps)
        else:
            inv_tau = 2 * d1 * d1 / (root - B)
        if inv_tau == 0.0:
            return self.vertex_value(m), FoliationSegment(self.u_fan(m - 1), m, 0.0)
        u = c + d1 / inv_tau
        bv = self.vertex_value(m)
        val = bv + inv_tau * (math.exp(self.mu * u) - bv)
        return val, FoliationSegment(u, m, inv_tau)

    def __call__(self, p) -> float:
        return self.evaluate(p)

    def concavity_probe(self, trials: int, seed: int = 0, cells: int = 3, tol: float = 0.0):
        """Most negative midpoint slack over random chords inside ``Omega_conv``.

        Chord endpoints are drawn in the cells ``|x1| <= cells * lam`` below the
        hull; chords crossing the hull interior are redrawn.  Returns the worst
        value of ``B(mid) - (B(p) + B(q))/2 + tol`` (non-negative when concave).
        """
        if trials < 1:
            raise ValueError("trials must be >= 1")
        rng = np.random.default_rng(seed)
        d = self.domain
        R = cells * self.lam
        worst = math.inf
        done = 0
        while done < trials:
            p = self._random_point(rng, R)
            # mix long and short chords
            if rng.random() < 0.5:
                q = self._random_point(rng, R)
            else:
                r = self.lam * 10.0 ** rng.uniform(-4, 0)
                ang = rng.uniform(0, 2 * math.pi)
                q = (p[0] + r * math.cos(ang), p[1] + r * math.sin(ang))
                if q[1] < q[0] ** 2 or q[1] >= d.hull_upper(q[0]):
                    continue
            if d.segment_clearance(p, q) > 0:
                continue
            mid = ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)
            slack = self.evaluate(mid) - 0.5 * (self.evaluate(p) + self.evaluate(q)) + tol
            worst = min(worst, slack)
            done += 1
        return worst

    def _random_point(self, rng, R):
        d = self.domain
        x1 = rng.uniform(-R, R)
        lo, hi = x1 * x1, d.hull_upper(x1)
        # bias toward the two boundaries where the structure is sharpest
        t = rng.beta(0.7, 0.7)
        return (x1, lo + t * (hi - lo) * (1 - 1e-12))


def vertex_value_series(lam: float, eps: float, mu: float) -> float:
    """Closed-form resummation of the extremal series for the tip value at 0."""
    s = math.sqrt(lam * lam / 4 + eps * eps)
    a = (s - lam / 2) / (s + lam / 2)
    q = a * math.exp(mu * lam)
    if q >= 1:
        return math.inf
    return (1 - a) * math.exp(mu * (lam / 2 - s)) / (1 - q)
