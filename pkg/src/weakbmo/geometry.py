"""Exact predicates for the lattice-comb domain and the two-disk domain.

The comb domain lives in the Bellman plane of pairs ``(<phi>, <phi^2>)``.
Points must satisfy ``x2 >= x1**2`` (the closed parabola epigraph) and the
forbidden set consists of the vertical rays ``x1 = lam*n, x2 >= lam^2 n^2 + eps^2``.
The convex hull of the rays is the epigraph of the piecewise-linear function
``g`` interpolating the ray tips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

import numpy as np


@dataclass(frozen=True)
class PlanePoint:
    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ValueError(f"non-finite point ({self.x1}, {self.x2})")

    def __iter__(self):
        yield self.x1
        yield self.x2

    def shifted(self, lam: float, k: int = 1) -> "PlanePoint":
        """Apply the parabolic shift ``x -> (x1 + k lam, x2 + 2 k lam x1 + k^2 lam^2)``."""
        h = k * lam
        return PlanePoint(self.x1 + h, self.x2 + 2.0 * h * self.x1 + h * h)


def as_point(p) -> PlanePoint:
    if isinstance(p, PlanePoint):
        return p
    x1, x2 = p
    return PlanePoint(float(x1), float(x2))


class Region(Enum):
    ON_FIXED_BOUNDARY = "OnFixedBoundary"
    FREE_BELOW_HULL = "FreeBelowHull"
    ON_CHORD = "OnChord"
    ON_RAY = "OnRay"
    INTERIOR_HULL_COMPONENT = "InteriorHullComponent"
    OUTSIDE = "Outside"


@dataclass(frozen=True)
class RegionTag:
    tag: Region
    n: int | None = None

    def __str__(self):
        return self.tag.value if self.n is None else f"{self.tag.value}({self.n})"


@dataclass(frozen=True)
class CombDomain:
    """The comb ``Omega_O = {x2 > x1^2}`` minus rays over the lattice ``lam * Z``."""

    lam: float
    epsilon: float
    snap_tol: float | None = None

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.snap_tol is None:
            object.__setattr__(self, "snap_tol", 1e-9 * max(1.0, self.lam))
        if not (0.0 <= self.snap_tol < self.lam / 4):
            raise ValueError(f"snap_tol must lie in [0, lambda/4), got {self.snap_tol}")

    # -- vertices and hull ------------------------------------------------

    def vertex(self, n: int) -> PlanePoint:
        c = self.lam * n
        return PlanePoint(c, c * c + self.epsilon**2)

    def chord_line(self, n: int) -> tuple[float, float]:
        """Slope and intercept of the line ``L_n`` through vertices ``n`` and ``n+1``."""
        lam = self.lam
        return lam * (2 * n + 1), self.epsilon**2 - lam * lam * n * (n + 1)

    def hull_upper(self, x1):
        """Lower boundary ``g`` of the convex hull of the rays (vectorised)."""
        lam = self.lam
        x = np.asarray(x1, dtype=float)
        n = np.floor(x / lam)
        # g = max of the two lines adjacent to the cell, which guards the
        # rounding of floor() at lattice points
        out = np.maximum(self._line_value(n, x), self._line_value(n - 1, x))
        out = np.maximum(out, self._line_value(n + 1, x))
        return float(out) if out.ndim == 0 else out

    def _line_value(self, n, x):
        lam = self.lam
        return lam * (2 * n + 1) * x + self.epsilon**2 - lam * lam * n * (n + 1)

    def _vsnap(self, x2: float) -> float:
        return self.snap_tol * max(1.0, abs(x2))

    # -- classification ---------------------------------------------------

    def classify(self, p) -> RegionTag:
        x1, x2 = as_point(p)
        lam, eps2 = self.lam, self.epsilon**2
        vsnap = self._vsnap(x2)
        par = x1 * x1
        if x2 < par - vsnap:
            return RegionTag(Region.OUTSIDE)
        if abs(x2 - par) <= vsnap:
            return RegionTag(Region.ON_FIXED_BOUNDARY)
        n_near = round(x1 / lam)
        if abs(x1 - lam * n_near) <= self.snap_tol and x2 >= lam * lam * n_near * n_near + eps2 - vsnap:
            return RegionTag(Region.ON_RAY, int(n_near))
        gx = self.hull_upper(x1)
        n_cell = int(math.floor(x1 / lam))
        if abs(x2 - gx) <= vsnap:
            return RegionTag(Region.ON_CHORD, n_cell)
        if x2 > gx:
            return RegionTag(Region.INTERIOR_HULL_COMPONENT, n_cell)
        return RegionTag(Region.FREE_BELOW_HULL)

    def in_forbidden(self, p) -> bool:
        """Membership in the closed ray set ``Omega_I`` (exact, no snapping)."""
        x1, x2 = as_point(p)
        n = round(x1 / self.lam)
        return x1 == self.lam * n and x2 >= (self.lam * n) ** 2 + self.epsilon**2

    def in_hull_interior(self, p) -> bool:
        x1, x2 = as_point(p)
        return x2 > self.hull_upper(x1) + self._vsnap(x2)

    # -- segments ---------------------------------------------------------

    def segment_clearance(self, p, q) -> float:
        """``max_t x2(t) - g(x1(t))`` along the segment ``[p, q]``.

        Non-positive iff the segment misses the interior of the hull.  The
        integrand is concave in ``t``, so its maximum sits at the lattice
        vertex where the slope of ``g`` crosses the slope of the segment,
        clamped to the segment.
        """
        p1, p2 = as_point(p)
        q1, q2 = as_point(q)
        if p1 > q1:
            p1, p2, q1, q2 = q1, q2, p1, p2
        best = max(p2 - self.hull_upper(p1), q2 - self.hull_upper(q1))
        if q1 > p1:
            k = (q2 - p2) / (q1 - p1)
            # vertex lam*n where the chord slopes lam(2n-1), lam(2n+1) bracket k
            n = math.ceil((k / self.lam - 1.0) / 2.0)
            for m in (n - 1, n, n + 1):
                c = self.lam * m
                if p1 < c < q1:
                    t = (c - p1) / (q1 - p1)
                    x2 = p2 + t * (q2 - p2)
                    best = max(best, x2 - (c * c + self.epsilon**2))
        return float(best)

    def segment_clearance_many(self, P1, P2, Q1, Q2):
        """Vectorised :meth:`segment_clearance` over arrays of endpoints."""
        P1, P2, Q1, Q2 = (np.asarray(a, dtype=float) for a in (P1, P2, Q1, Q2))
        swap = P1 > Q1
        a1 = np.where(swap, Q1, P1)
        a2 = np.where(swap, Q2, P2)
        b1 = np.where(swap, P1, Q1)
        b2 = np.where(swap, P2, Q2)
        best = np.maximum(a2 - self.hull_upper(a1), b2 - self.hull_upper(b1))
        dx = b1 - a1
        ok = dx > 0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            k = np.where(ok, (b2 - a2) / np.where(ok, dx, 1.0), 0.0)
            n = np.ceil((k / self.lam - 1.0) / 2.0)
            for shift in (-1, 0, 1):
                c = self.lam * (n + shift)
                inside = ok & (a1 < c) & (c < b1)
                t = np.where(inside, (c - a1) / np.where(ok, dx, 1.0), 0.0)
                val = a2 + t * (b2 - a2) - (c * c + self.epsilon**2)
                best = np.where(inside, np.maximum(best, val), best)
        return best

    def to_json(self) -> dict[str, Any]:
        return {"kind": "comb", "lambda": self.lam, "epsilon": self.epsilon}


@dataclass(frozen=True)
class TwoDiskDomain:
    """Unit disk with two forbidden disks; its hull is a stadium."""

    outer_radius: float = 1.0
    centers: tuple[tuple[float, float], tuple[float, float]] = ((-0.5, 0.0), (0.5, 0.0))
    obstacle_radius: float = 0.4

    def __post_init__(self):
        (c1x, c1y), (c2x, c2y) = self.centers
        r = self.obstacle_radius
        if math.hypot(c1x - c2x, c1y - c2y) <= 2 * r:
            raise ValueError("obstacles must be disjoint")
        for cx, cy in self.centers:
            if math.hypot(cx, cy) + r >= self.outer_radius:
                raise ValueError("obstacles must lie strictly inside the outer disk")

    @property
    def half_length(self) -> float:
        (c1x, _), (c2x, _) = self.centers
        return abs(c2x - c1x) / 2

    def stadium_distance(self, x1, x2):
        """Signed-free distance from points to the core segment of the stadium."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        h = self.half_length
        cx = np.clip(x1, -h, h)
        return np.hypot(x1 - cx, x2)

    def in_hull(self, x1, x2):
        return self.stadium_distance(x1, x2) <= self.obstacle_radius

    def in_obstacles(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        r = self.obstacle_radius
        inside = np.zeros(np.broadcast(x1, x2).shape, dtype=bool)
        for cx, cy in self.centers:
            inside |= np.hypot(x1 - cx, x2 - cy) <= r
        return inside

    def hull_vertical_extent(self, x1: float) -> tuple[float, float] | None:
        d = abs(x1) - self.half_length
        r = self.obstacle_radius
        if d <= 0:
            return (-r, r)
        if d >= r:
            return None
        y = math.sqrt(r * r - d * d)
        return (-y, y)

    def segment_hull_distance(self, P1, P2, Q1, Q2):
        """Distance between segments ``[P, Q]`` and the stadium core (vectorised)."""
        h = self.half_length
        P1, P2, Q1, Q2 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (P1, P2, Q1, Q2)))
        d = np.minimum(self.stadium_distance(P1, P2), self.stadium_distance(Q1, Q2))
        # core endpoints to the segment
        dx, dy = Q1 - P1, Q2 - P2
        L2 = dx * dx + dy * dy
        for ex in (-h, h):
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(L2 > 0, ((ex - P1) * dx + (0.0 - P2) * dy) / np.where(L2 > 0, L2, 1.0), 0.0)
            t = np.clip(t, 0.0, 1.0)
            d = np.minimum(d, np.hypot(P1 + t * dx - ex, P2 + t * dy))
        # proper crossing of the x1 axis inside the core
        crosses = (P2 * Q2 < 0) | ((P2 == 0) & (Q2 == 0))
        with np.errstate(divide="ignore", invalid="ignore"):
            tc = np.where(dy != 0, -P2 / np.where(dy != 0, dy, 1.0), 0.0)
        xc = P1 + tc * dx
        d = np.where(crosses & (np.abs(xc) <= h), 0.0, d)
        return d

    def to_json(self) -> dict[str, Any]:
        return {"kind": "two-disk"}


Domain = Union[CombDomain, TwoDiskDomain]


def domain_from_json(obj: dict[str, Any]) -> Domain:
    kind = obj.get("kind")
    if kind == "comb":
        return CombDomain(float(obj["lambda"]), float(obj["epsilon"]))
    if kind == "two-disk":
        return TwoDiskDomain()
    raise ValueError(f"kind: unknown domain kind {kind!r}")


# -- axioms ------------------------------------------------------------------

AXIOM_NAMES = {
    1: "hull boundary contains no rays",
    2: "closure of the hull lies inside Omega_O",
    3: "congruent maximal inscribed cones, hull interior non-empty",
    4: "locally finite union of connectivity components",
    5: "supporting line containing each free boundary E_j",
}


@dataclass
class AxiomResult:
    index: int
    name: str
    passed: bool
    witness: dict[str, Any] = field(default_factory=dict)


@dataclass
class AxiomReport:
    domain: dict[str, Any]
    results: list[AxiomResult]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failed(self) -> list[int]:
        return [r.index for r in self.results if not r.passed]

    def to_json(self) -> dict[str, Any]:
        return {
            "domain": self.domain,
            "all_passed": self.all_passed,
            "failed": self.failed,
            "axioms": [
                {"index": r.index, "name": r.name, "passed": r.passed, "witness": r.witness}
                for r in self.results
            ],
        }


def check_axioms(domain: Domain, window: int = 3) -> AxiomReport:
    """Certify conditions (1)-(5) for one of the two shipped domains.

    ``window`` bounds the lattice indices sampled for the comb witnesses; the
    comb is invariant under the parabolic shift, so a few cells suffice.
    """
    if isinstance(domain, CombDomain):
        results = _comb_axioms(domain, window)
    elif isinstance(domain, TwoDiskDomain):
        results = _two_disk_axioms(domain)
    else:
        raise TypeError(f"unsupported domain {type(domain).__name__}")
    return AxiomReport(domain.to_json(), results)


def _comb_axioms(d: CombDomain, window: int) -> list[AxiomResult]:
    lam, eps = d.lam, d.epsilon
    ns = range(-window, window + 1)
    slopes = [d.chord_line(n)[0] for n in ns]
    # (1) boundary is the graph of g: finite chords with strictly increasing slopes
    jumps = np.diff(slopes)
    chord_len = math.hypot(lam, max(abs(s) for s in slopes) * lam)
    ax1 = AxiomResult(1, AXIOM_NAMES[1], bool(np.all(jumps > 0)),
                      {"slope_jump": float(jumps.min()), "max_chord_length": chord_len})
    # (2) g - x1^2 >= eps^2 > 0, minimum at the vertices
    xs = np.linspace(-window * lam, window * lam, 20 * window + 1)
    gap = float(np.min(d.hull_upper(xs) - xs * xs))
    ax2 = AxiomResult(2, AXIOM_NAMES[2], gap >= eps * eps * (1 - 1e-12),
                      {"min_gap": gap, "eps_squared": eps * eps})
    # (3) both sets contain exactly the vertical cone {(0, t): t >= 0}
    probe = PlanePoint(lam / 2, d.hull_upper(lam / 2) + 1.0)
    ax3 = AxiomResult(3, AXIOM_NAMES[3], d.in_hull_interior(probe),
                      {"cone_direction": [0.0, 1.0], "interior_point": [probe.x1, probe.x2]})
    # (4) one component omega_n per lattice cell
    R = window * lam
    ax4 = AxiomResult(4, AXIOM_NAMES[4], True,
                      {"box_half_width": R, "components_meeting_box": int(2 * math.ceil(R / lam) + 2)})
    # (5) L_n supports the hull and contains E_n = open chord (vertex n, vertex n+1)
    worst = -math.inf
    for n in ns:
        k, b = d.chord_line(n)
        for m in range(-window - 2, window + 3):
            v = d.vertex(m)
            worst = max(worst, k * v.x1 + b - v.x2)  # <= 0: vertex m on or above L_n
        for v in (d.vertex(n), d.vertex(n + 1)):
            if abs(k * v.x1 + b - v.x2) > 1e-12 * max(1.0, v.x2):
                worst = math.inf
    ax5 = AxiomResult(5, AXIOM_NAMES[5], worst <= 1e-12,
                      {"chords_checked": len(ns), "max_vertex_excess_over_line": worst})
    return [ax1, ax2, ax3, ax4, ax5]


def _two_disk_axioms(d: TwoDiskDomain) -> list[AxiomResult]:
    r, h = d.obstacle_radius, d.half_length
    ax1 = AxiomResult(1, AXIOM_NAMES[1], True, {"hull": "stadium", "diameter": 2 * (h + r)})
    far = h + r
    ax2 = AxiomResult(2, AXIOM_NAMES[2], far < d.outer_radius,
                      {"max_hull_radius": far, "outer_radius": d.outer_radius})
    ax3 = AxiomResult(3, AXIOM_NAMES[3], True,
                      {"cone": "trivial (both sets bounded)", "interior_point": [0.0, 0.0]})
    ax4 = AxiomResult(4, AXIOM_NAMES[4], True, {"components": 1})
    # E = two open tangent segments x2 = +-r; the supporting line at each is unique
    top, bottom = (0.0, r), (0.0, -r)
    ax5 = AxiomResult(5, AXIOM_NAMES[5], False, {
        "points": [list(top), list(bottom)],
        "supporting_lines": ["x2 = %r" % r, "x2 = %r" % -r],
        "reason": "the only supporting lines at the two points are distinct",
    })
    return [ax1, ax2, ax3, ax4, ax5]
