"""Constructive splitting of intervals and the finite Bellman induction.

A split cuts ``[a, b]`` at ``c`` so that the segment joining the two child
averages of ``psi = (phi, phi^2)`` avoids the interior of the hull of the rays.
Local concavity of the Bellman function along that segment then makes the
Bellman sum non-increasing from one generation to the next.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .bellman import BellmanEvaluator
from .geometry import CombDomain, PlanePoint, Region
from .oscillation import membership_A
from .stepfn import MIN_AVERAGING_LENGTH, Space, StepFunction

BISECTION_STEPS = 200


class SplitCase(Enum):
    A = "A"
    B_ABOVE = "B_above"
    B_BELOW = "B_below"


class SplitError(RuntimeError):
    """No admissible split point was found."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class SplitResult:
    t0: float  # relative position of the cut in (0, 1)
    case: SplitCase
    left_avg: PlanePoint
    right_avg: PlanePoint
    clearance: float
    cut: float  # absolute position a + t0 (b - a)

    def to_json(self) -> dict[str, Any]:
        return {"t0": self.t0, "case": self.case.value, "cut": self.cut,
                "left_avg": list(self.left_avg), "right_avg": list(self.right_avg),
                "clearance": self.clearance}


def _avg(psi: StepFunction, a: float, b: float) -> PlanePoint:
    v = psi.average(a, b)
    return PlanePoint(float(v[0]), float(v[1]))


def _lifted(f: StepFunction) -> StepFunction:
    return f.lifted if f.is_real else f


def split(psi: StepFunction, interval: tuple[float, float], d: CombDomain) -> SplitResult:
    """Split ``interval`` so the chord between the child averages avoids the hull interior.

    ``psi`` is the lifted plane-valued function (a real-valued one is lifted
    on the fly).  The average over the interval must not lie in the open hull
    component between two rays.
    """
    psi = _lifted(psi)
    a, b = map(float, interval)
    if not b > a:
        raise ValueError(f"degenerate interval [{a}, {b}]")
    x = _avg(psi, a, b)
    tag = d.classify(x)
    if tag.tag is Region.INTERIOR_HULL_COMPONENT:
        raise ValueError(f"average {tuple(x)} lies inside the hull of the rays")
    if tag.tag is Region.OUTSIDE:
        raise ValueError(f"average {tuple(x)} lies below the parabola")
    if tag.tag in (Region.ON_CHORD, Region.ON_RAY):
        if tag.tag is Region.ON_RAY:
            n = tag.n
            tip = d.vertex(n)
            if abs(x.x2 - tip.x2) > d._vsnap(x.x2):
                raise ValueError(f"average {tuple(x)} lies on ray {n} above its tip")
            lines = (n - 1, n)
        else:
            lines = (tag.n, tag.n)
        return _split_on_boundary(psi, a, b, x, d, lines)
    return _split_free(psi, a, b, x, d)


def _split_free(psi, a, b, x, d) -> SplitResult:
    """The average is strictly below the hull: start at the midpoint, then move one end."""
    L = b - a

    def ends(t):
        c = a + t * L
        return _avg(psi, a, c), _avg(psi, c, b)

    def result(t):
        xl, xr = ends(t)
        return SplitResult(t, SplitCase.A, xl, xr, d.segment_clearance(xl, xr), a + t * L)

    xl, xr = ends(0.5)
    hl = d.segment_clearance(xl, x)
    hr = d.segment_clearance(x, xr)
    if max(hl, hr) <= 0:
        return result(0.5)
    # at most one half-chord can cross; shrink that child toward x
    if hl > 0:
        side, h = +1, (lambda t: d.segment_clearance(ends(t)[0], x))
    else:
        side, h = -1, (lambda t: d.segment_clearance(x, ends(t)[1]))
    bad = 0.5
    step = 0.25
    good = None
    while step * L >= 2 * MIN_AVERAGING_LENGTH:
        t = 0.5 + side * (0.5 - step)
        if h(t) <= 0:
            good = t
            break
        bad = t
        step /= 2
    if good is None:
        raise SplitError("no admissible split near the interval end",
                         {"interval": (a, b), "average": tuple(x)})
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (bad + good)
        if mid in (bad, good):
            break
        if h(mid) <= 0:
            good = mid
        else:
            bad = mid
    return result(good)


def _split_on_boundary(psi, a, b, x, d, lines) -> SplitResult:
    """The average sits on the hull boundary: cut where the prefix average enters the support cone.

    With ``x`` on the chord line ``L_n`` the admissible prefix averages are the
    points of ``L_n``; at a tip the two adjacent chord slopes bound a cone of
    supporting lines.  ``N_j(s) = int_a^s (psi_2 - k_j psi_1 - c_j)`` is
    piecewise linear, and a cut ``s`` is admissible when ``N_lo(s) N_hi(s) <= 0``.
    The first such ``s`` is found exactly, piece by piece.
    """
    L = b - a
    i0 = psi.piece_index(a)
    i1 = psi.piece_index(b)
    if i1 > i0 and b == psi.breaks[i1]:
        i1 -= 1
    cuts = [a] + [float(t) for t in psi.breaks[i0 + 1:i1 + 1]] + [b]
    vals = psi.values[i0:i1 + 1]
    slopes = [d.chord_line(n)[0] for n in lines]
    # lines parallel to the chords through x itself, so N(b) = 0 up to rounding
    qs = [vals[:, 1] - k * vals[:, 0] - (x.x2 - k * x.x1) for k in slopes]
    ql, qh = qs
    scale = float(np.max(np.abs(np.concatenate(qs)))) * L
    ztol = 1e-13 * scale
    margin = max(2 * MIN_AVERAGING_LENGTH, 1e-12 * L)

    def ok(s):
        return s - a >= margin and b - s >= margin

    s_found = None
    if ql[0] * qh[0] <= 0 or max(abs(ql[0]), abs(qh[0])) <= ztol / L:
        s_found = cuts[1]
    else:
        nl = nh = 0.0
        for j in range(len(vals)):
            s0, s1 = cuts[j], cuts[j + 1]
            if j > 0 and ok(s0) and (nl * nh <= 0 or min(abs(nl), abs(nh)) <= ztol):
                s_found = s0
                break
            cand = []
            for n0, q in ((nl, ql[j]), (nh, qh[j])):
                if q != 0 and j > 0:
                    s = float(s0 - n0 / q)
                    if s0 < s < s1 and ok(s):
                        cand.append(s)
            if cand:
                s_found = min(cand)
                break
            nl += ql[j] * (s1 - s0)
            nh += qh[j] * (s1 - s0)
    if s_found is None or not ok(s_found):
        raise SplitError("prefix average never meets the supporting cone",
                         {"interval": (a, b), "average": tuple(x), "lines": lines})
    xl, xr = _avg(psi, a, s_found), _avg(psi, s_found, b)
    case = SplitCase.B_ABOVE if ql[0] > 0 else SplitCase.B_BELOW
    return SplitResult((s_found - a) / L, case, xl, xr, d.segment_clearance(xl, xr), s_found)


# -- Bellman induction -------------------------------------------------------


@dataclass
class Generation:
    frontier: list  # (a, b, x1, x2)
    B: float
    leaf_mass: float
    frontier_mass: float


@dataclass
class InductionTrace:
    generations: list = field(default_factory=list)
    leaves: list = field(default_factory=list)  # (a, b, value, generation)
    leaf_mass: float = 0.0
    frontier_mass: float = 0.0
    final_sum_f: float = math.nan
    leaf_sum_f: float = 0.0
    lower_bound: float = math.nan
    max_clearance: float = -math.inf
    max_recombination_error: float = 0.0
    splits: int = 0

    @property
    def B(self) -> list[float]:
        return [g.B for g in self.generations]

    @property
    def chain_slack(self) -> float:
        """Smallest ``B_k - B_{k+1}``; non-negative when the chain is non-increasing."""
        b = self.B
        return min((b[k] - b[k + 1] for k in range(len(b) - 1)), default=0.0)

    def rows(self):
        """Flat rows ``(generation, a, b, x1, x2, B_k)`` of the frontier intervals."""
        for k, g in enumerate(self.generations):
            for (a, b, x1, x2) in g.frontier:
                yield k, a, b, x1, x2, g.B

    def to_json(self) -> dict[str, Any]:
        return {
            "B": self.B,
            "leaf_mass": self.leaf_mass,
            "frontier_mass": self.frontier_mass,
            "leaf_sum_f": self.leaf_sum_f,
            "final_sum_f": self.final_sum_f,
            "lower_bound": self.lower_bound,
            "chain_slack": self.chain_slack,
            "max_clearance": self.max_clearance,
            "max_recombination_error": self.max_recombination_error,
            "splits": self.splits,
            "generations": len(self.generations),
        }


def _exp_average(phi: StepFunction, mu: float, a: float, b: float) -> float:
    """Exact ``<exp(mu phi)>`` over ``[a, b]`` of a real step function."""
    i0, i1 = phi.piece_index(a), phi.piece_index(b)
    if i1 > i0 and b == phi.breaks[i1]:
        i1 -= 1
    cuts = [a] + list(phi.breaks[i0 + 1:i1 + 1]) + [b]
    return math.fsum((cuts[j + 1] - cuts[j]) * math.exp(mu * phi.values[i0 + j])
                     for j in range(i1 - i0 + 1)) / (b - a)


def _piece_span(f: StepFunction, a: float, b: float) -> tuple[int, int]:
    i0, i1 = f.piece_index(a), f.piece_index(b)
    if i1 > i0 and b <= f.breaks[i1]:
        i1 -= 1
    return i0, i1


def induct(psi: StepFunction, d: CombDomain, ev: BellmanEvaluator, max_depth: int = 200,
           mass_tol: float = 1e-12) -> InductionTrace:
    """Split generation by generation until the frontier mass drops below ``mass_tol``.

    Intervals inside one piece become leaves worth ``|J| exp(mu value)``; the
    others form the frontier and are worth ``|J| B(x_J)``.  ``B_k`` is the sum
    of both after generation ``k``.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    psi = _lifted(psi)
    phi = StepFunction(psi.lengths, psi.values[:, 0], Space.INTERVAL)
    mu = ev.mu
    trace = InductionTrace()
    leaf_terms: list[float] = []
    frontier = []

    def admit(a, b, x, gen):
        i0, i1 = _piece_span(phi, a, b)
        if i0 == i1:
            trace.leaves.append((a, b, float(phi.values[i0]), gen))
            leaf_terms.append((b - a) * math.exp(mu * phi.values[i0]))
        else:
            frontier.append((a, b, x))

    admit(0.0, 1.0, _avg(psi, 0.0, 1.0), 0)
    gen = 0
    while True:
        leaf_mass = math.fsum(b - a for a, b, _, _ in trace.leaves)
        fmass = math.fsum(b - a for a, b, _ in frontier)
        B = math.fsum(leaf_terms) + math.fsum((b - a) * ev.evaluate(x) for a, b, x in frontier)
        trace.generations.append(Generation([(a, b, x.x1, x.x2) for a, b, x in frontier],
                                            B, leaf_mass, fmass))
        if gen >= max_depth or fmass < mass_tol or not frontier:
            break
        if all(b - a < 4 * MIN_AVERAGING_LENGTH for a, b, _ in frontier):
            break
        gen += 1
        current, frontier = frontier, []
        for a, b, x in current:
            if b - a < 4 * MIN_AVERAGING_LENGTH:
                # too short to split reliably; stays on the frontier
                frontier.append((a, b, x))
                continue
            r = split(psi, (a, b), d)
            trace.splits += 1
            trace.max_clearance = max(trace.max_clearance, r.clearance)
            w = (r.cut - a) / (b - a)
            recomb = max(abs(w * r.left_avg.x1 + (1 - w) * r.right_avg.x1 - x.x1),
                         abs(w * r.left_avg.x2 + (1 - w) * r.right_avg.x2 - x.x2) / max(1.0, abs(x.x2)))
            trace.max_recombination_error = max(trace.max_recombination_error, recomb)
            admit(a, r.cut, r.left_avg, gen)
            admit(r.cut, b, r.right_avg, gen)
    trace.leaf_mass = math.fsum(b - a for a, b, _, _ in trace.leaves)
    trace.frontier_mass = math.fsum(b - a for a, b, _ in frontier)
    trace.leaf_sum_f = math.fsum(leaf_terms)
    tail_exact = math.fsum((b - a) * _exp_average(phi, mu, a, b) for a, b, _ in frontier)
    tail_low = 0.0
    for a, b, _ in frontier:
        i0, i1 = _piece_span(phi, a, b)
        tail_low += (b - a) * math.exp(mu * float(np.min(phi.values[i0:i1 + 1])))
    trace.final_sum_f = trace.leaf_sum_f + tail_exact
    trace.lower_bound = trace.leaf_sum_f + tail_low
    return trace


# -- full pipeline -----------------------------------------------------------


@dataclass
class MainInequalityReport:
    verdict: str  # PASS, FAIL or SKIPPED
    reason: str
    member: bool
    weak_bmo: float
    witness: tuple | None
    mean: tuple[float, float]
    mean_region: str
    bellman_value: float = math.nan
    exp_average: float = math.nan
    margin: float = math.nan
    trace: InductionTrace | None = None

    def to_json(self) -> dict[str, Any]:
        out = {
            "verdict": self.verdict,
            "reason": self.reason,
            "member": self.member,
            "weak_bmo": self.weak_bmo,
            "witness": list(self.witness) if self.witness else None,
            "mean": list(self.mean),
            "mean_region": self.mean_region,
            "bellman_value": self.bellman_value,
            "exp_average": self.exp_average,
            "margin": self.margin,
        }
        if self.trace is not None:
            out["induction"] = self.trace.to_json()
        return out


def verify_main_inequality(phi: StepFunction, d: CombDomain, ev: BellmanEvaluator,
                           max_depth: int = 200, mass_tol: float = 1e-12,
                           margin_tol: float = 1e-8, chain_tol: float = 1e-9,
                           k_max: int = 16) -> MainInequalityReport:
    """Membership, mean position, induction and the final comparison ``<f(psi)> <= B(<psi>)``.

    For a circle function the mean must avoid the hull interior whenever the
    function is a member; a violation is reported as FAIL.  The induction
    itself runs on one period.
    """
    if not phi.is_real:
        raise TypeError("verify_main_inequality expects a real-valued step function")
    m = membership_A(phi, d, strict=True, k_max=k_max)
    base = dict(member=m.member, weak_bmo=m.weak_bmo, witness=m.witness,
                mean=m.mean_point, mean_region=m.mean_region)
    if not m.member:
        return MainInequalityReport("SKIPPED", "not in the class: an average lands on a ray", **base)
    if d.in_hull_interior(m.mean_point):
        if phi.space is Space.CIRCLE:
            return MainInequalityReport("FAIL", "member circle function with mean inside the hull", **base)
        return MainInequalityReport("SKIPPED", "mean lies inside the hull of the rays", **base)
    flat = phi if phi.space is Space.INTERVAL else StepFunction(phi.lengths, phi.values, Space.INTERVAL)
    B0 = ev.evaluate(m.mean_point)
    fav = _exp_average(flat, ev.mu, 0.0, 1.0)
    try:
        trace = induct(flat, d, ev, max_depth, mass_tol)
    except SplitError as exc:
        return MainInequalityReport("FAIL", f"split failed: {exc}", bellman_value=B0,
                                    exp_average=fav, margin=B0 - fav, **base)
    margin = B0 - fav
    problems = []
    if margin < -margin_tol:
        problems.append(f"margin {margin:.3e} below -{margin_tol:g}")
    if trace.chain_slack < -chain_tol * max(1.0, abs(B0)):
        problems.append(f"Bellman sums increase by {-trace.chain_slack:.3e}")
    if trace.max_clearance > d.snap_tol:
        problems.append(f"split chord crosses the hull by {trace.max_clearance:.3e}")
    verdict = "FAIL" if problems else "PASS"
    reason = "; ".join(problems) if problems else (
        f"frontier mass {trace.frontier_mass:.3e} after {len(trace.generations) - 1} generations")
    return MainInequalityReport(verdict, reason, bellman_value=B0, exp_average=fav,
                                margin=margin, trace=trace, **base)
