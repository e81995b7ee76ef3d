"""Grid computation of minimal locally concave functions.

The solver iterates the chord operator

    G(p) <- max(G(p), max_{chords [p - j d, p + k d] in the domain} (k G(p - j d) + j G(p + k d)) / (j + k))

from a low initial guess.  Every update is a convex combination along a chord
that lies inside the domain, so the iterates increase monotonically and stay
below any locally concave function with the same Dirichlet data on the grid;
the limit is the discrete minimal locally concave function.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path
from typing import Callable

import numpy as np

from .bellman import BellmanEvaluator
from .geometry import CombDomain, PlanePoint, TwoDiskDomain, as_point

FREE, DIRICHLET, OUTSIDE = 0, 1, 2
TAG_NAMES = {FREE: "Free", DIRICHLET: "Dirichlet", OUTSIDE: "Outside"}


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} sweeps)")
        self.residual = residual
        self.iterations = iterations


@dataclass
class SolverDomain:
    """Rectangle window, an inside predicate, Dirichlet tagging and chord test.

    ``inside(X, Y)`` marks grid nodes belonging to the domain, ``dirichlet(X, Y,
    inside_mask, hx, hy)`` marks the nodes that carry boundary data
    ``data(X, Y)``, and ``segment_ok(P1, P2, Q1, Q2)`` says whether a segment with
    in-domain endpoints stays in the domain.
    """

    window: tuple[float, float, float, float]
    inside: Callable
    dirichlet: Callable
    data: Callable
    segment_ok: Callable
    name: str = "custom"
    meta: dict = field(default_factory=dict)


@dataclass
class ScalarField:
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray  # shape (ny + 1, nx + 1), row index = x2
    mask: np.ndarray
    iterations: int = 0
    residual: float = math.nan
    history: list = field(default_factory=list)

    @property
    def hx(self):
        return self.x[1] - self.x[0]

    @property
    def hy(self):
        return self.y[1] - self.y[0]

    def node(self, i: int, j: int) -> tuple[float, float]:
        return float(self.x[j]), float(self.y[i])

    def query(self, p) -> float:
        """Bilinear interpolation from the in-domain corners of the enclosing cell."""
        x1, x2 = as_point(p)
        x, y = self.x, self.y
        if not (x[0] <= x1 <= x[-1] and y[0] <= x2 <= y[-1]):
            raise ValueError(f"({x1}, {x2}) outside the window")
        fx = (x1 - x[0]) / self.hx
        fy = (x2 - y[0]) / self.hy
        j = min(int(math.floor(fx)), len(x) - 2)
        i = min(int(math.floor(fy)), len(y) - 2)
        tx, ty = fx - j, fy - i
        corners = [(i, j, (1 - tx) * (1 - ty)), (i, j + 1, tx * (1 - ty)),
                   (i + 1, j, (1 - tx) * ty), (i + 1, j + 1, tx * ty)]
        for ci, cj, w in corners:
            if w == 1.0:
                if self.mask[ci, cj] == OUTSIDE:
                    raise ValueError(f"({x1}, {x2}) is not a domain node")
                return float(self.values[ci, cj])
        num = den = 0.0
        for ci, cj, w in corners:
            if self.mask[ci, cj] != OUTSIDE and w > 0:
                num += w * self.values[ci, cj]
                den += w
        if den == 0.0:
            raise ValueError(f"({x1}, {x2}) has no in-domain grid corners")
        return float(num / den)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2", "tag", "value"])
            for i, yy in enumerate(self.y):
                for j, xx in enumerate(self.x):
                    tag = self.mask[i, j]
                    val = self.values[i, j] if tag != OUTSIDE else math.nan
                    w.writerow([repr(float(xx)), repr(float(yy)), TAG_NAMES[int(tag)], repr(float(val))])


# -- stencil -----------------------------------------------------------------


def primitive_directions(radius: int = 3) -> list[tuple[int, int]]:
    """Primitive lattice directions with max-norm <= radius, one per line (16 for radius 3)."""
    out = []
    for a in range(0, radius + 1):
        for b in range(-radius, radius + 1):
            if (a, b) == (0, 0) or gcd(a, abs(b)) != 1:
                continue
            if a == 0 and b < 0:
                continue
            out.append((a, b))
    return out


def _reach_steps(reach: int, dmax: int) -> list[int]:
    """Step multiples used for chord ends: all small ones, then roughly geometric."""
    top = reach // dmax
    steps = set(range(1, min(top, 8) + 1))
    k = 8
    while k < top:
        k = int(math.ceil(k * 1.25))
        steps.add(min(k, top))
    return sorted(steps)


def default_radius(cells: int) -> int:
    """Direction radius used for a grid with ``cells`` cells per axis."""
    if cells <= 64:
        return 3
    return 5 if cells <= 128 else 8


# -- solver ------------------------------------------------------------------


def solve(dom: SolverDomain, grid: tuple[int, int] | int = 128, tol: float = 1e-7,
          max_iters: int = 5000, radius: int | None = None, reach: int | None = None,
          init: float | None = None, asymmetric: bool = False) -> ScalarField:
    """Discrete minimal locally concave function on ``dom``.

    ``grid`` is the number of cells per axis.  Chords run along the primitive
    directions of max-norm ``<= radius`` with ends up to ``reach`` cells away.
    By default both grow with the grid (radius 3, 5, 8 at 64, 128, 256 cells)
    so the direction set refines together with the mesh.  Symmetric chords
    suffice for the minimal function; ``asymmetric=True`` adds the rest.  Raises
    :class:`ConvergenceError` when the sup-norm update is still ``>= tol``
    after ``max_iters`` sweeps.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    nx, ny = (grid, grid) if isinstance(grid, int) else grid
    if radius is None:
        radius = default_radius(max(nx, ny))
    if reach is None:
        reach = max(32, max(nx, ny) // 4)
    x0, x1, y0, y1 = dom.window
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    X, Y = np.meshgrid(xs, ys)
    inside = np.asarray(dom.inside(X, Y), dtype=bool)
    dir_mask = np.asarray(dom.dirichlet(X, Y, inside, hx, hy), dtype=bool) & inside
    mask = np.full(X.shape, OUTSIDE, dtype=np.int8)
    mask[inside] = FREE
    mask[dir_mask] = DIRICHLET
    free = mask == FREE
    bdata = np.where(dir_mask, dom.data(np.where(dir_mask, X, 0.0), np.where(dir_mask, Y, 0.0)), 0.0)
    if not dir_mask.any():
        raise ValueError("no Dirichlet nodes on the grid")
    low = float(bdata[dir_mask].min()) if init is None else init
    V = np.where(dir_mask, bdata, np.where(free, low, np.nan))

    pad = reach
    H, W = X.shape
    entries = _build_stencil(dom, X, Y, inside, free, radius, reach, pad, asymmetric)
    P = np.full((H + 2 * pad, W + 2 * pad), np.nan)
    core = (slice(pad, pad + H), slice(pad, pad + W))
    P[core] = V

    history = []
    residual = math.inf
    it = 0
    while it < max_iters:
        it += 1
        # in-place sweep over the stencil entries in a fixed order
        before = P[core].copy()
        for (si, sj, ti, tj, wa, wb, ok) in entries:
            A = P[pad + si:pad + si + H, pad + sj:pad + sj + W]
            B = P[pad + ti:pad + ti + H, pad + tj:pad + tj + W]
            cand = wa * A + wb * B
            cur = P[core]
            upd = ok & (cand > cur)
            if upd.any():
                cur[upd] = cand[upd]
        diff = P[core] - before
        residual = float(np.nanmax(np.abs(diff))) if free.any() else 0.0
        history.append(residual)
        if residual < tol:
            break
    V = P[core].copy()
    field_ = ScalarField(xs, ys, V, mask, it, residual, history)
    if residual >= tol:
        raise ConvergenceError("chord iteration did not converge", residual, it)
    return field_


def _build_stencil(dom, X, Y, inside, free, radius, reach, pad, asymmetric=True):
    H, W = X.shape
    Xp = np.full((H + 2 * pad, W + 2 * pad), np.nan)
    Yp = np.full_like(Xp, np.nan)
    Ip = np.zeros_like(Xp, dtype=bool)
    Xp[pad:pad + H, pad:pad + W] = X
    Yp[pad:pad + H, pad:pad + W] = Y
    Ip[pad:pad + H, pad:pad + W] = inside

    def shifted(A, di, dj):
        return A[pad + di:pad + di + H, pad + dj:pad + dj + W]

    entries = []
    for (a, b) in primitive_directions(radius):
        # direction (a, b) = (column step, row step)
        dmax = max(abs(a), abs(b))
        steps = _reach_steps(reach, dmax)
        for j in steps:
            for k in steps:
                if j > k or (j != k and not asymmetric):
                    continue
                for (jj, kk) in {(j, k), (k, j)}:
                    si, sj = -kk * b, -kk * a  # far end behind: p - kk d
                    ti, tj = jj * b, jj * a    # far end ahead: p + jj d
                    ok = free & shifted(Ip, si, sj) & shifted(Ip, ti, tj)
                    if not ok.any():
                        continue
                    P1 = np.where(ok, shifted(Xp, si, sj), 0.0)
                    P2 = np.where(ok, shifted(Yp, si, sj), 0.0)
                    Q1 = np.where(ok, shifted(Xp, ti, tj), 0.0)
                    Q2 = np.where(ok, shifted(Yp, ti, tj), 0.0)
                    ok &= np.asarray(dom.segment_ok(P1, P2, Q1, Q2), dtype=bool)
                    if not ok.any():
                        continue
                    # p = (jj * behind + kk * ahead) / (jj + kk)
                    wa = jj / (jj + kk)
                    wb = kk / (jj + kk)
                    entries.append((si, sj, ti, tj, wa, wb, ok))
    return entries


# -- diagnostics -------------------------------------------------------------


@dataclass
class Comparison:
    max_error: float
    argmax: tuple[float, float]
    max_excess: float  # largest field - closed form; <= 0 up to rounding for a lower bound
    nodes: int
    band: float

    def to_json(self):
        return {"max_error": self.max_error, "argmax": list(self.argmax),
                "max_excess": self.max_excess, "nodes": self.nodes, "band": self.band}


def compare_closed_form(field_: ScalarField, ev: BellmanEvaluator, band: float = 0.0) -> Comparison:
    """Largest deviation from the closed form over Free nodes at least ``band`` from the window's sides."""
    x0, x1 = field_.x[0], field_.x[-1]
    worst, where, excess, count = 0.0, (math.nan, math.nan), -math.inf, 0
    for i, j in zip(*np.nonzero(field_.mask == FREE)):
        x, y = field_.node(i, j)
        if min(x - x0, x1 - x) < band:
            continue
        err = field_.values[i, j] - ev.evaluate((x, y))
        count += 1
        excess = max(excess, err)
        if abs(err) > worst:
            worst, where = abs(err), (x, y)
    return Comparison(worst, where, excess, count, band)


def chord_audit(field_: ScalarField, dom: SolverDomain, samples: int = 10_000, seed: int = 0,
                radius: int | None = None, reach: int | None = None) -> float:
    """Most negative concavity slack over random stencil chords through Free nodes.

    A chord ``[p - k d, p + j d]`` with both ends and the whole segment in the
    domain should satisfy ``G(p) >= (j G(p - k d) + k G(p + j d)) / (j + k)``.
    """
    rng = np.random.default_rng(seed)
    n = max(len(field_.x), len(field_.y)) - 1
    radius = default_radius(n) if radius is None else radius
    reach = max(32, n // 4) if reach is None else reach
    dirs = primitive_directions(radius)
    free = np.argwhere(field_.mask == FREE)
    H, W = field_.mask.shape
    worst = math.inf
    done = tries = 0
    while done < samples and tries < 50 * samples:
        tries += 1
        i, j = free[rng.integers(len(free))]
        a, b = dirs[rng.integers(len(dirs))]
        steps = _reach_steps(reach, max(abs(a), abs(b)))
        jj, kk = steps[rng.integers(len(steps))], steps[rng.integers(len(steps))]
        pi, pj = i - kk * b, j - kk * a
        qi, qj = i + jj * b, j + jj * a
        if not (0 <= pi < H and 0 <= qi < H and 0 <= pj < W and 0 <= qj < W):
            continue
        if field_.mask[pi, pj] == OUTSIDE or field_.mask[qi, qj] == OUTSIDE:
            continue
        P, Q = field_.node(pi, pj), field_.node(qi, qj)
        if not bool(np.asarray(dom.segment_ok(*(np.array([c]) for c in (*P, *Q))))[0]):
            continue
        avg = (jj * field_.values[pi, pj] + kk * field_.values[qi, qj]) / (jj + kk)
        worst = min(worst, field_.values[i, j] - avg)
        done += 1
    return worst


# -- shipped domains ---------------------------------------------------------


def comb_solver_domain(d: CombDomain, ev: BellmanEvaluator | None = None, cells: int = 1,
                       edge: str = "constant", edge_value: float | None = None) -> SolverDomain:
    """Window ``[-cells lam, cells lam]`` of the comb below its hull.

    Nodes next to the parabola carry the closed form (``edge='closed-form'``)
    or ``exp(mu x1)`` (``edge='constant'``); the window's vertical edges carry
    the closed form or the constant ``edge_value``.
    """
    if edge not in ("closed-form", "constant"):
        raise ValueError(f"edge must be 'closed-form' or 'constant', got {edge!r}")
    if ev is None:
        raise ValueError("a BellmanEvaluator supplies mu and the closed-form data")
    R = cells * d.lam
    top = R * R + d.epsilon**2
    window = (-R, R, 0.0, top)
    tol = 1e-12

    def inside(X, Y):
        return (Y >= X * X - tol) & (Y <= d.hull_upper(X) + tol * np.maximum(1, np.abs(Y)))

    def dirichlet(X, Y, ins, hx, hy):
        below = Y - X * X < np.maximum(hy, 2 * np.abs(X) * hx + hx * hx)
        side = (np.abs(X - window[0]) < hx / 2) | (np.abs(X - window[1]) < hx / 2)
        return ins & (below | side)

    def data(X, Y):
        out = np.empty(X.shape)
        for idx in np.ndindex(X.shape):
            x, y = float(X[idx]), float(Y[idx])
            on_edge = abs(abs(x) - R) < 1e-12 * max(1, R)
            if edge == "closed-form":
                out[idx] = ev.evaluate((x, max(y, x * x)))
            elif on_edge:
                out[idx] = edge_value if edge_value is not None else math.exp(ev.mu * R)
            else:
                out[idx] = math.exp(ev.mu * x)
        return out

    def segment_ok(P1, P2, Q1, Q2):
        return d.segment_clearance_many(P1, P2, Q1, Q2) <= 1e-12

    return SolverDomain(window, inside, dirichlet, data, segment_ok, "comb",
                        {"lambda": d.lam, "epsilon": d.epsilon, "mu": ev.mu, "edge": edge})


def two_disk_solver_domain(td: TwoDiskDomain | None = None,
                           f: Callable | None = None) -> SolverDomain:
    """Unit disk minus the stadium hull; data ``f(x) = -|x1|`` on the circle by default."""
    td = td or TwoDiskDomain()
    Rout = td.outer_radius
    r = td.obstacle_radius
    f = f or (lambda x1, x2: -np.abs(x1))
    window = (-Rout, Rout, -Rout, Rout)

    def inside(X, Y):
        return (np.hypot(X, Y) <= Rout) & (td.stadium_distance(X, Y) > r)

    def dirichlet(X, Y, ins, hx, hy):
        return ins & (np.hypot(X, Y) > Rout - 1.5 * max(hx, hy))

    def data(X, Y):
        rr = np.hypot(X, Y)
        rr = np.where(rr > 0, rr, 1.0)
        return f(X / rr, Y / rr)

    def segment_ok(P1, P2, Q1, Q2):
        return td.segment_hull_distance(P1, P2, Q1, Q2) >= r

    return SolverDomain(window, inside, dirichlet, data, segment_ok, "two-disk", {})


# -- Remark on the two-disk domain ------------------------------------------


@dataclass
class CounterexampleReport:
    psi_values: list
    psi_masses: list
    mean: tuple[float, float]
    mean_outside_hull: bool
    hull_extent_at_mean: tuple[float, float]
    mean_f: float
    segment_clearance_to_obstacles: float
    psi_in_class: bool
    solver_value: float
    grid: int
    iterations: int
    residual: float
    axiom5_fails: bool
    inequality_fails: bool

    def to_json(self):
        return {
            "psi": [{"value": list(v), "mass": m} for v, m in zip(self.psi_values, self.psi_masses)],
            "mean": list(self.mean),
            "mean_outside_hull": self.mean_outside_hull,
            "hull_extent_at_mean": list(self.hull_extent_at_mean),
            "mean_f": self.mean_f,
            "segment_distance_to_obstacles": self.segment_clearance_to_obstacles,
            "psi_in_class": self.psi_in_class,
            "solver_value": self.solver_value,
            "grid": self.grid,
            "iterations": self.iterations,
            "residual": self.residual,
            "axiom5_fails": self.axiom5_fails,
            "main_inequality_fails": self.inequality_fails,
        }


def _point_segment_distance(c, p, q) -> float:
    px, py = q[0] - p[0], q[1] - p[1]
    t = ((c[0] - p[0]) * px + (c[1] - p[1]) * py) / (px * px + py * py)
    t = min(max(t, 0.0), 1.0)
    return math.hypot(p[0] + t * px - c[0], p[1] + t * py - c[1])


def counterexample_report(grid: int = 256, tol: float = 1e-7, max_iters: int = 5000,
                          masses: tuple[float, float] = (0.9, 0.1)) -> CounterexampleReport:
    from .geometry import check_axioms

    td = TwoDiskDomain()
    lo, hi = (0.0, -1.0), (0.0, 1.0)
    m_lo, m_hi = masses
    mean = (m_lo * lo[0] + m_hi * hi[0], m_lo * lo[1] + m_hi * hi[1])
    # every subinterval average is a convex combination of the two values, so it
    # lies on the segment [lo, hi]; its distance to the obstacles decides membership
    gap = min(_point_segment_distance(c, lo, hi) for c in td.centers) - td.obstacle_radius
    in_class = gap > 0
    extent = td.hull_vertical_extent(mean[0])
    outside = not (extent[0] <= mean[1] <= extent[1])
    f = lambda x1, x2: -abs(x1)
    mean_f = m_lo * f(*lo) + m_hi * f(*hi) + 0.0
    field_ = solve(two_disk_solver_domain(td), grid, tol, max_iters)
    val = field_.query(mean)
    ax = check_axioms(td)
    return CounterexampleReport(
        psi_values=[lo, hi], psi_masses=[m_lo, m_hi], mean=mean,
        mean_outside_hull=outside, hull_extent_at_mean=extent, mean_f=mean_f,
        segment_clearance_to_obstacles=gap,
        psi_in_class=in_class, solver_value=val, grid=grid,
        iterations=field_.iterations, residual=field_.residual,
        axiom5_fails=ax.failed == [5], inequality_fails=val < mean_f,
    )
