"""The geometric extremal function and its exponential average.

``phi`` takes the value ``v_n = (n + 1/2) lam - s`` on ``[a^{n+1}, a^n]`` with
``a = (s - lam/2)/(s + lam/2)``.  It is self-similar, ``phi(a t) = phi(t) + lam``,
its prefix averages run through the ray tips, and its exponential average
equals the Bellman value at ``(0, eps^2)``.  The stored function keeps ``N``
pieces and puts the constant ``v_N`` on the tail ``[0, a^N]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .bellman import mu_critical
from .geometry import CombDomain
from .oscillation import membership_A, variance, weak_bmo
from .stepfn import Space, StepFunction, gamma

TAIL_MASS = 1e-12


@dataclass(frozen=True)
class ExtremalSpec:
    lam: float
    eps: float
    n_pieces: int | None = None

    def __post_init__(self):
        if not (self.lam > 0 and self.eps > 0):
            raise ValueError("lambda and epsilon must be positive")
        if self.n_pieces is None:
            # smallest N with a^N below the tail budget
            n = math.ceil(math.log(TAIL_MASS) / math.log(self.a))
            while self.a**n >= TAIL_MASS:
                n += 1
            object.__setattr__(self, "n_pieces", int(n))
        if self.n_pieces < 1:
            raise ValueError("n_pieces must be at least 1")

    @property
    def s(self) -> float:
        return math.sqrt(self.lam**2 / 4 + self.eps**2)

    @property
    def a(self) -> float:
        return (self.s - self.lam / 2) / (self.s + self.lam / 2)

    def value(self, n: int) -> float:
        return (n + 0.5) * self.lam - self.s

    @property
    def tail_mass(self) -> float:
        return self.a**self.n_pieces

    def domain(self) -> CombDomain:
        return CombDomain(self.lam, self.eps)


def build(spec: ExtremalSpec) -> StepFunction:
    """Pieces from left to right: the tail ``v_N``, then ``v_{N-1}, ..., v_0``."""
    N, a = spec.n_pieces, spec.a
    ns = np.arange(N - 1, -1, -1)
    lengths = np.concatenate([[a**N], a**ns * (1 - a)])
    values = np.concatenate([[spec.value(N)], [spec.value(int(n)) for n in ns]])
    return StepFunction(lengths, values, Space.INTERVAL)


# -- exponential average -----------------------------------------------------


@dataclass
class ExpAverage:
    value: float  # sum of the infinite series (inf when divergent)
    partial: float  # first N terms
    tail_bound: float  # the geometric remainder beyond N terms
    truncated: float  # exact average of the stored N-piece function
    ratio: float  # a exp(mu lam), the ratio of consecutive terms
    divergent: bool

    def to_json(self) -> dict[str, Any]:
        return {"value": self.value, "partial": self.partial, "tail_bound": self.tail_bound,
                "truncated": self.truncated, "ratio": self.ratio, "divergent": self.divergent}


def _log_terms(spec: ExtremalSpec, mu: float, n: np.ndarray) -> np.ndarray:
    """``log((a^n - a^{n+1}) exp(mu v_n))``, safe far beyond the underflow of ``a^n``."""
    return n * math.log(spec.a) + math.log1p(-spec.a) + mu * ((n + 0.5) * spec.lam - spec.s)


def series_ratio(spec: ExtremalSpec, mu: float) -> float:
    return spec.a * math.exp(mu * spec.lam)


def exp_average(spec: ExtremalSpec, mu: float) -> ExpAverage:
    """``<exp(mu phi)>`` of the infinite extremal: ``N`` summed terms plus the exact geometric rest.

    The terms form a geometric series with ratio ``q = a exp(mu lam)``.  For
    ``q >= 1`` (that is ``mu >= mu*``) the series diverges: ``value`` is
    ``inf`` and ``divergent`` is set.  The test also compares ``mu`` with the
    closed-form ``mu*`` so that the limiting exponent is flagged even when ``q``
    rounds to just below one.
    """
    N = spec.n_pieces
    q = series_ratio(spec, mu)
    if mu == 0:
        return ExpAverage(1.0, 1.0 - spec.tail_mass, spec.tail_mass, 1.0, q, False)
    terms = np.exp(_log_terms(spec, mu, np.arange(N, dtype=float)))
    partial = math.fsum(terms)
    truncated = math.fsum([partial, spec.tail_mass * math.exp(mu * spec.value(N))])
    if q >= 1.0 or mu >= mu_critical(spec.lam, spec.eps):
        return ExpAverage(math.inf, partial, math.inf, truncated, q, True)
    rest = math.exp(_log_terms(spec, mu, np.float64(N))) / (1.0 - q)
    return ExpAverage(math.fsum([partial, rest]), partial, rest, truncated, q, False)


def partial_sums(spec: ExtremalSpec, mu: float, terms: int) -> np.ndarray:
    """Running sums of the first ``1, ..., terms`` terms of the series (any ``mu``)."""
    if terms < 1:
        raise ValueError("terms must be >= 1")
    return np.cumsum(np.exp(_log_terms(spec, mu, np.arange(terms, dtype=float))))


def divergence_index(spec: ExtremalSpec, mu: float, threshold: float = 1e6,
                     max_terms: int = 10_000) -> int | None:
    """Number of terms after which the partial sums first exceed ``threshold``."""
    ps = partial_sums(spec, mu, max_terms)
    hit = np.nonzero(ps > threshold)[0]
    return int(hit[0]) + 1 if hit.size else None


# -- trajectory checks -------------------------------------------------------


def truncated_gamma(spec: ExtremalSpec, n: int) -> tuple[float, float]:
    """Exact prefix average over ``[0, a^n]`` of the stored function.

    It is the tip ``V(n)`` moved by ``a^{N-n}`` times the gap between the tail
    point ``(v_N, v_N^2)`` and ``V(N)``.
    """
    lam, eps, N = spec.lam, spec.eps, spec.n_pieces
    w = spec.a ** (N - n)
    vN = spec.value(N)
    return (lam * n + w * (vN - lam * N),
            lam**2 * n**2 + eps**2 + w * (vN**2 - lam**2 * N**2 - eps**2))


def truncated_variance(spec: ExtremalSpec, n: int) -> float:
    """Exact variance over ``[0, a^n]`` of the stored function (shift invariant)."""
    M = spec.n_pieces - n
    w = spec.a**M
    vM = spec.value(M)
    shift = w * (spec.lam / 2 - spec.s)
    return spec.eps**2 + w * (vM**2 - spec.lam**2 * M**2 - spec.eps**2) - shift**2


@dataclass
class Check:
    name: str
    passed: bool
    error: float
    tolerance: float
    detail: str = ""

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "error": self.error,
                "tolerance": self.tolerance, "detail": self.detail}


@dataclass
class TrajectoryReport:
    spec: ExtremalSpec
    checks: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self):
        return {"lambda": self.spec.lam, "epsilon": self.spec.eps, "n_pieces": self.spec.n_pieces,
                "all_passed": self.all_passed, "checks": [c.to_json() for c in self.checks]}


def verify_trajectory(spec: ExtremalSpec, samples: int = 200, seed: int = 0) -> TrajectoryReport:
    phi = build(spec)
    psi = phi.lifted
    d = spec.domain()
    lam, eps, N, a = spec.lam, spec.eps, spec.n_pieces, spec.a
    rep = TrajectoryReport(spec)
    gap = math.hypot(spec.value(N) - lam * N, spec.value(N) ** 2 - lam**2 * N**2 - eps**2)

    # prefix averages at a^n: against the tips (truncation budget) and the exact formula
    worst_tip = worst_exact = 0.0
    tip_ok = True
    for n in range(N):
        g = gamma(psi, a**n)
        tip = d.vertex(n)
        dev = math.hypot(g.x1 - tip.x1, g.x2 - tip.x2)
        budget = a ** (N - n) * gap
        scale = max(1.0, abs(tip.x2))
        tip_ok &= dev <= budget + 1e-12 * scale
        worst_tip = max(worst_tip, dev - budget)
        ex = truncated_gamma(spec, n)
        worst_exact = max(worst_exact, max(abs(g.x1 - ex[0]), abs(g.x2 - ex[1]) / scale))
    rep.checks.append(Check("gamma_at_tips", tip_ok, worst_tip, 1e-12,
                            "|gamma(a^n) - V(n)| within a^(N-n) times the tail gap"))
    rep.checks.append(Check("gamma_exact", worst_exact <= 1e-12, worst_exact, 1e-12,
                            "gamma(a^n) against the closed form of the truncated function"))

    mean = phi.mean()
    shift = spec.tail_mass * abs(lam / 2 - spec.s)
    rep.checks.append(Check("mean_zero", abs(mean) <= shift + 1e-14, abs(mean), shift + 1e-14,
                            "<phi> = a^N (lam/2 - s)"))

    worst_var = 0.0
    for n in range(N):
        worst_var = max(worst_var, abs(variance(phi, 0.0, a**n) - truncated_variance(spec, n)))
    var_err = abs(variance(phi, 0.0, 1.0) - eps**2)
    var_budget = abs(truncated_variance(spec, 0) - eps**2) + 1e-13
    rep.checks.append(Check("variance_eps2", var_err <= var_budget and worst_var <= 1e-12,
                            max(var_err, worst_var), var_budget,
                            "variance over [0, a^n] matches the truncated closed form"))

    w = weak_bmo(phi, lam)
    rep.checks.append(Check("weak_bmo_eps", abs(w.value - eps) <= 1e-6, abs(w.value - eps), 1e-6,
                            f"weak BMO {w.value!r} at level {w.level}"))

    m = membership_A(phi, CombDomain(lam, eps + 1e-9))
    rep.checks.append(Check("member_eps_plus", m.member, m.weak_bmo - eps, 1e-9,
                            "member of the class for eps + 1e-9"))

    rng = np.random.default_rng(seed)
    worst_ss = 0.0
    for _ in range(samples):
        n = int(rng.integers(1, N))
        t = float(rng.uniform(a ** (N - n), 1.0))
        worst_ss = max(worst_ss, abs(float(phi(a**n * t)) - (float(phi(t)) + n * lam)))
    rep.checks.append(Check("self_similarity", worst_ss <= 1e-12, worst_ss, 1e-12,
                            "phi(a^n t) = phi(t) + n lam"))

    # prefix averages never land on a ray above its tip
    worst_ray = -math.inf
    ts = np.concatenate([a ** np.arange(N, dtype=float), rng.uniform(a**N, 1.0, samples)])
    for t in ts:
        g = gamma(psi, float(t))
        k = round(g.x1 / lam)
        if abs(g.x1 - lam * k) <= 1e-12 * max(1.0, abs(g.x1)):
            worst_ray = max(worst_ray, g.x2 - g.x1**2 - eps**2)
    rep.checks.append(Check("avoids_rays", worst_ray <= 1e-9, max(worst_ray, 0.0), 1e-9,
                            "variance at lattice-average prefixes stays within eps^2"))
    return rep


@dataclass
class SharpnessReport:
    series: float
    closed_form: float
    diff: float
    tail_bound: float
    divergent: bool
    ratio: float
    mu_star: float

    def to_json(self):
        return {"series": self.series, "closed_form": self.closed_form, "diff": self.diff,
                "tail_bound": self.tail_bound, "divergent": self.divergent,
                "ratio": self.ratio, "mu_star": self.mu_star}


def sharpness(spec: ExtremalSpec, mu: float) -> SharpnessReport:
    """The extremal's exponential average against the tip value of the Bellman function."""
    from .bellman import BellmanEvaluator

    if mu < 0:
        raise ValueError(f"mu must be non-negative, got {mu}")
    e = exp_average(spec, mu)
    mstar = mu_critical(spec.lam, spec.eps)
    if e.divergent or mu == 0:
        closed = 1.0 if mu == 0 else math.inf
        diff = 0.0 if mu == 0 else math.nan
        return SharpnessReport(e.value, closed, diff, e.tail_bound, e.divergent, e.ratio, mstar)
    closed = BellmanEvaluator(spec.domain(), mu).vertex_value(0)
    return SharpnessReport(e.value, closed, e.value - closed, e.tail_bound, False, e.ratio, mstar)
