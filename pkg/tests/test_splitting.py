import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weakbmo.bellman import BellmanEvaluator
from weakbmo.extremal import ExtremalSpec, build, exp_average
from weakbmo.geometry import CombDomain
from weakbmo.splitting import SplitCase, induct, split, verify_main_inequality
from weakbmo.stepfn import Space, StepFunction, constant, lift

D = CombDomain(1.0, 1.0)
EV = BellmanEvaluator(D, 0.5)


def check_postcondition(psi, interval, d, r):
    a, b = interval
    assert 0 < r.t0 < 1
    assert r.cut == pytest.approx(a + r.t0 * (b - a), abs=1e-15)
    assert d.segment_clearance(r.left_avg, r.right_avg) <= 1e-9
    w = (r.cut - a) / (b - a)
    x = psi.lifted.average(a, b) if psi.is_real else psi.average(a, b)
    assert w * r.left_avg.x1 + (1 - w) * r.right_avg.x1 == pytest.approx(x[0], abs=1e-12)
    assert w * r.left_avg.x2 + (1 - w) * r.right_avg.x2 == pytest.approx(x[1], abs=1e-12)


@st.composite
def members(draw):
    n = draw(st.integers(2, 6))
    raw = draw(st.lists(st.floats(0.02, 1.0), min_size=n, max_size=n))
    vals = draw(st.lists(st.floats(-0.8, 0.8), min_size=n, max_size=n))
    total = math.fsum(raw)
    return StepFunction([r / total for r in raw], vals)


def test_equal_values_split_at_midpoint():
    f = StepFunction([0.4, 0.6], [0.3, 0.3])
    r = split(f, (0.1, 0.9), D)
    assert r.case is SplitCase.A and r.t0 == 0.5
    assert r.clearance < 0


def test_two_piece_at_vertex():
    f = StepFunction([0.5, 0.5], [-1.0, 1.0])
    r = split(f, (0.0, 1.0), D)
    assert r.case is not SplitCase.A
    check_postcondition(f, (0, 1), D, r)


def test_extremal_at_vertex():
    f = build(ExtremalSpec(1.0, 1.0))
    r = split(f, (0.0, 1.0), D)
    assert r.clearance <= 1e-9
    check_postcondition(f, (0, 1), D, r)


def test_split_preconditions():
    f = StepFunction([0.5, 0.5], [0.2, 0.8])
    psi = StepFunction([0.5, 0.5], [[0.5, 3.0], [0.5, 3.0]])
    with pytest.raises(ValueError, match="inside the hull"):
        split(psi, (0, 1), D)
    with pytest.raises(ValueError):
        split(f, (0.5, 0.5), D)


@settings(max_examples=150, deadline=None)
@given(members(), st.floats(0, 0.5), st.floats(0.5, 1))
def test_split_postcondition_property(f, a, b):
    if b - a < 1e-3:
        return
    x = f.lifted.average(a, b)
    if D.in_hull_interior(x) or f.restrict(a, b).n_pieces < 2:
        return
    check_postcondition(f, (a, b), D, split(f, (a, b), D))


def test_constant_induction_is_tight():
    tr = induct(lift(constant(0.4)), D, EV)
    assert len(tr.generations) == 1 and tr.splits == 0
    assert tr.B[0] == pytest.approx(math.exp(0.2), rel=1e-15)
    assert tr.final_sum_f == tr.B[0]


def test_extremal_induction_near_equality():
    # the induction reproduces the truncated function's exponential average;
    # its distance to the vertex value is the truncation tail
    for n in (20, None):
        spec = ExtremalSpec(1.0, 1.0, n)
        tr = induct(build(spec), D, EV)
        assert tr.final_sum_f == pytest.approx(exp_average(spec, 0.5).truncated, abs=1e-12)
        assert tr.chain_slack >= -1e-9
    assert EV.vertex_value(0) - tr.final_sum_f <= 1e-6


@settings(max_examples=40, deadline=None)
@given(members())
def test_main_inequality_property(f):
    x = f.lifted.mean()
    if D.in_hull_interior(x):
        return
    tr = induct(f, D, EV)
    assert tr.final_sum_f <= EV.evaluate(x) + 1e-8
    assert tr.chain_slack >= -1e-9
    assert tr.lower_bound <= tr.B[-1] + 1e-12
    assert tr.leaf_mass + tr.frontier_mass == pytest.approx(1.0, abs=1e-12)
    # every generation partitions [0, 1]
    for g in tr.generations:
        assert g.leaf_mass + g.frontier_mass == pytest.approx(1.0, abs=1e-12)


def test_trace_rows():
    tr = induct(StepFunction([0.3, 0.3, 0.4], [-0.5, 0.2, 0.4]), D, EV)
    rows = list(tr.rows())
    assert rows[0][0] == 0 and rows[0][1:3] == (0.0, 1.0)
    assert all(len(r) == 6 for r in rows)


def test_verify_examples():
    spec = ExtremalSpec(1.0, 1.0)
    rep = verify_main_inequality(build(spec), D, EV)
    assert rep.verdict == "PASS" and 0 <= rep.margin <= 1e-6

    small = CombDomain(1.0, 0.5)
    rep = verify_main_inequality(StepFunction([0.5, 0.5], [-1.0, 1.0]), small, BellmanEvaluator(small, 0.5))
    assert rep.verdict == "SKIPPED" and rep.witness is not None


def test_circle_members_mean_outside_hull():
    rng = np.random.default_rng(11)
    seen = 0
    for _ in range(60):
        m = int(rng.integers(2, 6))
        f = StepFunction(rng.dirichlet(np.ones(m)), rng.normal(0, 0.5, m), Space.CIRCLE)
        rep = verify_main_inequality(f, D, EV, k_max=8)
        if not rep.member:
            continue
        seen += 1
        assert rep.verdict == "PASS", rep.reason
        assert not D.in_hull_interior(rep.mean)
    assert seen > 10
