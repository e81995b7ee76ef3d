import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weakbmo.extremal import ExtremalSpec, build, truncated_gamma
from weakbmo.stepfn import (Space, StepFunction, ValidationError, constant, gamma, gamma_samples,
                            lift, write_gamma_csv)

TWO = StepFunction([0.5, 0.5], [-1.0, 1.0])


@st.composite
def step_functions(draw, space=Space.INTERVAL, max_pieces=8):
    n = draw(st.integers(1, max_pieces))
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
    vals = draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n))
    total = math.fsum(raw)
    return StepFunction([r / total for r in raw], vals, space)


def test_average_examples():
    assert constant(2.5).average(0.1, 0.7) == 2.5
    assert TWO.average(0, 1) == 0.0
    circ = StepFunction([0.5, 0.5], [-1.0, 1.0], Space.CIRCLE)
    assert circ.average(0.75, 1.25) == pytest.approx(0.0, abs=1e-15)


def test_average_errors():
    with pytest.raises(ValueError):
        TWO.average(0.5, 0.5)
    with pytest.raises(ValueError):
        TWO.average(0.2, 1.5)


def test_lift_examples():
    psi = lift(constant(3.0))
    assert psi.values.tolist() == [[3.0, 9.0]]
    assert lift(TWO).values.tolist() == [[-1.0, 1.0], [1.0, 1.0]]


def test_gamma_examples():
    psi = lift(TWO)
    assert tuple(gamma(psi, 1.0)) == (0.0, 1.0)
    assert tuple(gamma(psi, 0.2)) == (-1.0, 1.0)
    with pytest.raises(ValueError):
        gamma(psi, 0.0)


def test_gamma_hits_vertex_on_extremal():
    spec = ExtremalSpec(1.0, 1.0)
    g = gamma(lift(build(spec)), spec.a)
    assert tuple(g) == pytest.approx(truncated_gamma(spec, 1), abs=1e-14)
    # the constant tail moves the point by O(N a^N)
    assert tuple(g) == pytest.approx((1.0, 2.0), abs=1e-10)


def test_json_round_trip_and_validation():
    f = StepFunction.loads('{"space": "interval", "pieces": [{"length": 0.5, "value": -1},'
                           ' {"length": 0.5, "value": 1}]}')
    assert f.n_pieces == 2 and f == TWO
    assert StepFunction.loads(f.dumps()) == f
    g = StepFunction.from_json({"pieces": [{"length": 0.499999999, "value": 0}, {"length": 0.5, "value": 1}]})
    assert math.fsum(g.lengths) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValidationError, match=r"pieces\[0\]\.length"):
        StepFunction.from_json({"pieces": [{"length": -0.5, "value": 0}, {"length": 1.5, "value": 1}]})
    with pytest.raises(ValidationError, match=r"pieces\[1\]\.value"):
        StepFunction([0.5, 0.5], [0.0, math.nan])
    with pytest.raises(ValidationError, match="sum"):
        StepFunction([0.5, 0.4], [0.0, 1.0])


@settings(max_examples=100, deadline=None)
@given(step_functions(), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_average_additive(f, u, v, w):
    a, b, c = sorted([u, v, w])
    if b - a < 1e-6 or c - b < 1e-6:
        return
    lhs = (b - a) * f.average(a, b) + (c - b) * f.average(b, c)
    assert lhs == pytest.approx((c - a) * f.average(a, c), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(step_functions(Space.CIRCLE), st.floats(0, 1), st.integers(1, 64))
def test_circle_long_averages_approach_mean(f, t, k):
    bound = 2 * float(np.max(np.abs(f.values))) / k
    assert abs(f.average(t, t + k) - f.mean()) <= bound + 1e-12


@settings(max_examples=100, deadline=None)
@given(step_functions(), st.floats(0, 1), st.floats(0, 1))
def test_lift_preserves_averages(f, u, v):
    a, b = sorted([u, v])
    if b - a < 1e-6:
        return
    x = lift(f).average(a, b)
    assert x[0] == pytest.approx(f.average(a, b), abs=1e-12)
    sq = StepFunction(f.lengths, f.values**2)
    assert x[1] == pytest.approx(sq.average(a, b), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(step_functions(), st.floats(1e-6, 1))
def test_gamma_above_parabola(f, t):
    g = gamma(lift(f), t)
    assert g.x2 - g.x1**2 >= -1e-12


def test_restrict_and_call():
    f = StepFunction([0.25, 0.5, 0.25], [0.0, 1.0, 0.0])
    r = f.restrict(0.25, 1.0)
    assert r.values.tolist() == [1.0, 0.0]
    assert r.lengths.tolist() == pytest.approx([2 / 3, 1 / 3])
    assert f(0.5) == 1.0 and f(0.9) == 0.0


def test_gamma_csv(tmp_path):
    path = tmp_path / "g.csv"
    write_gamma_csv(path, gamma_samples(lift(TWO), [0.25, 1.0]))
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "x1", "x2"]
    assert [float(x) for x in rows[2]] == [1.0, 0.0, 1.0]
