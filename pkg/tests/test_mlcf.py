import csv
import math

import numpy as np
import pytest

from weakbmo.bellman import BellmanEvaluator
from weakbmo.geometry import CombDomain, TwoDiskDomain
from weakbmo.mlcf import (DIRICHLET, FREE, OUTSIDE, ConvergenceError, ScalarField, SolverDomain,
                          chord_audit, comb_solver_domain, compare_closed_form,
                          counterexample_report, primitive_directions, solve,
                          two_disk_solver_domain)

D = CombDomain(1.0, 1.0)
EV = BellmanEvaluator(D, 0.5)


def square(data):
    def dirichlet(X, Y, ins, hx, hy):
        return (np.abs(X) > 1 - hx / 2) | (np.abs(Y) > 1 - hy / 2)

    return SolverDomain((-1, 1, -1, 1), lambda X, Y: np.ones(X.shape, bool), dirichlet, data,
                        lambda *a: np.ones(np.shape(a[0]), bool))


@pytest.fixture(scope="module")
def comb64():
    dom = comb_solver_domain(D, EV, edge="closed-form")
    return dom, solve(dom, 64)


def test_linear_data_reproduced():
    field_ = solve(square(lambda X, Y: 2 * X - Y + 0.5), 16)
    X, Y = np.meshgrid(field_.x, field_.y)
    assert np.max(np.abs(field_.values - (2 * X - Y + 0.5))) < 1e-6
    assert field_.residual < 1e-6


def test_concave_data_gives_concave_envelope():
    # every value is a chord average of boundary data in [-2, -1]; the centre
    # sees the two edge midpoints at -1
    field_ = solve(square(lambda X, Y: -(X**2) - Y**2), 16)
    assert np.nanmin(field_.values) >= -2.0 - 1e-12
    assert np.nanmax(field_.values) <= -1.0 + 1e-12
    assert field_.query((0.0, 0.0)) == pytest.approx(-1.0, abs=1e-9)


def test_comb_vertex_value(comb64):
    _, field_ = comb64
    assert field_.query((0.0, 1.0)) == pytest.approx(EV.vertex_value(0), abs=5e-3)


def test_closed_form_mode_is_lower_bound(comb64):
    _, field_ = comb64
    cmp = compare_closed_form(field_, EV)
    assert cmp.max_excess <= 1e-12
    assert cmp.max_error < 2e-3
    assert cmp.nodes > 100


def test_residual_history_and_audit(comb64):
    dom, field_ = comb64
    h = np.array(field_.history)
    assert np.all(np.diff(h[1:]) <= 1e-15)
    assert chord_audit(field_, dom, samples=2000) >= -5e-7


def test_query_examples(comb64):
    _, field_ = comb64
    i, j = np.argwhere(field_.mask == FREE)[10]
    assert field_.query(field_.node(i, j)) == field_.values[i, j]
    f = ScalarField(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([[1.0, 2.0], [3.0, 6.0]]),
                    np.zeros((2, 2), dtype=np.int8))
    assert f.query((0.5, 0.5)) == 3.0
    with pytest.raises(ValueError):
        f.query((2.0, 0.5))


def test_convergence_error():
    with pytest.raises(ConvergenceError) as info:
        solve(two_disk_solver_domain(), 8, tol=1e-30, max_iters=1)
    assert info.value.iterations == 1 and info.value.residual > 0


def test_reproducible():
    dom = comb_solver_domain(D, EV, edge="constant")
    a, b = solve(dom, 32), solve(dom, 32)
    assert np.array_equal(a.values, b.values, equal_nan=True)
    assert a.iterations == b.iterations


def test_two_disk_value_negative():
    td = TwoDiskDomain()
    field_ = solve(two_disk_solver_domain(td), 64)
    assert field_.query((0.0, -0.8)) < 0
    assert np.all(field_.mask[np.asarray(td.in_obstacles(*np.meshgrid(field_.x, field_.y)))] == OUTSIDE)


def test_counterexample_report_small():
    rep = counterexample_report(grid=64)
    assert rep.mean == pytest.approx((0.0, -0.8), abs=1e-15)
    assert rep.mean_f == 0.0
    assert rep.psi_in_class and rep.segment_clearance_to_obstacles == pytest.approx(0.1)
    assert rep.mean_outside_hull and rep.axiom5_fails and rep.inequality_fails
    assert rep.solver_value < 0


def test_field_csv(tmp_path, comb64):
    _, field_ = comb64
    path = tmp_path / "f.csv"
    field_.write_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["x1", "x2", "tag", "value"]
    assert {r[2] for r in rows[1:]} <= {"Free", "Dirichlet", "Outside"}
    assert len(rows) - 1 == field_.values.size


def test_primitive_directions():
    dirs = primitive_directions(3)
    assert all(math.gcd(a, b) == 1 for a, b in dirs)
    assert len(set(dirs)) == len(dirs)
    assert (1, 0) in dirs and (0, 1) in dirs


def test_invalid_arguments():
    with pytest.raises(ValueError):
        solve(comb_solver_domain(D, EV), 16, tol=0.0)
    with pytest.raises(ValueError):
        comb_solver_domain(D, EV, edge="bogus")
    assert DIRICHLET != FREE
