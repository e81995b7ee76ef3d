"""Sanity checks on the reference computations themselves."""

import math

import pytest

from weakbmo.oracles import grid_bmo, grid_weak_bmo, mu_critical_root, series_vertex_value
from weakbmo.stepfn import StepFunction


def test_grid_bmo_two_piece():
    assert grid_bmo(StepFunction([0.5, 0.5], [-1.0, 1.0]), 1e-2) == pytest.approx(1.0)


def test_grid_weak_bmo_two_piece():
    assert grid_weak_bmo(StepFunction([0.5, 0.5], [-1.0, 1.0]), 1.0, 1e-2) == pytest.approx(1.0)


def test_grid_weak_bmo_constant_off_lattice():
    assert grid_weak_bmo(StepFunction([1.0], [0.3]), 1.0, 1e-2) == 0.0


def test_mu_critical_root_golden():
    assert mu_critical_root(1, 1) == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=1e-14)


def test_series_divergent():
    with pytest.raises(ValueError):
        series_vertex_value(1, 1, 2.0)
    total, rest = series_vertex_value(1, 1, 0.0)
    assert total == pytest.approx(1.0, abs=1e-15) and rest < 1e-15
