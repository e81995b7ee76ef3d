"""Weak BMO on the lattice comb: norms, the Bellman function, splitting and extremals."""

from .bellman import BellmanEvaluator, DomainError, FoliationSegment, mu_critical
from .extremal import ExtremalSpec, build, exp_average, verify_trajectory
from .geometry import (AxiomReport, CombDomain, PlanePoint, Region, RegionTag, TwoDiskDomain,
                       check_axioms)
from .mlcf import ConvergenceError, ScalarField, SolverDomain, counterexample_report, solve
from .oscillation import (bmo_dyadic, bmo_norm, jn_bounds, membership_A, norms, variance,
                          weak_bmo, weak_bmo_circle)
from .splitting import SplitResult, induct, split, verify_main_inequality
from .stepfn import Space, StepFunction, ValidationError, gamma, lift

__all__ = [
    "AxiomReport", "BellmanEvaluator", "CombDomain", "ConvergenceError", "DomainError",
    "ExtremalSpec", "FoliationSegment", "PlanePoint", "Region", "RegionTag", "ScalarField",
    "SolverDomain", "Space", "SplitResult", "StepFunction", "TwoDiskDomain", "ValidationError",
    "bmo_dyadic", "bmo_norm", "build", "check_axioms", "counterexample_report", "exp_average",
    "gamma", "induct", "jn_bounds", "lift", "membership_A", "mu_critical", "norms", "solve",
    "split", "variance", "verify_main_inequality", "verify_trajectory", "weak_bmo",
    "weak_bmo_circle",
]
