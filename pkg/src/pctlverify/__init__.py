"""PCTL model checking over discrete-time Markov processes with certified error bounds."""

from .absorbing import AbsorbingReport, an_sequence_approx, las_finite, las_graph, simplicity_by_support
from .checker import FiniteContext, GridContext
from .decompose import (ExcessiveCandidate, decompose_invariance, decompose_reach_avoid, doob_lower_bound,
                        excessive_set, verify_local_excessivity)
from .discretize import Abstraction, discretize, total_error
from .engine import ValueFn, apply_invariance_op, bounded_invariance, bounded_reach_avoid
from .formula import ThreeValuedSet, desugar_invariance, parse, parse_path, to_text, verify
from .horizon import Certificate, NonContractive, compute_m_rho, plan_horizon, tail_bound, unbounded_reach_avoid
from .kernel import AffineGauss1D, MatrixKernel, Nonlinear2D
from .mclinear import invariance_exact, solve_reach_avoid_exact, theorem1_battery, uniqueness_iff_trivial
from .montecarlo import Estimate, Path, estimate_invariance, estimate_reach_avoid, simulate
from .space import Region, StateSpace, region_from_box

__version__ = "0.1.0"
