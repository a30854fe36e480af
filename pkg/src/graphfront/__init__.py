"""Bistable reaction-diffusion fronts on metric graphs.

Simulation of front propagation and blocking through junctions, closed-form
star-graph criteria, harmonic and spectral analysis, and scenario drivers for
partial/one-way propagation, reservoirs, and graph perturbations.
"""

from . import errors
from .bistable import Bistable, ReservoirConstants, make_cubic, make_table, \
    reservoir_constants
from .evolve import (LimitProfile, PropagationMatrix, SolverParams, cauchy_run,
                     evolve_to_steady, front_initial_data, limit_profile,
                     local_energy, step)
from .graph import (Edge, MetricGraph, OuterPath, RescaleEdge, ReplaceVertex,
                    SigmaGraph, SpliceGraph, Vertex, bounded_graph, build_graph,
                    melon_graph, perturb, serialize, star_graph, total_length,
                    triangle_sigma, two_star_bridge, unify_outer_paths)
from .mesh import Grid, GridField, assemble_operator, discretize
from .phaseplane import (Orbit1D, WaveProfile, classify_orbit, interval_bump,
                         pulse, stable_manifold, traveling_wave)
from .scenarios import (InvasionReport, ScenarioReport, invasion_report,
                        propagation_matrix, scenario_faraway, scenario_oneway,
                        scenario_partial, scenario_perturbed_star,
                        scenario_reservoir)
from .spectra import (SpectrumResult, dirichlet_principal_eig, neumann_spectrum,
                      poincare_constant, smallest_eigs, stability_eigenvalue)
from .stationary import (CriterionResult, HarmonicSolution, StationaryProfile,
                         gauss_green_residual, gradient_bound_check,
                         harmonic_dirichlet, harmonic_neumann, star_blocking_profile,
                         star_criterion, star_replacement_barrier)

__version__ = "0.1.0"
