"""Social optimization over noncooperative games.

A regulator steers an N-player game toward the social optimum: the
low-level game is solved by a distributed Nash-equilibrium seeker over a
communication graph, and the high-level decision descends a smoothed,
derivative-free surrogate of the summed equilibrium costs.
"""

from .games import (BoxSet, GameConstants, GameSpec, PlayerQuadratic,
                    QuadraticGameParams, estimate_constants, project_box,
                    pseudo_gradient, social_cost)
from .graphs import CommGraph, complete_graph, metropolis_graph
from .ne_seeking import (DivergenceError, EstimateState, NEResult,
                         centralized_ne, contraction_error_bound,
                         contraction_factor, ne_residual, ne_seek,
                         step_size_bound)
from .oracles import (example1_cost_slope_bound, example1_game, example1_ne,
                      example1_social, finite_difference_smoothed_gradient,
                      grid_search_theta)
from .regulator import (IterationRecord, RegulatorConfig, RunTrace,
                        certified_outer_step, inner_iteration_schedule,
                        read_trace_csv, regulator_step, run,
                        zo_social_gradient)
from .smoothing import (SmoothedGradientEstimate, SphereSampler,
                        mc_smoothed_value, moreau_gradient, sample_unit_ball,
                        sample_unit_sphere, stationarity_estimate,
                        two_point_estimate)
from .ev_charging import EVChargingParams, build_ev_game

__version__ = "0.1.0"
