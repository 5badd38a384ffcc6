#!/usr/bin/env python3
"""Distributed equilibrium seeking under partial-decision information.

Players only see their graph neighbors' estimate vectors, never the true
joint strategy.  Each round: mix estimates with the doubly stochastic
weights, take a projected gradient step on the own block, adopt the
mixed values for everyone else.  Below the certified step-size bound the
stacked error contracts linearly at the rate q < 1, and the computable
bound 2(||x0||^2 + N B_X^2) q^t certifies the accuracy after t rounds.
"""

import numpy as np

from socopt import (centralized_ne, contraction_factor, estimate_constants,
                    metropolis_graph, ne_seek, step_size_bound)
from socopt.ev_charging import EVChargingParams, build_ev_game

params = EVChargingParams()           # 10 residents, scalar consumption
spec, quad = build_ev_game(params)
constants = estimate_constants(quad, params.strategy_sets(),
                               params.theta_set(), theta_probe_radius=1e-4)

# Random communication graph with Metropolis weights: doubly stochastic,
# positive self-loops, connected by construction (resampled otherwise).
graph = metropolis_graph(params.n_players, edge_probability=1 / 3, rng_seed=7)
print(f"graph sigma_bar = {graph.sigma_bar:.4f} "
      f"(second-largest singular value)")

bound = step_size_bound(constants, graph.sigma_bar)
gamma = 0.99 * bound  # the bound is a strict supremum: step inside it
q = contraction_factor(gamma, constants, params.n_players, graph.sigma_bar)
print(f"certified step bound {bound:.3e}, using gamma = {gamma:.3e}, "
      f"contraction factor q = {q:.8f}")

theta = np.array([2.0])
result = ne_seek(spec, graph, theta, gamma, t_max=300, constants=constants,
                 record_history=True)
print(f"\nafter {result.iterations} rounds at theta = {theta[0]}:")
print(f"  natural-map residual  {result.residual:.3e}")
print(f"  consensus gap         {result.consensus_gap:.3e}")
print(f"  certified error bound {result.epsilon_bound:.3e}")

# Compare against the full-information solver: the squared distance must
# sit below the certificate.
x_star = centralized_ne(spec, theta, tol=1e-12, constants=constants)
err_sq = float(np.linalg.norm(result.x - x_star) ** 2)
print(f"  measured ||x - x*||^2 {err_sq:.3e} <= bound: {err_sq <= result.epsilon_bound}")

# The per-round stacked error against the equilibrium decays monotonely
# in trend; print a few snapshots.
target = np.tile(x_star, (params.n_players, 1))
errors = [float(np.sum((h - target) ** 2)) for h in result.history]
print("\nstacked squared error by round (certified gamma):")
for t in (0, 100, 300):
    print(f"  t={t:4d}  e={errors[t]:.6e}")

# The certificate is conservative: the published experiments run this
# game at gamma = 0.01, far above the bound (the solver warns and the
# linear-rate certificate is void), and converge much faster in practice.
import warnings

with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    fast = ne_seek(spec, graph, theta, 0.01, t_max=300, constants=constants,
                   record_history=True)
fast_errors = [float(np.sum((h - target) ** 2)) for h in fast.history]
print("\nstacked squared error by round (practical gamma = 0.01, uncertified):")
for t in (0, 100, 300):
    print(f"  t={t:4d}  e={fast_errors[t]:.6e}")
print(f"residual at practical gamma: {fast.residual:.3e}")
