#!/usr/bin/env python3
"""Walk through the two-player benchmark game and its closed forms.

Two symmetric players pick strategies on [2/3, 1]; each cost couples the
own strategy, the opponent, and the regulator decision theta on [0, 1].
Everything about this game is known in closed form, which is what makes
it the test bench for every solver in the package.
"""

import numpy as np

from socopt import (centralized_ne, estimate_constants, example1_game,
                    example1_ne, example1_social, grid_search_theta,
                    pseudo_gradient, social_cost)

spec, quad = example1_game()

# The pseudo-gradient stacks each player's own-block partial gradient.
# For this game it is the affine map 2x - 2*theta per coordinate.
x = np.array([0.8, 0.8])
theta = np.array([0.7])
print("pseudo-gradient at x=(0.8, 0.8), theta=0.7:",
      pseudo_gradient(spec, x, theta))

# The equilibrium is clamp(theta, 2/3, 1) for both players: below 2/3 the
# box binds, above it the unconstrained minimizer theta is feasible.
for t in (0.3, 2 / 3, 0.9):
    print(f"theta={t:.3f}: closed-form NE = {example1_ne(t)}")

# The summed equilibrium cost is piecewise:
#   -(8/3) t - 16/9 on [0, 2/3],  -2 t^2 - 4 t on [2/3, 1].
# Evaluating the costs directly at the equilibrium confirms the sum
# (a popular rendering of the first branch is off by a factor of two --
# it fails this continuity check at t = 2/3).
for t in (0.0, 2 / 3, 1.0):
    direct = social_cost(spec, example1_ne(t), np.array([t]))
    print(f"theta={t:.3f}: social cost closed form {example1_social(t):+.6f}"
          f"  direct {direct:+.6f}")

# Exact constants for the quadratic family: strong monotonicity mu,
# Lipschitz moduli, and the composite equilibrium-cost slope bound L_F.
constants = estimate_constants(quad, spec.strategy_sets, spec.theta_set,
                               theta_probe_radius=1e-3)
print(f"\nconstants: mu={constants.mu:.3f} l={constants.l:.3f} "
      f"l_theta={constants.l_theta:.3f} L_F={constants.L_F:.3f}")

# The centralized solver reproduces the closed form at every theta.
worst = 0.0
for t in np.linspace(0, 1, 101):
    x_solved = centralized_ne(spec, np.array([t]), tol=1e-12,
                              constants=constants)
    worst = max(worst, float(np.linalg.norm(x_solved - example1_ne(t))))
print(f"max |centralized - closed form| over 101 thetas: {worst:.2e}")

# Brute force over theta finds the social optimum at the right endpoint:
# the summed cost strictly decreases on [0, 1].
theta_star, f_star = grid_search_theta(spec, spec.theta_set, 1001,
                                       ne_tol=1e-12, constants=constants)
print(f"grid search: theta* = {theta_star[0]:.4f}, F* = {f_star:.4f}")
