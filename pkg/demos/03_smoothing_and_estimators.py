#!/usr/bin/env python3
"""Smoothing machinery: sphere/ball sampling, the two-point gradient
estimator, and the Moreau penalty gradient.

The equilibrium social cost is nonsmooth in the regulator decision (the
benchmark game has a kink where the strategy box starts to bind), so the
regulator optimizes a ball-smoothed surrogate instead.  Its gradient is
estimated from two cost evaluations along a random sphere direction; the
feasible set enters through the Moreau penalty gradient rather than a
projection.
"""

import numpy as np

from socopt import (BoxSet, SphereSampler, example1_game, example1_ne,
                    example1_social, finite_difference_smoothed_gradient,
                    mc_smoothed_value, moreau_gradient, stationarity_estimate,
                    two_point_estimate)

spec, _ = example1_game()

# --- sphere and ball sampling (counter-based generator, replayable) ----
sampler = SphereSampler(dim=3, seed=0)
draws = np.array([sampler.sphere() for _ in range(20000)])
print("sphere draws: max | ||u|| - 1 | =",
      float(np.abs(np.linalg.norm(draws, axis=1) - 1).max()))
print("empirical E[u u'] diag (expect 1/3):",
      np.round((draws[:, :, None] * draws[:, None, :]).mean(0).diagonal(), 4))

# --- two-point estimator on a linear function --------------------------
# g(z) = c'z: the sphere average of n (c'u) u recovers c exactly.
c = np.array([1.0, -2.0, 0.5])
xi = 1e-2
est = np.zeros(3)
m = 20000
for _ in range(m):
    u = sampler.sphere()
    est += two_point_estimate(float(c @ (xi * u)), 0.0, u, xi) / m
print("\ntwo-point mean vs true gradient:", np.round(est, 3), "vs", c)

# --- Moreau penalty gradient -------------------------------------------
box = BoxSet([1.0], [3.0])
for t in (2.2, 3.5, 0.4):
    g = moreau_gradient(np.array([t]), box, xi=0.5)
    print(f"moreau gradient at theta={t}: {g[0]:+.2f}")

# --- smoothed value and two independent gradient estimates -------------
# On the smooth branch the ball-smoothed cost has derivative -4 theta - 4.
theta = np.array([0.9])
f_smoothed = mc_smoothed_value(lambda t: example1_social(float(t[0])),
                               theta, xi=1e-3, samples=4000,
                               sampler=SphereSampler(1, seed=1))
print(f"\nsmoothed value at 0.9: {f_smoothed:.5f} "
      f"(unsmoothed {example1_social(0.9):.5f})")

oracle = lambda th: example1_ne(float(th[0]))
mc = stationarity_estimate(spec, theta, xi=1e-3, samples=20000,
                           ne_oracle=oracle, sampler=SphereSampler(1, seed=2))
fd = finite_difference_smoothed_gradient(
    lambda t: example1_social(float(t[0])), theta, xi=1e-3, h=1e-4,
    samples=20000, sampler=SphereSampler(1, seed=3))
print(f"two-point route:        {mc.mean[0]:+.4f} +- {mc.std_err[0]:.4f}")
print(f"finite-difference route: {fd.mean[0]:+.4f} +- {fd.std_err[0]:.4f}")
print("closed-form derivative:  -7.6000")
