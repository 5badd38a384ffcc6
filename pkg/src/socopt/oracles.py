"""Independent ground truths used by tests and the acceptance harness.

Nothing here feeds the algorithms: the closed forms, the brute-force
grid search, and the finite-difference gradient exist solely to verify
the solver outputs through a second route.
"""

from __future__ import annotations

import itertools

import numpy as np

from .games import (BoxSet, GameSpec, PlayerQuadratic, QuadraticGameParams,
                    social_cost)
from .ne_seeking import centralized_ne
from .smoothing import SmoothedGradientEstimate, SphereSampler

__all__ = [
    "example1_quadratic",
    "example1_game",
    "example1_ne",
    "example1_social",
    "example1_cost_slope_bound",
    "grid_search_theta",
    "finite_difference_smoothed_gradient",
]

# two symmetric players, costs x_i^2 - 2 x_{-i} - 2 x_i theta,
# strategies on [2/3, 1], regulator decision on [0, 1]
_X_LO, _X_HI = 2.0 / 3.0, 1.0


def example1_strategy_sets() -> tuple:
    return (BoxSet([_X_LO], [_X_HI]), BoxSet([_X_LO], [_X_HI]))


def example1_theta_set() -> BoxSet:
    return BoxSet([0.0], [1.0])


def example1_quadratic() -> QuadraticGameParams:
    """Two-player benchmark game as explicit quadratic cost terms."""
    players = []
    for i in range(2):
        other = 1 - i
        P = np.zeros((2, 2))
        P[i, i] = 2.0
        S = np.zeros((2, 1))
        S[i, 0] = -2.0
        b = np.zeros(2)
        b[other] = -2.0
        players.append(PlayerQuadratic(P=P, S=S, b=b, w=np.zeros(1)))
    return QuadraticGameParams.from_players((1, 1), 1, players)


def example1_game() -> tuple[GameSpec, QuadraticGameParams]:
    quad = example1_quadratic()
    spec = quad.to_game_spec(example1_strategy_sets(), example1_theta_set())
    return spec, quad


def example1_ne(theta: float) -> np.ndarray:
    """Closed-form equilibrium: both players play ``clamp(theta, 2/3, 1)``.

    Inside [0, 1] this reproduces the two known branches; the clamp
    extends it continuously to any real ``theta``, consistent with the
    projection characterization of the equilibrium.
    """
    theta = float(np.asarray(theta).reshape(()))
    v = min(max(theta, _X_LO), _X_HI)
    return np.array([v, v])


def example1_social(theta: float) -> float:
    """Closed-form social cost at the equilibrium, ``theta`` in [0, 1].

    First branch re-derived by summing the two per-player costs at
    x = (2/3, 2/3): the widely quoted per-player value is half of it and
    fails the continuity check at theta = 2/3 that both branches must
    satisfy.
    """
    theta = float(np.asarray(theta).reshape(()))
    if not 0.0 <= theta <= 1.0:
        raise ValueError("closed form stated on [0, 1] only")
    if theta <= _X_LO:
        return -(8.0 / 3.0) * theta - 16.0 / 9.0
    return -2.0 * theta**2 - 4.0 * theta


def example1_cost_slope_bound() -> float:
    """Exact per-player Lipschitz constant of the equilibrium cost.

    Each player's equilibrium cost is piecewise smooth in theta with
    slopes -4/3 on [0, 2/3] and -2 theta - 2 on [2/3, 1]; the largest
    magnitude is 4 at theta = 1.  This is the tightest constant valid in
    the outer-step certificates (the composite bound from
    :func:`socopt.games.estimate_constants` is looser).
    """
    return max(4.0 / 3.0, 2.0 * 1.0 + 2.0)


def grid_search_theta(game: GameSpec, theta_set: BoxSet,
                      grid_points_per_dim: int, ne_tol: float,
                      gamma: float | None = None,
                      constants=None) -> tuple[np.ndarray, float]:
    """Brute-force social optimum over a regular grid.

    Evaluates ``social_cost(centralized_ne(theta), theta)`` at every grid
    point, in lexicographic order, keeping the first strict minimum so
    ties break toward the lexicographically smallest point.  Restricted
    to ``theta_set.dim <= 2``: beyond that a grid stops being a
    trustworthy oracle.
    """
    if theta_set.dim > 2:
        raise ValueError("grid search restricted to theta dimension <= 2")
    if grid_points_per_dim < 2:
        raise ValueError("need at least two grid points per dimension")
    axes = [
        np.linspace(theta_set.lower[j], theta_set.upper[j], grid_points_per_dim)
        for j in range(theta_set.dim)
    ]
    best_theta = None
    best_value = np.inf
    for point in itertools.product(*axes):
        theta = np.array(point)
        x = centralized_ne(game, theta, tol=ne_tol, gamma=gamma,
                           constants=constants)
        value = social_cost(game, x, theta)
        if value < best_value:
            best_value = value
            best_theta = theta
    return best_theta, float(best_value)


def finite_difference_smoothed_gradient(f_eval, theta, xi: float, h: float,
                                        samples: int, sampler: SphereSampler
                                        ) -> SmoothedGradientEstimate:
    """Central differences of the ball-smoothed value, per coordinate.

    The same ball draws are reused across the +h/-h evaluations (common
    random numbers), so the Monte-Carlo noise of the smoothing average
    cancels and the standard error reflects only the directional
    variation.  Validates the differentiability of the smoothed
    surrogate independently of the two-point estimator.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    quotients = np.empty((samples, n))
    for m in range(samples):
        shift = xi * sampler.ball()
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            up = float(f_eval(theta + e + shift))
            down = float(f_eval(theta - e + shift))
            quotients[m, j] = (up - down) / (2.0 * h)
    mean = quotients.mean(axis=0)
    if samples > 1:
        std_err = quotients.std(axis=0, ddof=1) / np.sqrt(samples)
    else:
        std_err = np.zeros(n)
    return SmoothedGradientEstimate(mean=mean, std_err=std_err, samples=samples)
