"""Randomized and Moreau smoothing.

Uniform-ball smoothing turns the nonsmooth equilibrium-cost map into a
differentiable surrogate whose gradient admits the two-point estimator
``(n / xi) (g(z + xi u) - g(z)) u`` with ``u`` uniform on the unit
sphere.  The feasible-set indicator is smoothed via its Moreau envelope,
whose gradient is the scaled projection residual
``(theta - P_Theta(theta)) / xi``.

All randomness flows through :class:`SphereSampler`, a counter-based
(Philox) generator with explicit 64-bit seeding and deterministic stream
derivation, so every experiment is replayable bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import BoxSet, GameSpec, social_cost

__all__ = [
    "SphereSampler",
    "SmoothedGradientEstimate",
    "sample_unit_sphere",
    "sample_unit_ball",
    "two_point_estimate",
    "moreau_gradient",
    "mc_smoothed_value",
    "stationarity_estimate",
]


@dataclass(frozen=True)
class SmoothedGradientEstimate:
    """Monte-Carlo mean with per-coordinate standard errors."""

    mean: np.ndarray
    std_err: np.ndarray
    samples: int

    def __post_init__(self):
        mean = np.atleast_1d(np.array(self.mean, dtype=float))
        std_err = np.atleast_1d(np.array(self.std_err, dtype=float))
        mean.setflags(write=False)
        std_err.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std_err", std_err)
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if np.any(self.std_err < 0):
            raise ValueError("standard errors must be nonnegative")

    @property
    def mean_norm(self) -> float:
        return float(np.linalg.norm(self.mean))


class SphereSampler:
    """Deterministic sampler for uniform sphere and ball directions.

    Wraps a Philox (counter-based) bit generator.  ``stream`` selects an
    independent substream of the same seed, so concurrent workers can
    derive non-overlapping generators via :meth:`spawn` with an
    order-fixed reduction on their results.
    """

    def __init__(self, dim: int, seed: int, stream: tuple = ()):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        self._rng = np.random.Generator(np.random.Philox(seq))

    def spawn(self, index: int) -> "SphereSampler":
        """Independent sampler for worker ``index`` (same seed, new stream)."""
        return SphereSampler(self.dim, self.seed, self.stream + (int(index),))

    def sphere(self) -> np.ndarray:
        """Uniform draw on the unit sphere (normalized Gaussian)."""
        while True:
            v = self._rng.standard_normal(self.dim)
            norm = np.linalg.norm(v)
            if norm > 1e-12:  # resample the measure-zero degenerate draw
                return v / norm

    def ball(self) -> np.ndarray:
        """Uniform draw in the closed unit ball."""
        radius = self._rng.random() ** (1.0 / self.dim)
        return radius * self.sphere()

    def __repr__(self):
        return f"SphereSampler(dim={self.dim}, seed={self.seed}, stream={self.stream})"


def sample_unit_sphere(sampler: SphereSampler) -> np.ndarray:
    return sampler.sphere()


def sample_unit_ball(sampler: SphereSampler) -> np.ndarray:
    return sampler.ball()


def two_point_estimate(g_pert: float, g_base: float, u, xi: float) -> np.ndarray:
    """Two-point gradient sample ``(n / xi) (g_pert - g_base) u``.

    ``g_pert`` and ``g_base`` are the function values at ``z + xi u`` and
    ``z``.  For an L-Lipschitz function every sample satisfies
    ``||.|| <= n L``.
    """
    if xi <= 0:
        raise ValueError("xi must be positive")
    u = np.asarray(u, dtype=float)
    return (u.size / xi) * (g_pert - g_base) * u


def moreau_gradient(theta, theta_set: BoxSet, xi: float) -> np.ndarray:
    """Gradient of the Moreau-smoothed indicator:
    ``(theta - P_Theta(theta)) / xi``; zero on the set, (1/xi)-Lipschitz."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    theta = np.asarray(theta, dtype=float)
    return (theta - theta_set.project(theta)) / xi


def mc_smoothed_value(f_eval, theta, xi: float, samples: int,
                      sampler: SphereSampler) -> float:
    """Monte-Carlo estimate of the ball-smoothed value
    ``E[f(theta + xi nu)]`` over ``samples`` uniform ball draws."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    theta = np.asarray(theta, dtype=float)
    total = 0.0
    for _ in range(samples):
        total += float(f_eval(theta + xi * sampler.ball()))
    return total / samples


def stationarity_estimate(game: GameSpec, theta, xi: float, samples: int,
                          ne_oracle, sampler: SphereSampler) -> SmoothedGradientEstimate:
    """Monte-Carlo estimate of the smoothed stationarity map at ``theta``.

    Averages, over ``samples`` fresh sphere draws, the summed two-point
    samples of the equilibrium costs (equilibria supplied by
    ``ne_oracle``, expected exact), then adds the Moreau penalty
    gradient.  The mean's norm is the measured proxy for the smoothed
    stationarity measure; ``std_err`` is the per-coordinate standard
    error of the Monte-Carlo mean.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    x_base = ne_oracle(theta)
    f_base = social_cost(game, x_base, theta)
    draws = np.empty((samples, n))
    for m in range(samples):
        u = sampler.sphere()
        theta_pert = theta + xi * u
        x_pert = ne_oracle(theta_pert)
        f_pert = social_cost(game, x_pert, theta_pert)
        draws[m] = two_point_estimate(f_pert, f_base, u, xi)
    mean = draws.mean(axis=0) + moreau_gradient(theta, game.theta_set, xi)
    if samples > 1:
        std_err = draws.std(axis=0, ddof=1) / np.sqrt(samples)
    else:
        std_err = np.zeros(n)
    return SmoothedGradientEstimate(mean=mean, std_err=std_err, samples=samples)
