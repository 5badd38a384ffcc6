"""Parametric games: strategy boxes, cost/gradient contracts, and exact
constants for the affine-pseudo-gradient (quadratic-cost) family.

A game couples N players, each minimizing a private cost
``f_i(x, theta)`` over a box ``X_i``, with a regulator decision
``theta`` constrained to a box ``Theta``.  All types are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "BoxSet",
    "GameSpec",
    "PlayerQuadratic",
    "QuadraticGameParams",
    "GameConstants",
    "project_box",
    "pseudo_gradient",
    "social_cost",
    "estimate_constants",
]

# corner enumeration switches to a coordinate-wise upper bound above this
_EXACT_CORNER_LIMIT = 2**21


def _frozen_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr = np.atleast_1d(arr)
    arr.setflags(write=False)
    return arr


def _frozen_matrix(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr = np.atleast_2d(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BoxSet:
    """Axis-aligned box ``{z : lower <= z <= upper}``.

    The only feasible-set shape supported in v1; the projection contract
    is what the solvers rely on, so richer convex sets can be slotted in
    later behind the same interface.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", _frozen_vector(self.lower))
        object.__setattr__(self, "upper", _frozen_vector(self.upper))
        if self.lower.shape != self.upper.shape:
            raise ValueError("lower and upper must have equal length")
        if np.any(self.lower > self.upper):
            raise ValueError("empty box: lower > upper in some coordinate")

    @property
    def dim(self) -> int:
        return self.lower.size

    def project(self, point) -> np.ndarray:
        """Euclidean projection onto the box (per-coordinate clamp)."""
        point = np.asarray(point, dtype=float)
        if point.shape != self.lower.shape:
            raise ValueError(
                f"dimension mismatch: point has shape {point.shape}, "
                f"box has dimension {self.dim}"
            )
        return np.clip(point, self.lower, self.upper)

    def contains(self, point, tol: float = 0.0) -> bool:
        point = np.asarray(point, dtype=float)
        return bool(
            np.all(point >= self.lower - tol) and np.all(point <= self.upper + tol)
        )

    def distance(self, point) -> float:
        """Euclidean distance from ``point`` to the box."""
        point = np.asarray(point, dtype=float)
        return float(np.linalg.norm(point - self.project(point)))

    def midpoint(self) -> np.ndarray:
        return (self.lower + self.upper) / 2.0

    def enlarged(self, radius: float) -> "BoxSet":
        """Box grown by ``radius`` in every coordinate (contains the
        Minkowski sum with a Euclidean ball of that radius)."""
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        return BoxSet(self.lower - radius, self.upper + radius)

    def corner_matrix(self) -> np.ndarray:
        """All 2^dim corners, one per row, in binary (lex) order."""
        d = self.dim
        if 2**d > _EXACT_CORNER_LIMIT:
            raise ValueError(f"too many corners to enumerate (dim={d})")
        idx = np.arange(2**d, dtype=np.int64)
        bits = (idx[:, None] >> np.arange(d)) & 1
        return self.lower + bits * (self.upper - self.lower)

    def max_corner_norm(self) -> float:
        """Largest Euclidean norm over the box (attained at a corner)."""
        return float(np.sqrt(np.sum(np.maximum(self.lower**2, self.upper**2))))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)


def project_box(point, box: BoxSet) -> np.ndarray:
    """Project ``point`` onto ``box``; see :meth:`BoxSet.project`."""
    return box.project(point)


def concat_boxes(boxes: Sequence[BoxSet]) -> BoxSet:
    """Product of boxes as one joint box over the stacked coordinates."""
    return BoxSet(
        np.concatenate([b.lower for b in boxes]),
        np.concatenate([b.upper for b in boxes]),
    )


@dataclass(frozen=True)
class GameSpec:
    """An N-player parametric game given through evaluation contracts.

    Parameters
    ----------
    dims : tuple of int
        Per-player strategy dimensions ``d_i``.
    theta_dim : int
        Dimension of the regulator decision.
    cost_fns : tuple of callables
        ``cost_fns[i](x, theta) -> float`` evaluates player i's cost at a
        joint strategy ``x`` (length ``sum(dims)``) and decision ``theta``.
        Must accept any real ``x`` and ``theta``.
    grad_fns : tuple of callables
        ``grad_fns[i](x, theta) -> ndarray`` returns player i's partial
        gradient with respect to its own block (length ``dims[i]``).
    strategy_sets : tuple of BoxSet
        Per-player strategy boxes, dimensions matching ``dims``.
    theta_set : BoxSet
        Feasible set of the regulator decision.
    """

    dims: tuple
    theta_dim: int
    cost_fns: tuple
    grad_fns: tuple
    strategy_sets: tuple
    theta_set: BoxSet

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "cost_fns", tuple(self.cost_fns))
        object.__setattr__(self, "grad_fns", tuple(self.grad_fns))
        object.__setattr__(self, "strategy_sets", tuple(self.strategy_sets))
        if any(d < 1 for d in self.dims):
            raise ValueError("player dimensions must be positive")
        if self.theta_dim < 1:
            raise ValueError("theta_dim must be positive")
        n = len(self.dims)
        if not (len(self.cost_fns) == len(self.grad_fns) == len(self.strategy_sets) == n):
            raise ValueError("per-player sequences must all have length n_players")
        for d, box in zip(self.dims, self.strategy_sets):
            if box.dim != d:
                raise ValueError("strategy set dimension inconsistent with dims")
        if self.theta_set.dim != self.theta_dim:
            raise ValueError("theta_set dimension inconsistent with theta_dim")

    @property
    def n_players(self) -> int:
        return len(self.dims)

    @property
    def joint_dim(self) -> int:
        return sum(self.dims)

    @cached_property
    def block_slices(self) -> tuple:
        offsets = np.cumsum((0,) + self.dims)
        return tuple(slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:]))

    @cached_property
    def joint_box(self) -> BoxSet:
        return concat_boxes(self.strategy_sets)


def pseudo_gradient(game: GameSpec, x, theta) -> np.ndarray:
    """Stack of own-block partial gradients, one block per player."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if x.size != game.joint_dim:
        raise ValueError(f"x has size {x.size}, expected {game.joint_dim}")
    return np.concatenate([np.atleast_1d(g(x, theta)) for g in game.grad_fns])


def social_cost(game: GameSpec, x, theta) -> float:
    """Sum of all players' costs at ``(x, theta)``."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return float(sum(f(x, theta) for f in game.cost_fns))


def per_player_costs(game: GameSpec, x, theta) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return np.array([f(x, theta) for f in game.cost_fns], dtype=float)


@dataclass(frozen=True)
class PlayerQuadratic:
    """One player's cost ``0.5 x'Px + x'(S theta) + b'x + w'theta + const``.

    ``P`` acts on the joint strategy, so cross-player couplings (for
    instance through an aggregate term) live in its off-diagonal blocks.
    """

    P: np.ndarray
    S: np.ndarray
    b: np.ndarray
    w: np.ndarray
    const: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "P", _frozen_matrix(self.P))
        object.__setattr__(self, "S", _frozen_matrix(self.S))
        object.__setattr__(self, "b", _frozen_vector(self.b))
        object.__setattr__(self, "w", _frozen_vector(self.w))
        d = self.b.size
        n = self.w.size
        if self.P.shape != (d, d):
            raise ValueError("P must be (d, d) with d = len(b)")
        if self.S.shape != (d, n):
            raise ValueError("S must be (d, n) with n = len(w)")
        if not np.allclose(self.P, self.P.T, atol=1e-12):
            raise ValueError("P must be symmetric")

    def value(self, x, theta) -> float:
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return float(
            0.5 * x @ self.P @ x
            + x @ (self.S @ theta)
            + self.b @ x
            + self.w @ theta
            + self.const
        )

    def grad_x(self, x, theta) -> np.ndarray:
        return self.P @ np.asarray(x, float) + self.S @ np.asarray(theta, float) + self.b

    def grad_theta(self, x, theta) -> np.ndarray:
        return self.S.T @ np.asarray(x, float) + self.w


@dataclass(frozen=True)
class QuadraticGameParams:
    """Affine-pseudo-gradient family: ``G(x, theta) = M x + T theta + r``.

    ``M``, ``T``, ``r`` are stacked from the players' own-block rows of
    their cost gradients, so the two evaluation routes (per-player cost
    terms vs. the assembled affine map) agree exactly; this is validated
    at construction.
    """

    dims: tuple
    theta_dim: int
    players: tuple
    M: np.ndarray
    T: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "M", _frozen_matrix(self.M))
        object.__setattr__(self, "T", _frozen_matrix(self.T))
        object.__setattr__(self, "r", _frozen_vector(self.r))
        d = sum(self.dims)
        if self.M.shape != (d, d) or self.T.shape != (d, self.theta_dim):
            raise ValueError("M/T shapes inconsistent with dims and theta_dim")
        if self.r.size != d:
            raise ValueError("r must have length d")
        offsets = np.cumsum((0,) + self.dims)
        for i, player in enumerate(self.players):
            sl = slice(int(offsets[i]), int(offsets[i + 1]))
            if player.b.size != d or player.w.size != self.theta_dim:
                raise ValueError("player cost terms must act on the joint strategy")
            ok = (
                np.allclose(self.M[sl], player.P[sl], atol=1e-12)
                and np.allclose(self.T[sl], player.S[sl], atol=1e-12)
                and np.allclose(self.r[sl], player.b[sl], atol=1e-12)
            )
            if not ok:
                raise ValueError(
                    f"player {i}: pseudo-gradient rows disagree with cost terms"
                )

    @classmethod
    def from_players(cls, dims, theta_dim, players) -> "QuadraticGameParams":
        """Assemble ``M``, ``T``, ``r`` from the players' own-block rows."""
        dims = tuple(int(d) for d in dims)
        d = sum(dims)
        offsets = np.cumsum((0,) + dims)
        M = np.zeros((d, d))
        T = np.zeros((d, int(theta_dim)))
        r = np.zeros(d)
        for i, player in enumerate(players):
            sl = slice(int(offsets[i]), int(offsets[i + 1]))
            M[sl] = player.P[sl]
            T[sl] = player.S[sl]
            r[sl] = player.b[sl]
        return cls(dims=dims, theta_dim=int(theta_dim), players=tuple(players),
                   M=M, T=T, r=r)

    @property
    def n_players(self) -> int:
        return len(self.dims)

    @property
    def joint_dim(self) -> int:
        return sum(self.dims)

    def pseudo_gradient(self, x, theta) -> np.ndarray:
        return self.M @ np.asarray(x, float) + self.T @ np.asarray(theta, float) + self.r

    def to_game_spec(self, strategy_sets, theta_set) -> GameSpec:
        """Wrap the cost terms as a :class:`GameSpec` (evaluation route)."""
        offsets = np.cumsum((0,) + self.dims)
        cost_fns = []
        grad_fns = []
        for i, player in enumerate(self.players):
            sl = slice(int(offsets[i]), int(offsets[i + 1]))
            # own-block rows only; cheaper than slicing the full gradient
            P_blk = player.P[sl]
            S_blk = player.S[sl]
            b_blk = player.b[sl]
            cost_fns.append(player.value)
            grad_fns.append(
                lambda x, theta, P=P_blk, S=S_blk, b=b_blk: (
                    P @ np.asarray(x, float) + S @ np.asarray(theta, float) + b
                )
            )
        return GameSpec(
            dims=self.dims,
            theta_dim=self.theta_dim,
            cost_fns=tuple(cost_fns),
            grad_fns=tuple(grad_fns),
            strategy_sets=tuple(strategy_sets),
            theta_set=theta_set,
        )


@dataclass(frozen=True)
class GameConstants:
    """Certified problem constants.

    ``mu`` (strong monotonicity), ``l`` (pseudo-gradient Lipschitz in x),
    ``l_prime`` (extended-mapping Lipschitz, ``mu <= l_prime <= l``),
    ``l_theta`` (pseudo-gradient Lipschitz in theta), ``L_x``/``L_theta``
    (cost Lipschitz in x/theta), ``B_X`` (strategy-norm bound) and the
    composite ``L_F = L_x * l_theta / mu + L_theta`` bounding the
    per-player equilibrium-cost slope in theta.
    """

    mu: float
    l: float
    l_prime: float
    l_theta: float
    L_x: float
    L_theta: float
    B_X: float
    L_F: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive (strong monotonicity)")
        slack = 1e-9 * max(1.0, self.l)
        if not (self.mu <= self.l_prime + slack and self.l_prime <= self.l + slack):
            raise ValueError("need mu <= l_prime <= l")
        expected = self.L_x * self.l_theta / self.mu + self.L_theta
        if not np.isclose(self.L_F, expected, rtol=1e-12, atol=1e-12):
            raise ValueError("L_F must equal L_x * l_theta / mu + L_theta")

    @classmethod
    def compose(cls, mu, l, l_prime, l_theta, L_x, L_theta, B_X) -> "GameConstants":
        return cls(mu=mu, l=l, l_prime=l_prime, l_theta=l_theta, L_x=L_x,
                   L_theta=L_theta, B_X=B_X,
                   L_F=L_x * l_theta / mu + L_theta)


def _affine_norm_max(A: np.ndarray, B: np.ndarray | None, c: np.ndarray,
                     x_box: BoxSet, theta_box: BoxSet | None) -> float:
    """sup of ``|| A x + B theta + c ||`` over box corners.

    Exact when the corner count is tractable (the norm of an affine map
    is convex, so the sup over a box sits at a corner); otherwise falls
    back to a per-row interval bound, which is a sound upper bound for
    separable boxes.
    """
    n_x = x_box.dim
    n_t = 0 if theta_box is None else theta_box.dim
    if 2 ** (n_x + n_t) <= _EXACT_CORNER_LIMIT:
        x_corners = x_box.corner_matrix()
        vals_x = x_corners @ A.T + c  # (2^d, out)
        if theta_box is None:
            return float(np.sqrt((vals_x**2).sum(axis=1).max()))
        best = 0.0
        for t_corner in theta_box.corner_matrix():
            shifted = vals_x + B @ t_corner
            best = max(best, float((shifted**2).sum(axis=1).max()))
        return float(np.sqrt(best))
    # per-row maximum of |row(z) + c_r| over the product box
    mx, hx = x_box.midpoint(), (x_box.upper - x_box.lower) / 2.0
    center = A @ mx + c
    spread = np.abs(A) @ hx
    if theta_box is not None:
        mt, ht = theta_box.midpoint(), (theta_box.upper - theta_box.lower) / 2.0
        center = center + B @ mt
        spread = spread + np.abs(B) @ ht
    row_max = np.abs(center) + spread
    return float(np.linalg.norm(row_max))


def estimate_constants(quad: QuadraticGameParams, strategy_sets, theta_set: BoxSet,
                       theta_probe_radius: float = 0.0) -> GameConstants:
    """Exact constants for a quadratic game.

    ``mu`` and ``l`` come from the symmetric part and the spectral norm
    of ``M``; ``l_theta`` is the spectral norm of ``T``.  The cost
    Lipschitz constants are certified over the joint strategy box and
    ``theta_set`` enlarged by ``theta_probe_radius`` (the region visited
    by the smoothing probes); a global-in-theta constant does not exist
    for costs with a bilinear x-theta term.  ``l_prime`` is set to ``l``,
    which is conservative and preserves every downstream bound.
    """
    joint = concat_boxes(strategy_sets)
    if joint.dim != quad.joint_dim:
        raise ValueError("strategy sets inconsistent with game dims")
    if theta_set.dim != quad.theta_dim:
        raise ValueError("theta_set inconsistent with theta_dim")

    sym = (quad.M + quad.M.T) / 2.0
    mu = float(np.linalg.eigvalsh(sym).min())
    if mu <= 0:
        raise ValueError(
            f"pseudo-gradient is not strongly monotone (lambda_min = {mu:.3e})"
        )
    l = float(np.linalg.norm(quad.M, 2))
    l_theta = float(np.linalg.norm(quad.T, 2))
    theta_probe = theta_set.enlarged(theta_probe_radius)

    L_x = 0.0
    L_theta = 0.0
    for player in quad.players:
        L_x = max(L_x, _affine_norm_max(player.P, player.S, player.b,
                                        joint, theta_probe))
        L_theta = max(
            L_theta,
            _affine_norm_max(player.S.T, None, player.w, joint, None),
        )

    return GameConstants.compose(
        mu=mu, l=l, l_prime=l, l_theta=l_theta,
        L_x=L_x, L_theta=L_theta, B_X=joint.max_corner_norm(),
    )
