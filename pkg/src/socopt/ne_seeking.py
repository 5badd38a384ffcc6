"""Nash-equilibrium seeking.

Two solvers share the projected-pseudo-gradient core:

* :func:`ne_seek` — the distributed, partial-decision-information loop.
  Each player keeps an estimate of the whole joint strategy, mixes it
  with its neighbors' estimates through the doubly stochastic weights,
  takes a projected gradient step on its own block, and adopts the mixed
  values for everyone else's blocks.
* :func:`centralized_ne` — the full-information fixed-point iteration,
  used as the exact inner oracle and by the verification harness.

The distributed loop contracts linearly at rate ``q`` (spectral norm of
a 2x2 coupling matrix) once the step size sits below
:func:`step_size_bound`, which yields the computable accuracy
certificate :func:`contraction_error_bound`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .games import GameConstants, GameSpec, pseudo_gradient

__all__ = [
    "DivergenceError",
    "EstimateState",
    "NEResult",
    "step_size_bound",
    "contraction_factor",
    "contraction_error_bound",
    "ne_residual",
    "centralized_ne",
    "centralized_ne_iters",
    "ne_seek",
]

# graphs with consensus exact in one hop; sigma-dependent terms vanish
_DEGENERATE_SIGMA = 1e-12


class DivergenceError(RuntimeError):
    """Non-finite values encountered; carries the offending iteration."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


@dataclass(frozen=True)
class EstimateState:
    """Per-player estimates of the joint strategy.

    Row i is player i's estimate vector; its own block holds its actual
    strategy.  ``stacked()`` gives the concatenation used by the
    contraction certificate.
    """

    estimates: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        arr = np.array(self.estimates, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "estimates", arr)

    @classmethod
    def from_midpoints(cls, game: GameSpec) -> "EstimateState":
        row = game.joint_box.midpoint()
        return cls(np.tile(row, (game.n_players, 1)))

    def stacked(self) -> np.ndarray:
        return self.estimates.ravel()


@dataclass(frozen=True)
class NEResult:
    x: np.ndarray
    residual: float
    iterations: int
    epsilon_bound: float
    consensus_gap: float
    history: np.ndarray | None = None

    def __post_init__(self):
        if self.residual < 0 or self.epsilon_bound < 0:
            raise ValueError("residual and epsilon_bound must be nonnegative")


def step_size_bound(constants: GameConstants, sigma_bar: float) -> float:
    """Supremum of certified inner step sizes (open interval).

    Returns ``min{1, sigma/(3l), 2 mu / l^2, 2 mu (1 - sigma^2) / a}``
    with the printed polynomial ``a``.  When ``sigma_bar`` is numerically
    zero the consensus error vanishes in one hop, so the sigma-dependent
    terms are dropped and the bound is ``min{1, 2 mu / l^2}``.  Callers
    should step strictly inside the bound; at the endpoint the
    contraction factor can equal one.
    """
    if not 0 <= sigma_bar < 1:
        raise ValueError("sigma_bar must lie in [0, 1)")
    mu, l, lp = constants.mu, constants.l, constants.l_prime
    if sigma_bar < _DEGENERATE_SIGMA:
        bound = min(1.0, 2.0 * mu / l**2)
    else:
        s2 = sigma_bar**2
        a = (
            s2 * (2 * l * lp + lp**2 + 4 * mu * lp + 2 * l**2)
            + 2 * (l**2 * lp**2 + mu * lp**2 + 2 * l**2 * lp**2) * s2
            + 2 * l**2 * lp**2 * s2
        )
        bound = min(1.0, sigma_bar / (3 * l), 2 * mu / l**2,
                    2 * mu * (1 - s2) / a)
    if bound <= 0:
        raise ValueError("step-size bound is nonpositive; constants invalid")
    return float(bound)


def contraction_factor(gamma: float, constants: GameConstants,
                       n_players: int, sigma_bar: float) -> float:
    """Spectral norm of the 2x2 coupling matrix governing the linear rate.

    The matrix couples the distance-to-equilibrium and consensus-error
    components; its closed-form symmetric eigenvalues give the norm.
    The value is returned even when it is >= 1 (signals the step size is
    too large); callers must check before relying on contraction.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    mu, l, lp = constants.mu, constants.l, constants.l_prime
    n = float(n_players)
    a11 = 1.0 - 2.0 * gamma * mu / n + gamma**2 * l**2 / n
    off = (gamma * (l + lp) + gamma**2 * l * lp) / math.sqrt(n) * sigma_bar
    a22 = (1.0 + 2.0 * gamma * l + gamma**2 * l**2) * sigma_bar**2
    half_trace = (a11 + a22) / 2.0
    radius = math.sqrt(((a11 - a22) / 2.0) ** 2 + off**2)
    return float(max(abs(half_trace + radius), abs(half_trace - radius)))


def contraction_error_bound(init_norm_sq: float, n_players: int, b_x: float,
                            q: float, t_k: int) -> float:
    """Certified bound ``2 (||x0||^2 + N B_X^2) q^t`` on the squared
    distance between the inner iterate and the equilibrium after ``t_k``
    rounds from a start with stacked squared norm ``init_norm_sq``."""
    if not 0 < q < 1:
        raise ValueError(f"no certificate: contraction factor {q} not in (0, 1)")
    if t_k < 0:
        raise ValueError("t_k must be nonnegative")
    return float(2.0 * (init_norm_sq + n_players * b_x**2) * q**t_k)


def ne_residual(game: GameSpec, x, theta, gamma_probe: float) -> float:
    """Natural-map residual ``||x - P_X(x - gamma G(x, theta))||``.

    Zero exactly at a Nash equilibrium (projected-gradient fixed point).
    """
    if gamma_probe <= 0:
        raise ValueError("gamma_probe must be positive")
    x = np.asarray(x, dtype=float)
    step = x - gamma_probe * pseudo_gradient(game, x, theta)
    return float(np.linalg.norm(x - game.joint_box.project(step)))


def centralized_ne_iters(game: GameSpec, theta, tol: float = 1e-10,
                         max_iter: int = 100_000, gamma: float | None = None,
                         constants: GameConstants | None = None,
                         x0: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """:func:`centralized_ne` plus the iteration count it took."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if gamma is None:
        if constants is None:
            raise ValueError("need either gamma or constants")
        gamma = min(1.0, constants.mu / constants.l**2)
    theta = np.asarray(theta, dtype=float)
    box = game.joint_box
    x = box.midpoint() if x0 is None else box.project(np.asarray(x0, float))
    residual = math.inf
    for it in range(1, max_iter + 1):
        x_next = box.project(x - gamma * pseudo_gradient(game, x, theta))
        residual = float(np.linalg.norm(x_next - x))
        x = x_next
        if residual <= tol:
            return x, it
    raise RuntimeError(
        f"centralized solver: no convergence after {max_iter} iterations "
        f"(last residual {residual:.3e})"
    )


def centralized_ne(game: GameSpec, theta, tol: float = 1e-10,
                   max_iter: int = 100_000, gamma: float | None = None,
                   constants: GameConstants | None = None,
                   x0: np.ndarray | None = None) -> np.ndarray:
    """Full-information projected pseudo-gradient fixed-point iteration.

    With ``gamma = min(1, mu / l^2)`` (derived from ``constants`` when not
    given) the iteration contracts under strong monotonicity.  Stops once
    the natural-map residual at step size ``gamma`` drops to ``tol``.
    """
    x, _ = centralized_ne_iters(game, theta, tol=tol, max_iter=max_iter,
                                gamma=gamma, constants=constants, x0=x0)
    return x


def ne_seek(game: GameSpec, graph, theta, gamma: float, t_max: int,
            init: EstimateState | None = None,
            constants: GameConstants | None = None,
            residual_probe: float | None = None,
            record_history: bool = False) -> NEResult:
    """Distributed equilibrium seeking under partial-decision information.

    Runs exactly ``t_max`` synchronous rounds.  Per round, every player
    mixes all estimate vectors with its row of the adjacency matrix,
    projects a gradient step on its own block, and copies the mixed
    values for the remaining blocks.  Deterministic; the per-player
    updates inside a round depend only on the previous round.

    When ``constants`` are supplied the result carries the certified
    accuracy bound from :func:`contraction_error_bound` (infinity when
    the contraction factor is not below one), and a warning is emitted
    if ``gamma`` exceeds :func:`step_size_bound`.
    """
    if t_max < 0:
        raise ValueError("t_max must be nonnegative")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    theta = np.asarray(theta, dtype=float)
    A = graph.adjacency
    n = game.n_players
    if A.shape[0] != n:
        raise ValueError("graph size inconsistent with the game")
    if init is None:
        init = EstimateState.from_midpoints(game)
    if init.estimates.shape != (n, game.joint_dim):
        raise ValueError("init estimates must have shape (N, d)")
    if not np.all(np.isfinite(init.estimates)):
        raise DivergenceError("non-finite initial estimates", 0)

    q = math.nan
    if constants is not None:
        bound = step_size_bound(constants, graph.sigma_bar)
        if gamma > bound * (1.0 + 1e-12):
            warnings.warn(
                f"gamma={gamma:.3e} exceeds the certified bound {bound:.3e}; "
                "linear-rate certificate void", RuntimeWarning, stacklevel=2)
        q = contraction_factor(gamma, constants, n, graph.sigma_bar)

    slices = game.block_slices
    estimates = init.estimates.copy()
    history = [estimates.copy()] if record_history else None
    for t in range(t_max):
        mixed = A @ estimates
        nxt = mixed.copy()
        for i in range(n):
            sl = slices[i]
            grad_i = game.grad_fns[i](mixed[i], theta)
            nxt[i, sl] = game.strategy_sets[i].project(mixed[i, sl] - gamma * grad_i)
        estimates = nxt
        if not np.all(np.isfinite(estimates)):
            raise DivergenceError("distributed solver diverged", t + 1)
        if record_history:
            history.append(estimates.copy())

    x = np.concatenate([estimates[i, slices[i]] for i in range(n)])
    probe = residual_probe if residual_probe is not None else gamma
    residual = ne_residual(game, x, theta, probe)
    gap = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            gap = max(gap, float(np.linalg.norm(estimates[i] - estimates[j])))

    eps = math.inf
    if constants is not None and 0 < q < 1:
        eps = contraction_error_bound(
            float(init.stacked() @ init.stacked()), n, constants.B_X, q, t_max)

    return NEResult(
        x=x, residual=residual, iterations=t_max, epsilon_bound=eps,
        consensus_gap=gap,
        history=np.array(history) if record_history else None,
    )
