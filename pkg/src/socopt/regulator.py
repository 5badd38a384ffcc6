"""The regulator's outer loop: an inexact smoothing-enabled zeroth-order
method driving the social cost of the low-level game toward a
stationary point.

Per outer iteration the regulator draws a uniform sphere direction,
obtains (inexact or exact) equilibria at the base and probed decisions,
forms the summed two-point gradient sample, and descends on it plus the
Moreau penalty gradient of the feasible set.  Iterates are never
projected; excursions outside the feasible set are pulled back by the
penalty term, and their size is bounded by the smoothing parameter.

Runs are deterministic given the seed and produce a structured trace
(one record per iteration) that the verification harness replays.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .games import GameConstants, GameSpec, per_player_costs, social_cost
from .graphs import CommGraph
from .ne_seeking import (DivergenceError, EstimateState, centralized_ne_iters,
                         contraction_error_bound, contraction_factor, ne_seek)
from .smoothing import SphereSampler, moreau_gradient, stationarity_estimate

__all__ = [
    "RegulatorConfig",
    "IterationRecord",
    "RunTrace",
    "certified_outer_step",
    "inner_iteration_schedule",
    "zo_social_gradient",
    "regulator_step",
    "run",
    "read_trace_csv",
]

_FORMULA_NAMES = {
    "log": math.log, "ln": math.log, "exp": math.exp, "sqrt": math.sqrt,
    "ceil": math.ceil, "floor": math.floor, "min": min, "max": max,
}


def certified_outer_step(xi: float, theta_dim: int, n_players: int,
                         lipschitz_f: float, exact: bool) -> float:
    """Largest outer step size covered by the convergence guarantee:
    ``xi / (4 (n N L_F + 1))`` inexact, ``xi / (2 (n N L_F + 1))`` exact."""
    if xi <= 0 or theta_dim < 1 or n_players < 1 or lipschitz_f < 0:
        raise ValueError("arguments must be positive")
    denom = (2.0 if exact else 4.0) * (theta_dim * n_players * lipschitz_f + 1.0)
    return xi / denom


def inner_iteration_schedule(k: int, s: float, q: float, floor: int = 1) -> int:
    """Round count ``max(floor, ceil(-s ln(k+1) / ln q))`` keeping the
    inner error summable at exponent ``s``; needs ``q`` in (0, 1)."""
    if not 0 < q < 1:
        raise ValueError(f"schedule needs a contraction factor in (0, 1), got {q}")
    if not 0 <= s < 1:
        raise ValueError("s must lie in [0, 1)")
    if k < 0:
        raise ValueError("k must be nonnegative")
    needed = math.ceil(-s * math.log(k + 1) / math.log(q))
    return max(int(floor), int(needed))


def _eval_schedule_formula(formula: str, k: int, floor: int) -> int:
    names = dict(_FORMULA_NAMES)
    names["k"] = k
    value = eval(formula, {"__builtins__": {}}, names)  # config-supplied arithmetic only
    return max(int(floor), int(math.ceil(value)))


def zo_social_gradient(game: GameSpec, ne_solver, theta, xi: float, u,
                       t_k: int | None) -> np.ndarray:
    """Summed two-point gradient sample of the equilibrium social cost.

    ``ne_solver(theta, t_k)`` must return a joint strategy; it is called
    twice with the same budget, at ``theta + xi u`` and ``theta``, and
    the summed cost differences are scaled into a gradient sample along
    ``u``.
    """
    grad, _, _ = _zo_gradient_details(game, ne_solver, theta, xi, u, t_k)
    return grad


def _zo_gradient_details(game, ne_solver, theta, xi, u, t_k):
    if xi <= 0:
        raise ValueError("xi must be positive")
    theta = np.asarray(theta, dtype=float)
    u = np.asarray(u, dtype=float)
    theta_pert = theta + xi * u
    x_pert = ne_solver(theta_pert, t_k)
    x_base = ne_solver(theta, t_k)
    diff = social_cost(game, x_pert, theta_pert) - social_cost(game, x_base, theta)
    grad = (theta.size / xi) * diff * u
    return grad, x_base, x_pert


def regulator_step(theta, zo_grad, theta_set, xi: float, alpha: float) -> np.ndarray:
    """One descent step ``theta - alpha (zo_grad + moreau)``.

    No projection: the Moreau penalty gradient supplies the pull toward
    the feasible set.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    theta = np.asarray(theta, dtype=float)
    direction = np.asarray(zo_grad, dtype=float) + moreau_gradient(theta, theta_set, xi)
    result = theta - alpha * direction
    if not np.all(np.isfinite(result)):
        raise DivergenceError("regulator update produced non-finite decision", -1)
    return result


@dataclass(frozen=True)
class RegulatorConfig:
    """All tunables of one outer run.

    ``alpha_mode`` selects a fixed step (``alpha``) or the
    ``alpha0 / sqrt(K)`` schedule.  ``schedule`` selects the inner round
    count: ``"auto"`` derives it from the contraction factor and the
    exponent ``s``, ``"fixed"`` uses ``t_fixed``, ``"formula"`` evaluates
    ``t_formula`` (an arithmetic expression in ``k``).  ``lipschitz_f``
    overrides the constant used by the step-size certificate; without it
    the certificate falls back to the composed game constants, and a run
    with neither is refused.
    """

    k_outer: int
    xi: float
    inner_mode: str = "inexact"
    alpha_mode: str = "sqrt_k"
    alpha: float | None = None
    alpha0: float | None = None
    s: float = 0.5
    schedule: str = "auto"
    t_fixed: int | None = None
    t_formula: str | None = None
    t_floor: int = 1
    gamma: float | None = None
    seed: int = 0
    diag_samples: int = 2000
    diag_every: int = 50
    theta0: tuple | None = None
    lipschitz_f: float | None = None
    allow_uncertified_alpha: bool = False
    warm_start: bool = False
    ne_tol: float = 1e-10
    ne_max_iter: int = 100_000

    def __post_init__(self):
        if self.k_outer < 0:
            raise ValueError("k_outer must be nonnegative")
        if self.xi <= 0:
            raise ValueError("xi must be positive")
        if self.inner_mode not in ("inexact", "exact"):
            raise ValueError("inner_mode must be 'inexact' or 'exact'")
        if self.alpha_mode not in ("fixed", "sqrt_k"):
            raise ValueError("alpha_mode must be 'fixed' or 'sqrt_k'")
        if self.alpha_mode == "fixed" and (self.alpha is None or self.alpha <= 0):
            raise ValueError("fixed alpha_mode needs alpha > 0")
        if self.alpha_mode == "sqrt_k" and self.alpha0 is not None and self.alpha0 <= 0:
            raise ValueError("alpha0 must be positive")
        if not 0 <= self.s < 1:
            raise ValueError("s must lie in [0, 1)")
        if self.schedule not in ("auto", "fixed", "formula"):
            raise ValueError("schedule must be 'auto', 'fixed' or 'formula'")
        if self.schedule == "fixed" and (self.t_fixed is None or self.t_fixed < 1):
            raise ValueError("fixed schedule needs t_fixed >= 1")
        if self.schedule == "formula":
            if not self.t_formula:
                raise ValueError("formula schedule needs t_formula")
            _eval_schedule_formula(self.t_formula, 0, self.t_floor)
        if self.t_floor < 1:
            raise ValueError("t_floor must be >= 1")
        if self.diag_samples < 1:
            raise ValueError("diag_samples must be >= 1")
        if self.diag_every < 0:
            raise ValueError("diag_every must be >= 0 (0 disables diagnostics)")
        if self.theta0 is not None:
            object.__setattr__(self, "theta0",
                               tuple(float(v) for v in np.atleast_1d(self.theta0)))
        if self.ne_tol <= 0:
            raise ValueError("ne_tol must be positive")

    def resolve_alpha(self, certificate: float) -> float:
        """Actual step size; an omitted ``alpha0`` defaults to the largest
        certified step (``alpha = certificate``)."""
        if self.alpha_mode == "fixed":
            return float(self.alpha)
        if self.alpha0 is None:
            return float(certificate)
        return float(self.alpha0) / math.sqrt(max(self.k_outer, 1))

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if isinstance(value, tuple):
                value = list(value)
            out[name] = value
        return out


@dataclass(frozen=True)
class IterationRecord:
    k: int
    theta: np.ndarray
    t_k: int
    epsilon_k_bound: float
    epsilon_k_measured: float
    social_cost_at_inexact_ne: float
    per_player_costs: np.ndarray
    grad_estimate_norm: float
    dist_to_theta_set: float
    stationarity_mc_norm: float

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        costs = np.array(self.per_player_costs, dtype=float)
        theta.setflags(write=False)
        costs.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "per_player_costs", costs)
        if self.dist_to_theta_set < 0:
            raise ValueError("dist_to_theta_set must be nonnegative")
        if self.t_k < 1:
            raise ValueError("t_k must be >= 1")


@dataclass(frozen=True)
class RunTrace:
    config: dict
    records: tuple
    final_theta: np.ndarray
    wall_time_s: float
    alpha_used: float
    alpha_certificate: float
    certificate_violated: bool
    q_inner: float
    best_k: int
    best_theta: np.ndarray
    best_stationarity: float

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def summary(self) -> dict:
        return {
            "config": self.config,
            "iterations": len(self.records),
            "final_theta": [float(v) for v in np.atleast_1d(self.final_theta)],
            "best_theta": [float(v) for v in np.atleast_1d(self.best_theta)],
            "best_k": self.best_k,
            "best_stationarity": self.best_stationarity,
            "alpha_used": self.alpha_used,
            "alpha_certificate": self.alpha_certificate,
            "certificate_violated": self.certificate_violated,
            "q_inner": self.q_inner,
            "wall_time_s": self.wall_time_s,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path) -> None:
        """One row per iteration, floats at 17 significant digits."""
        if not self.records:
            n, n_players = np.atleast_1d(self.final_theta).size, 0
        else:
            first = self.records[0]
            n, n_players = first.theta.size, first.per_player_costs.size
        header = (["k"] + [f"theta_{j}" for j in range(n)] + ["t_k", "eps_bound",
                  "eps_measured", "social_cost"]
                  + [f"cost_{i + 1}" for i in range(n_players)]
                  + ["grad_norm", "dist_theta", "stat_mc_norm"])
        lines = [",".join(header)]
        for rec in self.records:
            row = [str(rec.k)]
            row += [format(v, ".17g") for v in rec.theta]
            row.append(str(rec.t_k))
            row += [format(v, ".17g") for v in (rec.epsilon_k_bound,
                                                rec.epsilon_k_measured,
                                                rec.social_cost_at_inexact_ne)]
            row += [format(v, ".17g") for v in rec.per_player_costs]
            row += [format(v, ".17g") for v in (rec.grad_estimate_norm,
                                                rec.dist_to_theta_set,
                                                rec.stationarity_mc_norm)]
            lines.append(",".join(row))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def read_trace_csv(path) -> list:
    """Parse a trace CSV back into :class:`IterationRecord` objects."""
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    header = lines[0].split(",")
    n = sum(1 for c in header if c.startswith("theta_"))
    n_players = sum(1 for c in header if c.startswith("cost_"))
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        pos = 0
        k = int(parts[pos]); pos += 1
        theta = np.array([float(v) for v in parts[pos:pos + n]]); pos += n
        t_k = int(parts[pos]); pos += 1
        eps_bound = float(parts[pos]); pos += 1
        eps_measured = float(parts[pos]); pos += 1
        cost = float(parts[pos]); pos += 1
        costs = np.array([float(v) for v in parts[pos:pos + n_players]]); pos += n_players
        grad_norm = float(parts[pos]); pos += 1
        dist = float(parts[pos]); pos += 1
        stat = float(parts[pos]); pos += 1
        records.append(IterationRecord(
            k=k, theta=theta, t_k=t_k, epsilon_k_bound=eps_bound,
            epsilon_k_measured=eps_measured, social_cost_at_inexact_ne=cost,
            per_player_costs=costs, grad_estimate_norm=grad_norm,
            dist_to_theta_set=dist, stationarity_mc_norm=stat))
    return records


def _schedule_t(config: RegulatorConfig, k: int, q: float) -> int:
    if config.schedule == "fixed":
        return max(config.t_floor, int(config.t_fixed))
    if config.schedule == "formula":
        return _eval_schedule_formula(config.t_formula, k, config.t_floor)
    return inner_iteration_schedule(k, config.s, q, config.t_floor)


def run(config: RegulatorConfig, game: GameSpec,
        graph: CommGraph | None = None,
        constants: GameConstants | None = None) -> RunTrace:
    """Execute the full outer loop and return its trace.

    Inexact mode drives the distributed seeker (requires ``graph``,
    ``constants`` and ``gamma``); exact mode calls the centralized
    solver at ``ne_tol``.  Deterministic given ``config.seed``;
    diagnostics draw from independent substreams so enabling them leaves
    the trajectory untouched.
    """
    t_start = time.perf_counter()
    n = game.theta_dim
    n_players = game.n_players

    if config.theta0 is not None:
        theta = np.array(config.theta0, dtype=float)
        if theta.size != n:
            raise ValueError("theta0 has wrong dimension")
    else:
        theta = game.theta_set.midpoint()
    if not game.theta_set.contains(theta, tol=0.0):
        raise ValueError("theta0 must lie in the feasible set")

    lipschitz_f = config.lipschitz_f
    if lipschitz_f is None:
        if constants is None:
            raise ValueError(
                "certificates need lipschitz_f in the config or game constants; "
                "refusing to guess")
        lipschitz_f = constants.L_F

    certificate = certified_outer_step(config.xi, n, n_players, lipschitz_f,
                                       exact=(config.inner_mode == "exact"))
    alpha = config.resolve_alpha(certificate)
    violated = alpha > certificate * (1.0 + 1e-12)
    if violated and not config.allow_uncertified_alpha:
        raise ValueError(
            f"alpha={alpha:.6e} exceeds the certificate {certificate:.6e}; "
            "set allow_uncertified_alpha to override")

    q = math.nan
    gamma = config.gamma
    init_state = EstimateState.from_midpoints(game)
    init_norm_sq = float(init_state.stacked() @ init_state.stacked())
    if config.inner_mode == "inexact":
        if graph is None or constants is None or gamma is None:
            raise ValueError("inexact mode needs graph, constants and gamma")
        q = contraction_factor(gamma, constants, n_players, graph.sigma_bar)
        if config.schedule == "auto" and not 0 < q < 1:
            raise ValueError(
                f"auto schedule needs a contracting inner loop (q={q:.6f}); "
                "reduce gamma or pick a fixed/formula schedule")
    else:
        if gamma is None and constants is None:
            raise ValueError("exact mode needs gamma or constants for the solver")

    u_sampler = SphereSampler(n, config.seed, stream=(0,))
    records = []
    best_k, best_theta, best_stat = -1, theta.copy(), math.inf
    warm = None

    # the diagnostic oracle picks its own step from the constants; only a
    # constants-free exact run falls back to the configured inner step
    oracle_gamma = gamma if constants is None else None

    def exact_solve(th):
        x, _ = centralized_ne_iters(game, th, tol=config.ne_tol,
                                    max_iter=config.ne_max_iter,
                                    gamma=oracle_gamma, constants=constants)
        return x

    for k in range(config.k_outer):
        u = u_sampler.sphere()

        if config.inner_mode == "inexact":
            t_k = _schedule_t(config, k, q)
            init_k = warm if (config.warm_start and warm is not None) else init_state
            init_k_norm_sq = float(init_k.stacked() @ init_k.stacked())

            results = {}

            def solver(th, t, _init=init_k):
                res = ne_seek(game, graph, th, gamma, t, init=_init,
                              constants=None)
                results[th.tobytes()] = res
                return res.x

            try:
                grad, x_base, x_pert = _zo_gradient_details(
                    game, solver, theta, config.xi, u, t_k)
            except DivergenceError as err:
                raise DivergenceError(
                    f"inner solver diverged at outer iteration {k}",
                    err.iteration) from err
            if 0 < q < 1:
                eps_bound = contraction_error_bound(
                    init_k_norm_sq, n_players, constants.B_X, q, t_k)
            else:
                eps_bound = math.inf
            if config.warm_start:
                base_res = results[theta.tobytes()]
                warm_rows = np.tile(x_base, (n_players, 1))
                warm = EstimateState(warm_rows, iteration=base_res.iterations)
        else:
            theta_pert = theta + config.xi * u
            x_pert, iters_p = centralized_ne_iters(
                game, theta_pert, tol=config.ne_tol, max_iter=config.ne_max_iter,
                gamma=gamma, constants=constants)
            x_base, iters_b = centralized_ne_iters(
                game, theta, tol=config.ne_tol, max_iter=config.ne_max_iter,
                gamma=gamma, constants=constants)
            diff = (social_cost(game, x_pert, theta_pert)
                    - social_cost(game, x_base, theta))
            grad = (n / config.xi) * diff * u
            t_k = max(1, iters_p, iters_b)
            eps_bound = math.nan

        eps_measured = math.nan
        stat_norm = math.nan
        if config.diag_every > 0 and k % config.diag_every == 0:
            cache = {}

            def cached_oracle(th):
                key = th.tobytes()
                if key not in cache:
                    cache[key] = exact_solve(th)
                return cache[key]

            diag_sampler = SphereSampler(n, config.seed, stream=(1, k))
            estimate = stationarity_estimate(
                game, theta, config.xi, config.diag_samples,
                cached_oracle, diag_sampler)
            stat_norm = estimate.mean_norm
            if stat_norm < best_stat:
                best_stat, best_k, best_theta = stat_norm, k, theta.copy()
            if config.inner_mode == "inexact":
                theta_pert = theta + config.xi * u
                err_base = np.linalg.norm(x_base - cached_oracle(theta)) ** 2
                err_pert = np.linalg.norm(x_pert - cached_oracle(theta_pert)) ** 2
                eps_measured = float(max(err_base, err_pert))

        direction = grad + moreau_gradient(theta, game.theta_set, config.xi)
        records.append(IterationRecord(
            k=k, theta=theta.copy(), t_k=t_k, epsilon_k_bound=eps_bound,
            epsilon_k_measured=eps_measured,
            social_cost_at_inexact_ne=social_cost(game, x_base, theta),
            per_player_costs=per_player_costs(game, x_base, theta),
            grad_estimate_norm=float(np.linalg.norm(direction)),
            dist_to_theta_set=game.theta_set.distance(theta),
            stationarity_mc_norm=stat_norm))

        try:
            theta = regulator_step(theta, grad, game.theta_set, config.xi, alpha)
        except DivergenceError:
            raise DivergenceError("regulator diverged", k) from None

    return RunTrace(
        config=config.to_dict(), records=tuple(records), final_theta=theta,
        wall_time_s=time.perf_counter() - t_start, alpha_used=alpha,
        alpha_certificate=certificate, certificate_violated=violated,
        q_inner=q, best_k=best_k, best_theta=best_theta,
        best_stationarity=best_stat)
