"""Acceptance harness: the ten gate criteria, one test each.

Every test prints a single ``[PASS]``/``[FAIL]`` line (run with ``-s`` to
see them live) and asserts at its stated tolerance.  Expensive runs are
shared through module-scoped fixtures.

Run: ``pytest tests/test_acceptance.py -v -s``
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from socopt import cli
from socopt.ev_charging import EVChargingParams, build_ev_game, ev_regulator_defaults
from socopt.games import estimate_constants, social_cost
from socopt.graphs import complete_graph, metropolis_graph
from socopt.ne_seeking import (centralized_ne, contraction_factor, ne_seek,
                               step_size_bound)
from socopt.oracles import (example1_cost_slope_bound, example1_game,
                            example1_ne, example1_social,
                            finite_difference_smoothed_gradient,
                            grid_search_theta)
from socopt.regulator import RegulatorConfig, certified_outer_step, run
from socopt.smoothing import SphereSampler, stationarity_estimate

XI_E1 = 1e-3  # smoothing parameter for the two-player benchmark runs


def report(criterion, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def e1():
    spec, quad = example1_game()
    constants = estimate_constants(quad, spec.strategy_sets, spec.theta_set,
                                   theta_probe_radius=XI_E1)
    return spec, constants


@pytest.fixture(scope="module")
def ev():
    params = EVChargingParams()
    spec, quad = build_ev_game(params)
    constants = estimate_constants(quad, params.strategy_sets(),
                                   params.theta_set(), theta_probe_radius=1e-4)
    graph = metropolis_graph(params.n_players, 1.0 / 3.0, rng_seed=7)
    return spec, constants, graph, params


@pytest.fixture(scope="module")
def criterion2_runs(e1):
    """Ten exact-mode runs at the largest certified step.

    The certificate uses the exact closed-form Lipschitz constant of the
    per-player equilibrium cost (4.0); the composed constant from the
    quadratic coefficients is a looser upper bound under which the
    certified step cannot traverse the decision interval within the
    iteration budget.
    """
    spec, constants = e1
    lf = example1_cost_slope_bound()
    cert = certified_outer_step(XI_E1, 1, 2, lf, exact=True)
    start = time.perf_counter()
    traces = []
    for seed in range(10):
        cfg = RegulatorConfig(
            k_outer=2000, xi=XI_E1, inner_mode="exact", alpha_mode="sqrt_k",
            alpha0=cert * math.sqrt(2000), lipschitz_f=lf,
            diag_every=100, diag_samples=2000, seed=seed)
        traces.append(run(cfg, spec, constants=constants))
    elapsed = time.perf_counter() - start
    return traces, lf, elapsed


def test_criterion_1_ne_oracle_equivalence(e1):
    spec, constants = e1
    graph = complete_graph(2)
    bound = step_size_bound(constants, graph.sigma_bar)
    gamma = 0.95 * bound  # the printed bound is a strict supremum
    start = time.perf_counter()
    worst = 0.0
    for theta in np.linspace(0.0, 1.0, 101):
        reference = example1_ne(theta)
        x_c = centralized_ne(spec, np.array([theta]), tol=1e-9,
                             constants=constants)
        x_d = ne_seek(spec, graph, np.array([theta]), gamma, 500).x
        worst = max(worst, float(np.linalg.norm(x_c - reference)),
                    float(np.linalg.norm(x_d - reference)))
    elapsed = time.perf_counter() - start
    report(1, worst <= 1e-6 and elapsed < 5.0,
           f"max deviation {worst:.2e} (tol 1e-6), {elapsed:.1f}s (< 5s)")


def test_criterion_2_regulator_optimum(e1, criterion2_runs):
    spec, constants = e1
    traces, _, elapsed = criterion2_runs
    final_errors = [abs(float(t.final_theta[0]) - 1.0) for t in traces]
    costs = []
    for t in traces:
        x = centralized_ne(spec, t.final_theta, tol=1e-10, constants=constants)
        costs.append(social_cost(spec, x, t.final_theta))
    med_err = float(np.median(final_errors))
    med_cost_gap = float(np.median([abs(c + 6.0) for c in costs]))
    ok = med_err <= 0.05 and med_cost_gap <= 0.2 and elapsed < 30.0
    report(2, ok, f"median |theta_K - 1| = {med_err:.4f} (tol 0.05), "
                  f"median |F + 6| = {med_cost_gap:.4f} (tol 0.2), "
                  f"{elapsed:.1f}s (< 30s)")


def test_criterion_3_linear_inner_rate(ev):
    spec, constants, graph, _ = ev
    gamma = 0.99 * step_size_bound(constants, graph.sigma_bar)
    q = contraction_factor(gamma, constants, spec.n_players, graph.sigma_bar)
    assert 0 < q < 1
    theta = np.array([2.0])
    start = time.perf_counter()
    res = ne_seek(spec, graph, theta, gamma, 210, constants=constants,
                  record_history=True)
    x_star = centralized_ne(spec, theta, tol=1e-12, constants=constants)
    target = np.tile(x_star, (spec.n_players, 1))
    errors = np.array([float(np.sum((h - target) ** 2)) for h in res.history])
    ratios = errors[30:211] / errors[20:201]
    elapsed = time.perf_counter() - start
    limit = q**10 * 1.05
    worst = float(ratios.max())
    report(3, worst <= limit and elapsed < 10.0,
           f"max e(t+10)/e(t) = {worst:.6f} (limit {limit:.6f}, q={q:.6f}), "
           f"{elapsed:.1f}s (< 10s)")


def test_criterion_4_epsilon_certificate(ev):
    spec, constants, graph, _ = ev
    gamma = 0.99 * step_size_bound(constants, graph.sigma_bar)
    cfg = RegulatorConfig(
        k_outer=500, xi=1e-4, inner_mode="inexact", alpha_mode="fixed",
        alpha=1e-5, gamma=gamma, schedule="formula",
        t_formula="ceil(5*log(k+1))", theta0=(2.0,),
        allow_uncertified_alpha=True, diag_every=25, diag_samples=500, seed=3)
    start = time.perf_counter()
    trace = run(cfg, spec, graph=graph, constants=constants)
    elapsed = time.perf_counter() - start
    diag = [r for r in trace.records if not math.isnan(r.epsilon_k_measured)]
    violations = [r.k for r in diag
                  if r.epsilon_k_measured > r.epsilon_k_bound]
    ok = bool(diag) and not violations and elapsed < 60.0
    worst = max((r.epsilon_k_measured / r.epsilon_k_bound for r in diag),
                default=math.nan)
    report(4, ok, f"{len(diag)} diagnostics, 0 violations expected "
                  f"(got {len(violations)}), worst measured/bound = {worst:.3e}, "
                  f"{elapsed:.1f}s (< 60s)")


def test_criterion_5_estimator_unbiasedness(e1):
    spec, constants = e1
    rng = np.random.default_rng(55)
    thetas = rng.uniform(0.72, 0.95, size=5)  # smooth branch, probes interior
    samples = 10**5
    start = time.perf_counter()
    worst_sigma = 0.0
    for i, theta in enumerate(thetas):
        theta_vec = np.array([theta])
        cache = {}

        def oracle(th):
            key = th.tobytes()
            if key not in cache:
                cache[key] = centralized_ne(spec, th, tol=1e-12,
                                            constants=constants)
            return cache[key]

        mc = stationarity_estimate(spec, theta_vec, XI_E1, samples, oracle,
                                   SphereSampler(1, seed=100 + i))
        fd = finite_difference_smoothed_gradient(
            lambda t: example1_social(float(t[0])), theta_vec, xi=XI_E1,
            h=1e-4, samples=samples, sampler=SphereSampler(1, seed=200 + i))
        # theta is interior, so the penalty part of the mc mean is zero
        gap = abs(float(mc.mean[0] - fd.mean[0]))
        combined = math.sqrt(float(mc.std_err[0])**2 + float(fd.std_err[0])**2)
        worst_sigma = max(worst_sigma, gap / combined)
    elapsed = time.perf_counter() - start
    report(5, worst_sigma <= 3.0 and elapsed < 60.0,
           f"max |mc - fd| = {worst_sigma:.2f} combined std errs (tol 3), "
           f"{elapsed:.1f}s (< 60s)")


def test_criterion_6_estimator_norm_bound(ev):
    spec, constants, _, params = ev
    xi = 1e-4
    n_thetas, draws_per_theta = 5, 200_000
    rng = np.random.default_rng(66)
    start = time.perf_counter()
    violations = 0
    total = 0
    for theta in rng.uniform(params.theta_lower, params.theta_upper, n_thetas):
        base = np.array([theta])
        costs = {}
        for label, th in (("base", base), ("plus", base + xi),
                          ("minus", base - xi)):
            x = centralized_ne(spec, th, tol=1e-12, constants=constants)
            costs[label] = np.array([f(x, th) for f in spec.cost_fns])
        # theta is scalar: a sphere draw is a sign, so each player has
        # exactly two possible sample magnitudes at this theta
        mag = {+1: np.abs(costs["plus"] - costs["base"]) / xi,
               -1: np.abs(costs["minus"] - costs["base"]) / xi}
        signs = rng.integers(0, 2, size=draws_per_theta) * 2 - 1
        for sign in (-1, +1):
            count = int(np.sum(signs == sign))
            violations += count * int(np.any(mag[sign] > constants.L_F + 1e-9))
            total += count * spec.n_players
    elapsed = time.perf_counter() - start
    report(6, violations == 0 and total >= 10**6 and elapsed < 60.0,
           f"{violations} violations over {total} per-player draws "
           f"(certified L_F = {constants.L_F:.1f}), {elapsed:.1f}s (< 60s)")


def _rate_slope(spec, constants, graph, inner_mode, seeds, ks):
    lf = example1_cost_slope_bound()
    alpha0 = 1e-3 * math.sqrt(250)  # alpha(250) = 1e-3 <= xi keeps steps stable
    means = []
    for k_outer in ks:
        per_seed = []
        for seed in seeds:
            cfg = RegulatorConfig(
                k_outer=k_outer, xi=XI_E1, inner_mode=inner_mode,
                alpha_mode="sqrt_k", alpha0=alpha0, lipschitz_f=lf,
                gamma=0.95 if inner_mode == "inexact" else None,
                s=0.5, schedule="auto", allow_uncertified_alpha=True,
                diag_every=max(1, k_outer // 25), diag_samples=2000,
                seed=seed)
            trace = run(cfg, spec, graph=graph, constants=constants)
            stats = [r.stationarity_mc_norm**2 for r in trace.records
                     if not math.isnan(r.stationarity_mc_norm)]
            per_seed.append(float(np.mean(stats)))
        means.append(float(np.mean(per_seed)))
    slope = float(np.polyfit(np.log(ks), np.log(means), 1)[0])
    return slope, means


def test_criterion_7_sublinear_outer_rate(e1):
    spec, constants = e1
    graph = complete_graph(2)
    ks = (250, 1000, 4000)
    start = time.perf_counter()
    slope_exact, means_exact = _rate_slope(spec, constants, None, "exact",
                                           range(10), ks)
    slope_inexact, means_inexact = _rate_slope(spec, constants, graph,
                                               "inexact", range(10), ks)
    elapsed = time.perf_counter() - start
    ok = slope_exact <= -0.35 and slope_inexact <= -0.35 and elapsed < 600.0
    report(7, ok,
           f"log-log slope exact = {slope_exact:.3f}, "
           f"inexact (s=0.5) = {slope_inexact:.3f} (tol <= -0.35); "
           f"means exact {['%.3f' % m for m in means_exact]}, "
           f"inexact {['%.3f' % m for m in means_inexact]}; "
           f"{elapsed:.0f}s (< 600s)")


def test_criterion_8_moreau_containment(criterion2_runs):
    traces, lf, _ = criterion2_runs
    ceiling = XI_E1 * 1 * 2 * lf  # xi n N L_F
    bad_steps = 0
    bad_best = 0
    for trace in traces:
        alpha = trace.alpha_used
        for rec in trace.records:
            if rec.dist_to_theta_set > ceiling + alpha * rec.grad_estimate_norm:
                bad_steps += 1
        best = [r for r in trace.records if r.k == trace.best_k]
        if best:
            rec = best[0]
            if rec.dist_to_theta_set > ceiling + XI_E1 * rec.stationarity_mc_norm:
                bad_best += 1
    ok = bad_steps == 0 and bad_best == 0
    report(8, ok, f"per-step violations {bad_steps}, best-iterate violations "
                  f"{bad_best} over {sum(len(t.records) for t in traces)} records "
                  f"(ceiling xi*n*N*L_F = {ceiling:.3e})")


def test_criterion_9_ev_reproduction(ev):
    spec, constants, graph, params = ev
    start = time.perf_counter()
    theta_star, _ = grid_search_theta(spec, params.theta_set(), 400,
                                      ne_tol=1e-10, constants=constants)
    overrides = ev_regulator_defaults()
    overrides["seed"] = 0
    trace = run(RegulatorConfig(**overrides), spec, graph=graph,
                constants=constants)
    elapsed = time.perf_counter() - start

    errors = np.array([abs(float(r.theta[0]) - float(theta_star[0]))
                       for r in trace.records])
    final_err = errors[-1]
    trend_ok = errors[-100:].mean() < errors[:100].mean()

    stats = [(r.k, r.stationarity_mc_norm) for r in trace.records
             if not math.isnan(r.stationarity_mc_norm)]
    stat_first, stat_last = stats[0][1], stats[-1][1]
    decay_ok = stat_last <= stat_first / 10.0

    costs = np.array([r.per_player_costs for r in trace.records[-100:]])
    ranges = costs.max(axis=0) - costs.min(axis=0)
    scales = np.abs(np.median(costs, axis=0))
    costs_ok = bool(np.all(ranges <= 0.01 * scales))

    ok = (final_err <= 0.1 and trend_ok and decay_ok and costs_ok
          and elapsed < 300.0)
    report(9, ok,
           f"theta*_grid = {float(theta_star[0]):.4f}, final |theta - theta*| = "
           f"{final_err:.4f} (tol 0.1, trend {'ok' if trend_ok else 'BAD'}); "
           f"stationarity {stat_first:.2f} -> {stat_last:.4f} "
           f"({'>=10x' if decay_ok else '<10x'}); max cost range/scale = "
           f"{float((ranges / scales).max()):.4%} (tol 1%); "
           f"{elapsed:.0f}s (< 300s)")


def test_criterion_10_determinism(tmp_path, capsys):
    cfg_doc = {
        "game": {"kind": "example1"},
        "graph": {"kind": "complete"},
        "regulator": {"k_outer": 40, "xi": 1e-3, "inner_mode": "inexact",
                      "alpha_mode": "fixed", "alpha": 1e-3, "gamma": 0.5,
                      "schedule": "auto", "lipschitz_f": 4.0,
                      "diag_every": 10, "diag_samples": 100},
        "ne": {"theta": [0.8], "gamma": 0.5, "t_max": 120},
        "overrides": {"allow_uncertified_alpha": True},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg_doc))

    outputs = {}
    for name, argv in {
        "regulate": ["regulate", "--config", str(cfg_path), "--seed", "11"],
        "ne": ["ne", "--config", str(cfg_path)],
        "evcharge": ["evcharge", "--iterations", "120", "--seed", "4"],
    }.items():
        digests = []
        for attempt in ("a", "b"):
            out = tmp_path / f"{name}_{attempt}"
            assert cli.main(argv + ["--out", str(out)]) == 0
            capsys.readouterr()
            blobs = b"".join(p.read_bytes() for p in sorted(out.glob("*.csv")))
            digests.append(blobs)
        outputs[name] = digests[0] == digests[1]
    ok = all(outputs.values())
    report(10, ok, f"byte-identical traces per subcommand: {outputs}")
