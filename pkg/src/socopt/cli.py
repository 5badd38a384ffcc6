"""Command-line harness.

Subcommands::

    ne               one distributed equilibrium-seeking run
    regulate         full regulator run (trace CSV + summary JSON)
    example1         closed-form vs solver cross-checks
    evcharge         EV-charging reproduction preset
    check-constants  print certified constants and step bounds
    fixtures         regenerate the oracle fixture files

Exit codes: 0 success, 2 config error, 3 divergence, 4 oracle mismatch.
Failures also emit a machine-readable error JSON on stderr.  The default
output directory is ``$SOCOPT_OUT`` (falling back to the current
directory).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .ev_charging import EVChargingParams, build_ev_game, ev_regulator_defaults
from .games import estimate_constants, social_cost
from .graphs import metropolis_graph
from .ne_seeking import (DivergenceError, contraction_factor, ne_residual,
                         ne_seek, step_size_bound, centralized_ne)
from .oracles import (example1_game, example1_ne, example1_social,
                      grid_search_theta)
from .regulator import RegulatorConfig, certified_outer_step, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_ORACLE = 4


class OracleMismatch(RuntimeError):
    pass


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("SOCOPT_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _parse_seeds(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(spec)]


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _build_experiment(args, need_graph: bool = True):
    if not args.config:
        raise ConfigError(["this subcommand needs --config PATH"])
    cfg = load_config(args.config)
    spec, quad, constants = cfg.build_game()
    graph = cfg.build_graph(spec.n_players) if need_graph else None
    return cfg, spec, quad, constants, graph


def _cmd_ne(args) -> int:
    cfg, spec, _, constants, graph = _build_experiment(args)
    ne_section = cfg.raw.get("ne")
    if not ne_section:
        raise ConfigError(["'ne' subcommand needs an 'ne' config section"])
    theta = np.asarray(ne_section["theta"], dtype=float)
    gamma = ne_section.get("gamma")
    if gamma is None:
        gamma = 0.95 * step_size_bound(constants, graph.sigma_bar)
    t_max = ne_section.get("t_max", 500)
    result = ne_seek(spec, graph, theta, gamma, t_max, constants=constants,
                     record_history=True)
    out = _out_dir(args)
    rows = ["t,residual"]
    slices = spec.block_slices
    for t, estimates in enumerate(result.history):
        x_t = np.concatenate([estimates[i, slices[i]] for i in range(spec.n_players)])
        rows.append(f"{t},{format(ne_residual(spec, x_t, theta, gamma), '.17g')}")
    (out / "ne_residuals.csv").write_text("\n".join(rows) + "\n")
    _print_json({
        "theta": theta.tolist(),
        "gamma": gamma,
        "iterations": result.iterations,
        "residual": result.residual,
        "consensus_gap": result.consensus_gap,
        "epsilon_bound": result.epsilon_bound,
        "x": result.x.tolist(),
        "residual_csv": str(out / "ne_residuals.csv"),
    })
    return EXIT_OK


def _run_regulated(cfg: ExperimentConfig, spec, constants, graph, seed,
                   override_alpha, out_dir: Path, tag: str = "") -> dict:
    reg = cfg.regulator_config(seed=seed, override_alpha=override_alpha)
    try:
        trace = run(reg, spec, graph=graph, constants=constants)
    except ValueError as err:
        raise ConfigError([str(err)]) from err
    paths = cfg.output_paths
    trace_path = out_dir / paths.get("trace_path", f"trace{tag}.csv")
    summary_path = out_dir / paths.get("summary_path", f"summary{tag}.json")
    if tag and "trace_path" in paths:
        trace_path = trace_path.with_name(trace_path.stem + tag + trace_path.suffix)
    if tag and "summary_path" in paths:
        summary_path = summary_path.with_name(summary_path.stem + tag
                                              + summary_path.suffix)
    trace.to_csv(trace_path)
    trace.to_json(summary_path)
    return {
        "seed": reg.seed,
        "final_theta": [float(v) for v in np.atleast_1d(trace.final_theta)],
        "trace": str(trace_path),
        "summary": str(summary_path),
    }


def _cmd_regulate(args) -> int:
    cfg, spec, _, constants, graph = _build_experiment(args)
    out = _out_dir(args)
    seeds = _parse_seeds(args.seeds) if args.seeds else [args.seed]
    reports = []
    for seed in seeds:
        tag = f"_seed{seed}" if len(seeds) > 1 else ""
        reports.append(_run_regulated(cfg, spec, constants, graph, seed,
                                      args.override_alpha, out, tag))
    _print_json({"runs": reports})
    return EXIT_OK


def _cmd_example1(args) -> int:
    """Cross-check the closed forms against the solvers; exit 4 on mismatch."""
    spec, quad = example1_game()
    sets = spec.strategy_sets
    constants = estimate_constants(quad, sets, spec.theta_set,
                                   theta_probe_radius=1e-3)
    checks = []

    def check(name, ok, detail):
        checks.append({"name": name, "ok": bool(ok), "detail": detail})

    grid = np.linspace(0.0, 1.0, 101)
    worst_ne = 0.0
    worst_social = 0.0
    for theta in grid:
        x = centralized_ne(spec, np.array([theta]), tol=1e-12,
                           constants=constants)
        worst_ne = max(worst_ne, float(np.linalg.norm(x - example1_ne(theta))))
        worst_social = max(worst_social, abs(
            social_cost(spec, example1_ne(theta), np.array([theta]))
            - example1_social(theta)))
    check("centralized_vs_closed_form_ne", worst_ne <= 1e-8,
          f"max |x - x*(theta)| = {worst_ne:.3e}")
    check("social_cost_identity", worst_social <= 1e-12,
          f"max |sum f_i - closed form| = {worst_social:.3e}")

    theta_star, f_star = grid_search_theta(spec, spec.theta_set, 1001,
                                           ne_tol=1e-12, constants=constants)
    check("grid_search_optimum",
          abs(theta_star[0] - 1.0) <= 1e-12 and abs(f_star + 6.0) <= 1e-9,
          f"theta*={theta_star[0]:.6f}, F*={f_star:.6f}")

    _print_json({"constants": {"mu": constants.mu, "l": constants.l},
                 "checks": checks})
    if not all(c["ok"] for c in checks):
        raise OracleMismatch("closed-form cross-checks failed")
    return EXIT_OK


def _cmd_evcharge(args) -> int:
    params = EVChargingParams()
    spec, quad = build_ev_game(params)
    constants = estimate_constants(quad, params.strategy_sets(),
                                   params.theta_set(), theta_probe_radius=1e-4)
    graph = metropolis_graph(params.n_players, 1.0 / 3.0,
                             rng_seed=args.graph_seed)

    theta_star, f_star = grid_search_theta(spec, params.theta_set(), 400,
                                           ne_tol=1e-10, constants=constants)

    overrides = ev_regulator_defaults()
    overrides["k_outer"] = args.iterations
    overrides["seed"] = args.seed
    reg = RegulatorConfig(**overrides)
    trace = run(reg, spec, graph=graph, constants=constants)

    out = _out_dir(args)
    trace.to_csv(out / "evcharge_trace.csv")
    trace.to_json(out / "evcharge_summary.json")

    n_players = params.n_players
    header = (["k", "abs_theta_err", "stat_mc_norm"]
              + [f"cost_{i + 1}" for i in range(n_players)] + ["cost_sum"])
    rows = [",".join(header)]
    for rec in trace.records:
        row = [str(rec.k),
               format(abs(float(rec.theta[0]) - float(theta_star[0])), ".17g"),
               format(rec.stationarity_mc_norm, ".17g")]
        row += [format(v, ".17g") for v in rec.per_player_costs]
        row.append(format(rec.social_cost_at_inexact_ne, ".17g"))
        rows.append(",".join(row))
    (out / "evcharge_figures.csv").write_text("\n".join(rows) + "\n")

    _print_json({
        "theta_star_grid": [float(v) for v in theta_star],
        "f_star_grid": f_star,
        "final_theta": [float(v) for v in np.atleast_1d(trace.final_theta)],
        "final_abs_err": abs(float(trace.final_theta[0]) - float(theta_star[0])),
        "outputs": [str(out / name) for name in
                    ("evcharge_trace.csv", "evcharge_summary.json",
                     "evcharge_figures.csv")],
    })
    return EXIT_OK


def _cmd_check_constants(args) -> int:
    cfg, spec, quad, constants, graph = _build_experiment(args)
    reg_raw = cfg.raw.get("regulator", {})
    xi = reg_raw.get("xi", 1e-3)
    bound = step_size_bound(constants, graph.sigma_bar)
    gamma = reg_raw.get("gamma", 0.95 * bound)
    payload = {
        "constants": {
            "mu": constants.mu, "l": constants.l, "l_prime": constants.l_prime,
            "l_theta": constants.l_theta, "L_x": constants.L_x,
            "L_theta": constants.L_theta, "B_X": constants.B_X,
            "L_F": constants.L_F,
        },
        "sigma_bar": graph.sigma_bar,
        "gamma_bound": bound,
        "gamma": gamma,
        "q_factor": contraction_factor(gamma, constants, spec.n_players,
                                       graph.sigma_bar),
        "alpha_certificate_inexact": certified_outer_step(
            xi, spec.theta_dim, spec.n_players, constants.L_F, exact=False),
        "alpha_certificate_exact": certified_outer_step(
            xi, spec.theta_dim, spec.n_players, constants.L_F, exact=True),
    }
    _print_json(payload)
    return EXIT_OK


def _fixture_payload(name: str, inputs: dict, value) -> dict:
    digest = hashlib.sha256(
        json.dumps(inputs, sort_keys=True).encode()).hexdigest()
    return {
        "oracle": name,
        "inputs": inputs,
        "input_sha256": digest,
        "value": value,
        "generated_by": "socopt fixtures subcommand; regenerate with "
                        "`socopt fixtures --out fixtures`",
    }


def generate_fixtures(out_dir: Path) -> list[Path]:
    """Recompute the brute-force oracle values and write them as JSON."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    spec, quad = example1_game()
    constants = estimate_constants(quad, spec.strategy_sets, spec.theta_set,
                                   theta_probe_radius=1e-3)
    theta_star, f_star = grid_search_theta(spec, spec.theta_set, 1001,
                                           ne_tol=1e-12, constants=constants)
    inputs = {"game": "example1", "grid_points": 1001, "ne_tol": 1e-12}
    payload = _fixture_payload("grid_search_theta", inputs,
                               {"theta_star": theta_star.tolist(),
                                "f_star": f_star})
    path = out_dir / "example1_theta_star.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(path)

    params = EVChargingParams()
    ev_spec, ev_quad = build_ev_game(params)
    ev_constants = estimate_constants(ev_quad, params.strategy_sets(),
                                      params.theta_set(),
                                      theta_probe_radius=1e-4)
    theta_star, f_star = grid_search_theta(ev_spec, params.theta_set(), 400,
                                           ne_tol=1e-10, constants=ev_constants)
    inputs = {"game": "ev_charging", "n_players": 10, "strategy_dim": 1,
              "grid_points": 400, "ne_tol": 1e-10}
    payload = _fixture_payload("grid_search_theta", inputs,
                               {"theta_star": theta_star.tolist(),
                                "f_star": f_star})
    path = out_dir / "ev_charging_theta_star.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written


def _cmd_fixtures(args) -> int:
    written = generate_fixtures(_out_dir(args))
    _print_json({"written": [str(p) for p in written]})
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socopt",
        description="Bilevel social optimization over noncooperative games")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--seed", type=int, default=0, help="root random seed")
        p.add_argument("--out", help="output directory (default $SOCOPT_OUT or .)")
        p.add_argument("--override-alpha", action="store_true",
                       help="allow an outer step above its certificate")

    p_ne = sub.add_parser("ne", help="one distributed NE-seeking run")
    common(p_ne)
    p_ne.set_defaults(handler=_cmd_ne)

    p_reg = sub.add_parser("regulate", help="full regulator run")
    common(p_reg)
    p_reg.add_argument("--seeds", help="inclusive seed range a..b to fan out")
    p_reg.set_defaults(handler=_cmd_regulate)

    p_ex = sub.add_parser("example1", help="closed-form cross-checks")
    common(p_ex)
    p_ex.set_defaults(handler=_cmd_example1)

    p_ev = sub.add_parser("evcharge", help="EV-charging reproduction preset")
    common(p_ev)
    p_ev.add_argument("--iterations", type=int, default=5000)
    p_ev.add_argument("--graph-seed", type=int, default=7)
    p_ev.set_defaults(handler=_cmd_evcharge)

    p_cc = sub.add_parser("check-constants", help="print certified constants")
    common(p_cc)
    p_cc.set_defaults(handler=_cmd_check_constants)

    p_fix = sub.add_parser("fixtures", help="regenerate oracle fixtures")
    common(p_fix)
    p_fix.set_defaults(handler=_cmd_fixtures)
    return parser


def _emit_error(kind: str, message: str, details=None) -> None:
    payload = {"error": {"type": kind, "message": message}}
    if details:
        payload["error"]["details"] = list(details)
    print(json.dumps(payload, indent=2, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as err:
        _emit_error("config", "configuration rejected", err.errors)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        _emit_error("config", str(err))
        return EXIT_CONFIG
    except DivergenceError as err:
        _emit_error("divergence", str(err))
        return EXIT_DIVERGENCE
    except OracleMismatch as err:
        _emit_error("oracle-mismatch", str(err))
        return EXIT_ORACLE
    except (ValueError, RuntimeError) as err:
        _emit_error("config", str(err))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
