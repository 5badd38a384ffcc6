"""Experiment configuration: JSON schema, validation, and builders.

A config document selects a game, a communication graph, the regulator
tunables and output paths.  Validation is strict (unknown keys are
rejected, every violation is reported at once) and happens before any
computation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from jsonschema import Draft202012Validator

from .ev_charging import EVChargingParams, build_ev_game
from .games import (BoxSet, PlayerQuadratic, QuadraticGameParams,
                    estimate_constants)
from .graphs import CommGraph, complete_graph, metropolis_graph
from .oracles import example1_game, example1_strategy_sets, example1_theta_set
from .regulator import RegulatorConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "CONFIG_SCHEMA"]

_NUMBER = {"type": "number"}
_INT = {"type": "integer"}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _NUMBER}}
_VECTOR = {"type": "array", "items": _NUMBER}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["game"],
    "properties": {
        "game": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["example1", "ev_charging", "quadratic_custom"]},
                "n_players": {"type": "integer", "minimum": 2},
                "strategy_dim": {"type": "integer", "minimum": 1},
                "lam": _NUMBER,
                "price_coupling": _NUMBER,
                "x_max": _NUMBER,
                "theta_lower": {"type": ["number", "array"]},
                "theta_upper": {"type": ["number", "array"]},
                "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "theta_dim": {"type": "integer", "minimum": 1},
                "players": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["P", "S", "b", "w"],
                        "properties": {"P": _MATRIX, "S": _MATRIX, "b": _VECTOR,
                                       "w": _VECTOR, "const": _NUMBER},
                    },
                },
                "strategy_lower": _VECTOR,
                "strategy_upper": _VECTOR,
            },
        },
        "graph": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["complete", "metropolis"]},
                "edge_probability": {"type": "number", "exclusiveMinimum": 0,
                                     "maximum": 1},
                "seed": _INT,
            },
        },
        "regulator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k_outer": {"type": "integer", "minimum": 0},
                "xi": {"type": "number", "exclusiveMinimum": 0},
                "inner_mode": {"enum": ["inexact", "exact"]},
                "alpha_mode": {"enum": ["fixed", "sqrt_k"]},
                "alpha": _NUMBER,
                "alpha0": _NUMBER,
                "s": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "schedule": {"enum": ["auto", "fixed", "formula"]},
                "t_fixed": {"type": "integer", "minimum": 1},
                "t_formula": {"type": "string"},
                "t_floor": {"type": "integer", "minimum": 1},
                "gamma": _NUMBER,
                "seed": _INT,
                "diag_samples": {"type": "integer", "minimum": 1},
                "diag_every": {"type": "integer", "minimum": 0},
                "theta0": _VECTOR,
                "lipschitz_f": _NUMBER,
                "warm_start": {"type": "boolean"},
                "ne_tol": {"type": "number", "exclusiveMinimum": 0},
                "ne_max_iter": {"type": "integer", "minimum": 1},
            },
        },
        "ne": {
            "type": "object",
            "additionalProperties": False,
            "required": ["theta"],
            "properties": {
                "theta": _VECTOR,
                "gamma": _NUMBER,
                "t_max": {"type": "integer", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "trace_path": {"type": "string"},
                "summary_path": {"type": "string"},
            },
        },
        "overrides": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"allow_uncertified_alpha": {"type": "boolean"}},
        },
    },
}


class ConfigError(Exception):
    """Schema or semantic violation; ``errors`` lists every problem."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _theta_box(raw_game: dict, default_lower, default_upper, dim: int) -> BoxSet:
    lo = raw_game.get("theta_lower", default_lower)
    hi = raw_game.get("theta_upper", default_upper)
    lo = np.full(dim, lo, dtype=float) if np.isscalar(lo) else np.asarray(lo, float)
    hi = np.full(dim, hi, dtype=float) if np.isscalar(hi) else np.asarray(hi, float)
    return BoxSet(lo, hi)


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict

    @property
    def game_kind(self) -> str:
        return self.raw["game"]["kind"]

    def build_game(self, theta_probe_radius: float | None = None):
        """Instantiate (GameSpec, QuadraticGameParams, GameConstants).

        Constants are certified over the feasible set enlarged by
        ``theta_probe_radius`` (defaults to the regulator's smoothing
        parameter, the region the probes actually visit).
        """
        if theta_probe_radius is None:
            theta_probe_radius = self.raw.get("regulator", {}).get("xi", 0.0)
        g = self.raw["game"]
        kind = g["kind"]
        if kind == "example1":
            spec, quad = example1_game()
            sets, theta_set = example1_strategy_sets(), example1_theta_set()
        elif kind == "ev_charging":
            params = EVChargingParams(
                n_players=g.get("n_players", 10),
                strategy_dim=g.get("strategy_dim", 1),
                lam=g.get("lam", 0.1),
                price_coupling=g.get("price_coupling", 1.0),
                x_max=g.get("x_max", 25.0),
                theta_lower=g.get("theta_lower", 1.0),
                theta_upper=g.get("theta_upper", 3.0),
            )
            spec, quad = build_ev_game(params)
            sets, theta_set = params.strategy_sets(), params.theta_set()
        elif kind == "quadratic_custom":
            required = ("dims", "theta_dim", "players",
                        "strategy_lower", "strategy_upper")
            missing = [key for key in required if key not in g]
            if missing:
                raise ConfigError(
                    [f"quadratic_custom game is missing key '{key}'" for key in missing])
            dims = tuple(g["dims"])
            players = tuple(
                PlayerQuadratic(P=p["P"], S=p["S"], b=p["b"], w=p["w"],
                                const=p.get("const", 0.0))
                for p in g["players"]
            )
            quad = QuadraticGameParams.from_players(dims, g["theta_dim"], players)
            lo = np.asarray(g["strategy_lower"], float)
            hi = np.asarray(g["strategy_upper"], float)
            offsets = np.cumsum((0,) + dims)
            sets = tuple(BoxSet(lo[offsets[i]:offsets[i + 1]],
                                hi[offsets[i]:offsets[i + 1]])
                         for i in range(len(dims)))
            theta_set = _theta_box(g, 0.0, 1.0, g["theta_dim"])
            spec = quad.to_game_spec(sets, theta_set)
        else:  # pragma: no cover - schema forbids it
            raise ConfigError([f"unknown game kind {kind!r}"])
        constants = estimate_constants(quad, sets, theta_set,
                                       theta_probe_radius=theta_probe_radius)
        return spec, quad, constants

    def build_graph(self, n_players: int) -> CommGraph:
        g = self.raw.get("graph", {"kind": "complete"})
        if g["kind"] == "complete":
            return complete_graph(n_players)
        return metropolis_graph(n_players, g.get("edge_probability", 1.0 / 3.0),
                                g.get("seed", 0))

    def regulator_config(self, seed: int | None = None,
                         override_alpha: bool | None = None) -> RegulatorConfig:
        reg = dict(self.raw.get("regulator", {}))
        reg.setdefault("k_outer", 1000)
        reg.setdefault("xi", 1e-3)
        if seed is not None:
            reg["seed"] = seed
        allow = self.raw.get("overrides", {}).get("allow_uncertified_alpha", False)
        if override_alpha is not None:
            allow = allow or override_alpha
        reg["allow_uncertified_alpha"] = allow
        if "theta0" in reg:
            reg["theta0"] = tuple(reg["theta0"])
        try:
            return RegulatorConfig(**reg)
        except (TypeError, ValueError) as err:
            raise ConfigError([str(err)]) from err

    @property
    def output_paths(self) -> dict:
        return dict(self.raw.get("output", {}))


def validate_config(document: dict) -> None:
    validator = Draft202012Validator(CONFIG_SCHEMA)
    problems = []
    for error in sorted(validator.iter_errors(document), key=lambda e: list(e.path)):
        where = "/".join(str(p) for p in error.path) or "<root>"
        problems.append(f"{where}: {error.message}")
    if problems:
        raise ConfigError(problems)


def load_config(path) -> ExperimentConfig:
    """Read and schema-validate a JSON experiment config.

    Raises :class:`ConfigError` carrying every violation (including
    unknown keys, each named) instead of stopping at the first.
    """
    with open(path) as fh:
        try:
            document = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError([f"invalid JSON: {err}"]) from err
    validate_config(document)
    return ExperimentConfig(raw=document)
