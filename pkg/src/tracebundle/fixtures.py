"""Canonical fixture experiments used by CI and the golden-file workflow."""

from __future__ import annotations

import json

from .config import ExperimentConfig, parse_config

FIXTURES = {
    "mat2_tower": {
        "experiment_id": "mat2_tower",
        "bundle": {
            "atoms": ["w1"],
            "mu": [1.0],
            "fiber_shapes": [[2]],
            "trace_weights": [[0.5]],
        },
        "tower": ["scalars", "diagonal", "full"],
        "exponents": [1, 2],
        "weights": "uniform",
        "seed": 20240815,
        "trials": {
            "trace_sections": 60,
            "axioms": 25,
            "duality_sections": 2,
            "duality_samples": 40,
            "martingale_seeds": 3,
        },
        "extension": 200,
        "tolerances": {"cesaro": 0.05},
    },
    "hetero4_tower": {
        "experiment_id": "hetero4_tower",
        "bundle": {
            "atoms": ["w1", "w2", "w3", "w4"],
            "mu": [0.5, 1.0, 0.25, 2.0],
            "fiber_shapes": [[2], [3], [2, 2], [1]],
            "trace_weights": [[0.5], [1.0], [1.0, 2.0], [3.0]],
        },
        "tower": ["scalars", "diagonal", "block(1,1)", "full"],
        "exponents": [1, 2, 3],
        "weights": "uniform",
        "seed": 77001,
        "trials": {
            "trace_sections": 40,
            "axioms": 15,
            "duality_sections": 2,
            "duality_samples": 30,
            "martingale_seeds": 2,
        },
        "extension": 300,
        "tolerances": {"cesaro": 0.05},
    },
}


def fixture_text(name: str) -> str:
    return json.dumps(FIXTURES[name], sort_keys=True, indent=2) + "\n"


def fixture_config(name: str) -> ExperimentConfig:
    return parse_config(fixture_text(name))
