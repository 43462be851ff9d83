"""Embedded experiment presets, overridable from the command line via --set."""

from __future__ import annotations

import copy

_SIX_CODES = [
    {"kind": "single", "label": "single"},
    {"kind": "repetition", "N": 8, "label": "repetition"},
    {"kind": "parallel", "N": 8, "label": "parallel"},
    {"kind": "split_repetition", "N": 8, "label": "split_rep"},
    {"kind": "spc", "N": 8, "label": "spc"},
    {"kind": "ref84", "label": "ref84"},
]

_QUEUE_CODES = [
    {"kind": "repetition", "N": 8, "label": "repetition"},
    {"kind": "ref84", "label": "ref84"},
    {"kind": "parallel", "N": 8, "label": "parallel"},
]


def _fup_curves(inv_mu1, mu2, a, grid):
    return {
        "scenario": "fup_analyze",
        "seed": 12345,
        "trials": 20000,
        "system": {
            "L": 504,
            "r": 0.5,
            "delta": 0.01,
            "latency": {"inv_mu1": inv_mu1, "mu2": mu2, "a": a},
        },
        "decoder": {"kind": "bounded_distance", "relative_radius": 0.03},
        "codes": copy.deepcopy(_SIX_CODES),
        "time_grid": grid,
    }


def _rate_tradeoff(lam, mu, mapping):
    return {
        "scenario": "queue_simulate",
        "seed": 12345,
        "system": {
            "L": 112,
            "r": 0.5,
            "delta": 0.03,
            "latency": {"inv_mu1": 0.0, "mu2": mu, "a": 0.0},
        },
        "decoder": {"kind": "bounded_distance", "relative_radius": 0.1},
        "codes": copy.deepcopy(_QUEUE_CODES),
        "queue": {
            "service": {"mu": mu, "mapping": mapping},
            "frames": 20000,
            "lambda": lam,
            "sweep": {"kind": "rate", "values": [0.5, 1 / 3, 0.25, 0.2]},
        },
    }


PRESETS = {
    "fig5": {
        "description": "Deadline vs unavailability, negligible workload-independent delay",
        "config": _fup_curves(0.0, 10.0, 1.0, {"start": 100.0, "stop": 2460.0, "points": 60}),
    },
    "fig6": {
        "description": "Deadline vs unavailability with dominant workload-independent delay",
        "config": _fup_curves(50.0, 20.0, 0.1, {"start": 10.0, "stop": 600.0, "points": 60}),
    },
    "fig7a-printed": {
        "description": "Latency vs FER over user-code rates, light load, printed-form rate mapping",
        "config": _rate_tradeoff(0.1, 500.0, "printed"),
    },
    "fig7a-nu": {
        "description": "Latency vs FER over user-code rates, light load, per-server frame-rate mapping",
        "config": _rate_tradeoff(0.1, 500.0, "frame_rate"),
    },
    "fig7b-printed": {
        "description": "Latency vs FER over user-code rates, heavy load, printed-form rate mapping",
        "config": _rate_tradeoff(1.0, 50.0, "printed"),
    },
    "fig7b-nu": {
        "description": "Latency vs FER over user-code rates, heavy load, per-server frame-rate mapping",
        "config": _rate_tradeoff(1.0, 50.0, "frame_rate"),
    },
    "fig8": {
        "description": "Mean latency vs arrival rate for both queueing policies",
        "config": {
            "scenario": "queue_simulate",
            "seed": 12345,
            "system": {
                "L": 112,
                "r": 0.5,
                "delta": 0.03,
                "latency": {"inv_mu1": 0.0, "mu2": 500.0, "a": 0.0},
            },
            "decoder": {"kind": "bounded_distance", "relative_radius": 0.1},
            "codes": copy.deepcopy(_QUEUE_CODES),
            "queue": {
                "service": {"mu": 500.0, "mapping": "printed"},
                "frames": 20000,
                "sweep": {"kind": "lambda", "values": [1.0, 2.0, 4.0, 8.0, 12.0, 16.0]},
            },
        },
    },
}


def preset_config(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return copy.deepcopy(PRESETS[name]["config"])
