"""Helpers shared by the demo scripts: compact model cache, output paths."""

import copy
import os

OUT_DIR = os.path.join(os.path.dirname(__file__), "output")
MODEL_PATH = os.path.join(OUT_DIR, "model.json")


def ensure_out():
    os.makedirs(OUT_DIR, exist_ok=True)
    return OUT_DIR


def compact_training_config():
    """A reduced profile set so the demos identify a model in ~1 minute."""
    from saltgov.config import default_config

    cfg = default_config()
    cfg["training"]["profiles"] = [
        {"kind": "ramp", "depth": d, "rate_pct_per_min": 5.0}
        for d in (0.10, 0.20, 0.30, 0.40)
    ] + [
        {"kind": "ramp_return", "depth": 0.25, "rate_pct_per_min": 7.5, "hold": 300.0},
        {"kind": "ramp_return", "depth": 0.10, "rate_pct_per_min": 2.5, "hold": 300.0},
        {"kind": "staircase", "step": -0.05, "count": 3, "hold": 250.0},
        {"kind": "segments", "targets": [[0.85, 5.0, 300.0], [0.65, 7.5, 400.0]]},
    ]
    return cfg


def demo_model(refit=False):
    """Fit (or load the cached) compact governor model."""
    from saltgov.dmdc import StateSpaceModel
    from saltgov.orchestrator import (build_plant, fit_model_from_trajectories,
                                      generate_training_set)

    ensure_out()
    if os.path.exists(MODEL_PATH) and not refit:
        return StateSpaceModel.load(MODEL_PATH)
    cfg = compact_training_config()
    print("generating training trajectories (compact set)...")
    trajs, _ = generate_training_set(cfg)
    model = fit_model_from_trajectories(cfg, build_plant(cfg), trajs)
    model.save(MODEL_PATH)
    print(f"model cached at {MODEL_PATH} "
          f"(rank {model.svd_rank}, spectral radius {model.spectral_radius:.5f})")
    return model
