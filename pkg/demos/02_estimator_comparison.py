#!/usr/bin/env python3
"""Sideslip-accuracy shoot-out across estimator variants.

Reproduces the benchmark protocol at desk scale: three demanding maneuvers,
four estimators each, RMS errors side by side.  The adaptive corrected-input
estimator should come out ahead on every row, while the switching baseline
shows visible discontinuities at its gate transitions.
"""
from pathlib import Path

import numpy as np

from sideslip import (NoiseLevels, PipelineConfig, VehicleParams,
                      compare_variants, generate_scenario, make_scenario,
                      metrics_table)

params = VehicleParams.default_sedan()
# realistic sensor grades: accelerometers are the noisy channels
noise = NoiseLevels(a_x=0.05, a_y=0.05, r=0.003, v_x=0.03, delta_f=0.001)

scenarios = {
    "slalom (low friction)": make_scenario(
        "slalom", seed=11, noise=noise, tire_kind="brush", mu_peak=0.5,
        duration=25.0),
    "severe lane change": make_scenario(
        "severe_single_lane_change", seed=11, noise=noise, tire_kind="brush",
        mu_peak=1.0, stiffness_scale=0.8),
    "banked double lane change": make_scenario(
        "banked_double_lane_change", seed=11, noise=noise, tire_kind="brush",
        mu_peak=1.0, stiffness_scale=0.8, pulse_period=5.0, steer_amplitude=0.1),
}

variants = ["adaptive_corrected", "adaptive_bank", "dynamics_only", "hybrid_switch"]
config = PipelineConfig()

for label, spec in scenarios.items():
    run = generate_scenario(spec, params)
    results = compare_variants(run.samples, variants, config, params, run.truth)
    print(f"\n=== {label} ===")
    print(metrics_table(results))
    hybrid = results["hybrid_switch"]
    if hybrid.transition_jump is not None:
        print(f"largest switching discontinuity of the hybrid baseline: "
              f"{hybrid.transition_jump:.4f} rad")
