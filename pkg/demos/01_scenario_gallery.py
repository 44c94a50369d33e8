#!/usr/bin/env python3
"""Tour of the five built-in maneuvers.

Generates each scenario with the ground-truth plant, prints a summary of what
the vehicle actually did, and (when matplotlib is importable) saves a small
gallery of trajectory plots under demos/out/.
"""
import math
from pathlib import Path

import numpy as np

from sideslip import SCENARIO_NAMES, VehicleParams, generate_scenario, make_scenario

OUT = Path(__file__).parent / "out"

params = VehicleParams.default_sedan()

overrides = {
    "slalom": dict(tire_kind="brush", mu_peak=0.5, duration=25.0),
    "severe_single_lane_change": dict(tire_kind="brush", mu_peak=1.0),
    "steady_circle": dict(tire_kind="linear"),
    "banked_double_lane_change": dict(tire_kind="brush", mu_peak=1.0),
    "stop_n_turn": dict(tire_kind="linear"),
}

runs = {}
print(f"{'scenario':<28} {'dur[s]':>7} {'peak|ay|[g]':>12} {'peak|beta|[deg]':>16} "
      f"{'min vx[m/s]':>12} {'bank[deg]':>10}")
for name in SCENARIO_NAMES:
    spec = make_scenario(name, seed=42, noise_scale=0.1, **overrides[name])
    run = generate_scenario(spec, params)
    runs[name] = run
    truth = run.truth
    a_y = np.gradient(truth.v_y, spec.dt) + truth.v_x * truth.r
    print(f"{name:<28} {spec.duration:>7.1f} {np.abs(a_y).max() / params.g:>12.2f} "
          f"{math.degrees(np.abs(truth.beta).max()):>16.2f} "
          f"{truth.v_x.min():>12.2f} {math.degrees(truth.phi.max()):>10.1f}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not available; skipping plots")
else:
    OUT.mkdir(exist_ok=True)
    fig, axes = plt.subplots(len(SCENARIO_NAMES), 3, figsize=(12, 14))
    for row, name in enumerate(SCENARIO_NAMES):
        truth = runs[name].truth
        axes[row, 0].plot(truth.t, np.degrees(truth.beta))
        axes[row, 0].set_ylabel(f"{name}\nbeta [deg]", fontsize=7)
        axes[row, 1].plot(truth.t, truth.r)
        axes[row, 1].set_ylabel("r [rad/s]", fontsize=7)
        axes[row, 2].plot(truth.t, truth.v_x)
        axes[row, 2].set_ylabel("v_x [m/s]", fontsize=7)
    axes[-1, 1].set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(OUT / "scenario_gallery.png", dpi=110)
    print(f"\nwrote {OUT / 'scenario_gallery.png'}")
