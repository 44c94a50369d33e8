#!/usr/bin/env python3
"""Inside the stiffness identification: recursion, gates, and energy budget.

A matched linear plant with its true stiffness at 80% of nominal drives a
persistent slalom.  The demo walks through:
  * convergence of the recursive identifier toward the true pair,
  * exactness of the recursion against the batch reference solve,
  * the runtime stability diagnostics: per-substep dissipation rate, the
    running passivity sum, and the decay of the disturbance-free error
    response.
"""
import numpy as np

from sideslip import (AdaptationConfig, AdaptationState, PipelineConfig,
                      VehicleParams, batch_rwls, generate_scenario,
                      make_scenario, recursive_rwls_step, run_pipeline,
                      suggest_regularization)

params = VehicleParams.default_sedan()
theta_true = 0.8 * params.theta_nominal

spec = make_scenario("slalom", seed=3, duration=30.0, noise_scale=0.0,
                     tire_kind="linear", stiffness_scale=0.8, steer_amplitude=0.12)
run = generate_scenario(spec, params)

# noise-free bench: yaw gate raised, ridge set from the dissipation heuristic,
# derivative filter wide open
adaptation = AdaptationConfig(forgetting=0.975, regularization=1e-4,
                              yaw_rate_min=0.2, r_dot_cutoff_hz=200.0)
config = PipelineConfig(variant="adaptive_bank", adaptation=adaptation,
                        diagnostics=True)
frames, monitor = run_pipeline(run.samples, config, params,
                               true_stiffness=theta_true)

print("--- convergence of the adapted stiffness ---")
print(f"nominal  pair: {params.theta_nominal.round(0)}")
print(f"true     pair: {theta_true.round(0)}")
for t_mark in (2, 5, 10, 20, 29.9):
    f = frames[int(t_mark / spec.dt)]
    rel = np.linalg.norm([f.c_f - theta_true[0], f.c_r - theta_true[1]]) \
        / np.linalg.norm(theta_true)
    print(f"  t={t_mark:>5.1f}s  c_f={f.c_f:>9.0f}  c_r={f.c_r:>9.0f}  rel err={rel:.4f}")

print("\n--- gates over the run ---")
open_frac = np.mean([f.adapted for f in frames])
print(f"adaptation active on {open_frac:.0%} of frames "
      f"(yaw gate at {adaptation.yaw_rate_min} rad/s)")

rows = monitor.trace.rows
sig1 = [r.sigma for r in rows if r.pair == 1]
sig2 = [r.sigma for r in rows if r.pair == 2]
print(f"regressor singular values: sigma1 ~ {np.median(sig1):.3f}, "
      f"sigma2 ~ {np.median(sig2):.3f}")
print(f"ridge suggestion for the median pair: "
      f"{suggest_regularization(np.median(sig1), np.median(sig2)):.5f} "
      f"(run used {adaptation.regularization})")

print("\n--- energy bookkeeping ---")
etas = monitor.trace.column("eta")
print(f"dissipation rate eta: min={etas[1:].min():.2e} (>= 0 after the "
      f"conventional first substep)")
popov = monitor.trace.column("popov")
print(f"running passivity sum: min={popov.min():.3e}, final={popov[-1]:.3e}")
eps_free = monitor.trace.column("eps_free").astype(float)
print(f"disturbance-free error response: initial {np.abs(eps_free[:100]).max():.2e}"
      f" -> final {np.abs(eps_free[-100:]).max():.2e}")

print("\n--- recursion vs. batch reference ---")
print(f"largest substep-vs-one-shot mismatch: "
      f"{max(monitor.trace.oneshot_mismatch):.2e}")
rng = np.random.default_rng(0)
from sideslip import RegressionSample
samples = []
state = AdaptationState.initial(params.theta_nominal)
cfg = AdaptationConfig()
for _ in range(500):
    phi_t = rng.normal(size=(2, 2))
    y = rng.normal(size=2) * 1e4
    s = RegressionSample(phi_t=phi_t, y=y,
                         y_tilde=y - phi_t @ params.theta_nominal)
    samples.append(s)
    state = recursive_rwls_step(state, s, cfg, params.theta_nominal)
batch = batch_rwls(samples, cfg, params.theta_nominal)
rel = np.linalg.norm(state.theta_star - batch) / np.linalg.norm(batch)
print(f"recursive vs batch on 500 random samples: rel diff {rel:.2e}")
