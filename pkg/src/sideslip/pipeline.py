"""Estimator pipelines: the two adaptive variants and two baselines.

Variants
--------
adaptive_bank       dynamics observer + 3-state kinematics observer (bank as a
                    kinematics state); stiffness adaptation gated on yaw rate.
adaptive_corrected  dynamics observer + 2-state kinematics observer fed a
                    bank/bias-corrected lateral acceleration; adaptation gated
                    on yaw rate and on regressor conditioning.
dynamics_only       dynamics observer with fixed nominal stiffness.
hybrid_switch       both observers with fixed stiffness; the reported sideslip
                    switches to the kinematics estimate while the yaw-rate
                    gate is open (the classic switching scheme, kept as a
                    baseline for its transition discontinuities).

Per frame the dynamics filter runs first, then the kinematics filter, then the
stiffness update (when gated in); sideslip is always atan(v_y_dyn / v_x) for
the adaptive variants.  Below the speed guard all estimates are held frozen
and the frame is flagged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .adaptation import (AdaptationConfig, AdaptationState, build_regression,
                         clamp_stiffness, conditioning_gate,
                         recursive_rwls_step, yaw_accel_estimate)
from .kalman import NoiseConfig
from .observers import DynamicsObserver, KinematicsObserver, reset_kinematics_from_dynamics
from .stability import StabilityMonitor
from .vehicle import SensorSample, VehicleParams, corrected_lateral_accel

__all__ = ["VARIANTS", "PipelineConfig", "EstimateFrame", "EstimatorPipeline",
           "run_pipeline"]

VARIANTS = ("adaptive_bank", "adaptive_corrected", "dynamics_only", "hybrid_switch")


def _default_w_dyn() -> np.ndarray:
    return np.diag([6.0, 0.5, 0.1, 0.0002])


def _default_v_dyn() -> np.ndarray:
    return np.diag([0.1, 0.01])


def _default_w_kin3() -> np.ndarray:
    return np.diag([0.2, 0.6, 0.05])


def _default_w_kin2() -> np.ndarray:
    return np.diag([0.2, 0.6])


def _default_v_kin() -> np.ndarray:
    return np.array([[0.05]])


@dataclass(frozen=True)
class PipelineConfig:
    """Estimator tuning: variant, rates, noise covariances, adaptation."""

    variant: str = "adaptive_corrected"
    dt: float = 0.01
    w_dyn: np.ndarray = field(default_factory=_default_w_dyn)
    v_dyn: np.ndarray = field(default_factory=_default_v_dyn)
    w_kin3: np.ndarray = field(default_factory=_default_w_kin3)
    w_kin2: np.ndarray = field(default_factory=_default_w_kin2)
    v_kin: np.ndarray = field(default_factory=_default_v_kin)
    adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)
    v_x_min: float = 1.0
    p0_dyn_scale: float = 1.0   # initial covariances default to identity
    p0_kin_scale: float = 1.0
    p0_dyn: np.ndarray | None = None  # per-state initial variances, overrides the scale
    p0_kin: np.ndarray | None = None
    diagnostics: bool = False

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant '{self.variant}'; pick from {VARIANTS}")
        if self.dt <= 0.0:
            raise ValueError("dt must be strictly positive")


@dataclass(frozen=True)
class EstimateFrame:
    """Per-frame estimator output plus gate/clamp audit flags."""

    t: float
    beta: float          # sideslip estimate [rad]
    v_y_dyn: float       # dynamics-observer lateral velocity [m/s]
    v_y_kin: float       # kinematics-observer lateral velocity [m/s]
    sin_phi: float       # bank-sine estimate (dynamics observer)
    bias: float          # lateral accelerometer bias estimate [m/s^2]
    c_f: float           # front stiffness in use [N/rad]
    c_r: float           # rear stiffness in use [N/rad]
    gate_yaw: bool       # |r| >= yaw_rate_min this frame
    gate_cond: bool      # regressor conditioning acceptable this frame
    adapted: bool        # stiffness update applied this frame
    clamped: bool        # stiffness clamp engaged this frame
    low_speed: bool      # frame held by the speed guard
    beta_source: str     # "dyn" or "kin" (hybrid switches)


class EstimatorPipeline:
    """Stateful runner for one estimator variant over one sample stream."""

    def __init__(self, config: PipelineConfig, params: VehicleParams,
                 first: SensorSample,
                 initial_true_stiffness: np.ndarray | None = None):
        self.config = config
        self.params = params
        cfg = config.adaptation
        variant = config.variant

        dyn_noise = NoiseConfig(w=config.w_dyn, v=config.v_dyn)
        p0_dyn = (np.diag(config.p0_dyn) if config.p0_dyn is not None
                  else config.p0_dyn_scale * np.eye(4))
        self.dyn = DynamicsObserver.initial(params, dyn_noise, first, p0=p0_dyn)
        self.dyn = replace(self.dyn, v_x_min=config.v_x_min)

        self._kin_kind = "bank" if variant == "adaptive_bank" else "planar"
        n_kin = 3 if self._kin_kind == "bank" else 2
        kin_w = config.w_kin3 if self._kin_kind == "bank" else config.w_kin2
        kin_noise = NoiseConfig(w=kin_w, v=config.v_kin)
        p0_kin = (np.diag(config.p0_kin) if config.p0_kin is not None
                  else config.p0_kin_scale * np.eye(n_kin))
        self.kin = KinematicsObserver.initial(
            self._kin_kind, kin_noise, first, params.g, p0=p0_kin)

        self.adapt = AdaptationState.initial(params.theta_nominal)
        self._stiff = params.theta_nominal.copy()
        self._filter_state: float | None = None
        self._adaptive = variant in ("adaptive_bank", "adaptive_corrected")

        self.monitor: StabilityMonitor | None = None
        if config.diagnostics and self._adaptive:
            init_dev = (None if initial_true_stiffness is None
                        else np.asarray(initial_true_stiffness, dtype=float)
                        - params.theta_nominal)
            self.monitor = StabilityMonitor(cfg, initial_true_deviation=init_dev)

        self._last_frame = EstimateFrame(
            t=first.t, beta=math.atan2(self.dyn.v_y, max(first.v_x, 1e-6)),
            v_y_dyn=self.dyn.v_y, v_y_kin=self.kin.v_y,
            sin_phi=self.dyn.sin_phi, bias=self.dyn.bias,
            c_f=float(self._stiff[0]), c_r=float(self._stiff[1]),
            gate_yaw=False, gate_cond=False, adapted=False, clamped=False,
            low_speed=first.v_x < config.v_x_min, beta_source="dyn")

    @property
    def initial_frame(self) -> EstimateFrame:
        return self._last_frame

    def step(self, s_prev: SensorSample, s_now: SensorSample,
             true_stiffness: np.ndarray | None = None) -> EstimateFrame:
        config, cfg, params = self.config, self.config.adaptation, self.params

        if s_now.v_x < config.v_x_min:
            frame = replace(self._last_frame, t=s_now.t, gate_yaw=False,
                            gate_cond=False, adapted=False, clamped=False,
                            low_speed=True)
            self._last_frame = frame
            return frame

        # Correction for the 2-state kinematics input, built from the dynamics
        # estimates as of the end of the previous frame.
        a_y_corr = corrected_lateral_accel(s_prev.a_y_sen, self.dyn.sin_phi,
                                           self.dyn.bias, params.g)

        self.dyn = self.dyn.with_stiffness(*self._stiff).step(s_prev, s_now, config.dt)

        if config.variant == "dynamics_only":
            return self._emit(s_now, gate_yaw=False, gate_cond=False,
                              adapted=False, clamped=False, source="dyn")

        if self._kin_kind == "bank":
            self.kin = self.kin.step(s_prev, s_now, config.dt)
        else:
            self.kin = self.kin.step(s_prev, s_now, config.dt, a_y_corrected=a_y_corr)

        gate_yaw = abs(s_now.r) >= cfg.yaw_rate_min
        gate_cond = True
        adapted = False
        clamped = False

        if self._adaptive:
            r_dot, self._filter_state = yaw_accel_estimate(
                s_now.r, s_prev.r, config.dt, self._filter_state,
                cfg.r_dot_cutoff_hz)
            sample = build_regression(s_now, self.kin.v_y, r_dot, params,
                                      v_x_min=config.v_x_min)
            if config.variant == "adaptive_corrected":
                gate_cond = conditioning_gate(sample, cfg.max_condition_ratio)
            if gate_yaw and gate_cond:
                self.adapt = recursive_rwls_step(self.adapt, sample, cfg,
                                                 params.theta_nominal)
                self._stiff, clamped = clamp_stiffness(
                    self.adapt.theta_star, params.theta_nominal, cfg)
                adapted = True
                if self.monitor is not None:
                    true_dev = (None if true_stiffness is None else
                                np.asarray(true_stiffness, dtype=float)
                                - params.theta_nominal)
                    self.monitor.update(sample, true_dev)

        if not gate_yaw:
            self.kin = reset_kinematics_from_dynamics(self.kin, self.dyn, s_now.v_x)

        source = "kin" if (config.variant == "hybrid_switch" and gate_yaw) else "dyn"
        return self._emit(s_now, gate_yaw=gate_yaw, gate_cond=gate_cond,
                          adapted=adapted, clamped=clamped, source=source)

    def _emit(self, s_now: SensorSample, gate_yaw: bool, gate_cond: bool,
              adapted: bool, clamped: bool, source: str) -> EstimateFrame:
        v_y = self.kin.v_y if source == "kin" else self.dyn.v_y
        frame = EstimateFrame(
            t=s_now.t, beta=math.atan2(v_y, s_now.v_x),
            v_y_dyn=self.dyn.v_y,
            v_y_kin=self.kin.v_y if self.config.variant != "dynamics_only" else float("nan"),
            sin_phi=self.dyn.sin_phi, bias=self.dyn.bias,
            c_f=float(self._stiff[0]), c_r=float(self._stiff[1]),
            gate_yaw=gate_yaw, gate_cond=gate_cond, adapted=adapted,
            clamped=clamped, low_speed=False, beta_source=source)
        self._last_frame = frame
        return frame


def run_pipeline(samples: list[SensorSample], config: PipelineConfig,
                 params: VehicleParams,
                 true_stiffness: np.ndarray | None = None
                 ) -> tuple[list[EstimateFrame], StabilityMonitor | None]:
    """Run one variant over a full stream; one output frame per input frame.

    ``true_stiffness`` (per-frame (n, 2) array or constant (2,) pair) is only
    used to seed and feed the stability diagnostics on simulated runs.
    """
    if len(samples) == 0:
        raise ValueError("empty sample stream")
    stiff_arr = None
    if true_stiffness is not None:
        stiff_arr = np.asarray(true_stiffness, dtype=float)
        if stiff_arr.ndim == 1:
            stiff_arr = np.tile(stiff_arr, (len(samples), 1))
        if stiff_arr.shape != (len(samples), 2):
            raise ValueError("true_stiffness must be (2,) or (n_frames, 2)")

    pipe = EstimatorPipeline(
        config, params, samples[0],
        initial_true_stiffness=None if stiff_arr is None else stiff_arr[0])
    frames = [pipe.initial_frame]
    for i in range(1, len(samples)):
        frames.append(pipe.step(
            samples[i - 1], samples[i],
            true_stiffness=None if stiff_arr is None else stiff_arr[i]))
    return frames, pipe.monitor
