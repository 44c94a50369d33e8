"""Ground-truth plant and scenario generator.

A nonlinear single-track plant (RK4-integrated) plays the role of the test
vehicle: lateral dynamics with an optional road-bank profile, a brush-type
tire with force saturation, and a sensor model that produces the measured
lateral acceleration including the gravity component, a constant bias and
per-channel Gaussian noise.  Five named maneuvers cover the evaluation
matrix: slalom, severe single lane change, steady circle, banked double lane
change and stop-N-turn.

Generation is deterministic given (spec, seed): identical inputs reproduce
bit-identical streams.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .vehicle import G_STANDARD, SensorSample, VehicleParams

__all__ = [
    "PlantState",
    "TireModel",
    "NoiseLevels",
    "ScenarioSpec",
    "GroundTruth",
    "ScenarioRun",
    "SCENARIO_NAMES",
    "plant_step",
    "sample_sensors",
    "make_scenario",
    "generate_scenario",
    "steering_amplitude_for_lat_accel",
]

SCENARIO_NAMES = ("slalom", "severe_single_lane_change", "steady_circle",
                  "banked_double_lane_change", "stop_n_turn")

# Lateral dynamics freeze below this speed: slip angles are evaluated with a
# clamped denominator so the stop-N-turn dip stays integrable.
_V_SLIP_MIN = 0.5


@dataclass(frozen=True)
class PlantState:
    """Ground-truth vehicle state."""

    v_x: float
    v_y: float = 0.0
    r: float = 0.0
    psi: float = 0.0
    x: float = 0.0
    y: float = 0.0


@dataclass(frozen=True)
class TireModel:
    """Axle-lumped lateral tire law, linear or brush-saturated.

    The brush variant is C * tan(a) * (1 + |tan(a)/tan(a_sat)|^3)^(-1/3): it
    keeps the linear slope C at small slip (within 1% below ~20% of the
    saturation angle) and approaches the friction ceiling mu_peak * F_z
    asymptotically.  Saturation angles default to atan(mu_peak * F_z / C)
    with the static axle loads of the given vehicle.
    """

    kind: str = "linear"  # "linear" | "brush"
    c_f: float = 160776.0
    c_r: float = 254100.0
    mu_peak: float = 1.0
    alpha_sat_f: float | None = None
    alpha_sat_r: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "brush"):
            raise ValueError("tire kind must be 'linear' or 'brush'")
        if self.c_f <= 0 or self.c_r <= 0 or self.mu_peak <= 0:
            raise ValueError("tire parameters must be strictly positive")

    def saturation_angles(self, params: VehicleParams) -> tuple[float, float]:
        f_zf = params.m * params.g * params.l_r / params.wheelbase
        f_zr = params.m * params.g * params.l_f / params.wheelbase
        a_f = self.alpha_sat_f or math.atan(self.mu_peak * f_zf / self.c_f)
        a_r = self.alpha_sat_r or math.atan(self.mu_peak * f_zr / self.c_r)
        return a_f, a_r

    def lateral_forces(self, alpha_f: float, alpha_r: float,
                       params: VehicleParams) -> tuple[float, float]:
        if self.kind == "linear":
            return self.c_f * alpha_f, self.c_r * alpha_r
        a_sat_f, a_sat_r = self.saturation_angles(params)
        return (_brush_force(self.c_f, alpha_f, a_sat_f),
                _brush_force(self.c_r, alpha_r, a_sat_r))


def _brush_force(c: float, alpha: float, alpha_sat: float) -> float:
    u = math.tan(alpha)
    u_sat = math.tan(alpha_sat)
    return c * u * (1.0 + abs(u / u_sat) ** 3) ** (-1.0 / 3.0)


def _slip_angles(state: PlantState, delta_f: float,
                 params: VehicleParams) -> tuple[float, float]:
    v = max(state.v_x, _V_SLIP_MIN)
    alpha_f = delta_f - (state.v_y + params.l_f * state.r) / v
    alpha_r = (params.l_r * state.r - state.v_y) / v
    return alpha_f, alpha_r


def _lateral_derivs(state: PlantState, delta_f: float, phi: float,
                    tire: TireModel, params: VehicleParams) -> tuple[float, float]:
    """(v_y_dot, r_dot) from the force/moment balance."""
    alpha_f, alpha_r = _slip_angles(state, delta_f, params)
    f_yf, f_yr = tire.lateral_forces(alpha_f, alpha_r, params)
    cos_d = math.cos(delta_f)
    v_y_dot = (f_yf * cos_d + f_yr) / params.m \
        - params.g * math.sin(phi) - state.v_x * state.r
    r_dot = (params.l_f * f_yf * cos_d - params.l_r * f_yr) / params.i_z
    return v_y_dot, r_dot


def _advance(s: PlantState, k: tuple[float, ...], h: float) -> PlantState:
    return PlantState(v_x=max(s.v_x + h * k[0], 0.0), v_y=s.v_y + h * k[1],
                      r=s.r + h * k[2], psi=s.psi + h * k[3],
                      x=s.x + h * k[4], y=s.y + h * k[5])


def _rk4(state: PlantState, deriv_at, t: float, dt: float) -> PlantState:
    """Classic RK4 with a time-dependent derivative field."""
    k1 = deriv_at(t, state)
    k2 = deriv_at(t + dt / 2.0, _advance(state, k1, dt / 2.0))
    k3 = deriv_at(t + dt / 2.0, _advance(state, k2, dt / 2.0))
    k4 = deriv_at(t + dt, _advance(state, k3, dt))
    ksum = tuple((a + 2.0 * b + 2.0 * c + d) / 6.0
                 for a, b, c, d in zip(k1, k2, k3, k4))
    return _advance(state, ksum, dt)


def _full_derivs(s: PlantState, delta_f: float, a_x_cmd: float, phi: float,
                 tire: TireModel, params: VehicleParams) -> tuple[float, ...]:
    v_y_dot, r_dot = _lateral_derivs(s, delta_f, phi, tire, params)
    return (a_x_cmd, v_y_dot, r_dot, s.r,
            s.v_x * math.cos(s.psi) - s.v_y * math.sin(s.psi),
            s.v_x * math.sin(s.psi) + s.v_y * math.cos(s.psi))


def plant_step(state: PlantState, delta_f: float, a_x_cmd: float, phi: float,
               tire: TireModel, params: VehicleParams, dt: float) -> PlantState:
    """One RK4 step of the plant with inputs held constant over dt.

    The scenario generator evaluates its input profiles at the RK4 substep
    times instead (smooth steering); this fixed-input form is the public
    single-step primitive.
    """
    if dt <= 0.0:
        raise ValueError("dt must be strictly positive")
    return _rk4(state,
                lambda _t, s: _full_derivs(s, delta_f, a_x_cmd, phi, tire, params),
                0.0, dt)


@dataclass(frozen=True)
class NoiseLevels:
    """Per-channel sensor noise standard deviations.

    Defaults are the square roots of the default measurement covariances the
    estimator assumes (scale factor 1.0); the longitudinal accelerometer
    shares the lateral channel's grade and the steering sensor is treated as
    nearly exact.
    """

    a_x: float = 0.31622776601683794   # sqrt(0.1)
    a_y: float = 0.31622776601683794   # sqrt(0.1)
    r: float = 0.1                     # sqrt(0.01)
    v_x: float = 0.22360679774997896   # sqrt(0.05)
    delta_f: float = 0.002

    def scaled(self, factor: float) -> "NoiseLevels":
        return NoiseLevels(a_x=self.a_x * factor, a_y=self.a_y * factor,
                           r=self.r * factor, v_x=self.v_x * factor,
                           delta_f=self.delta_f * factor)


def sample_sensors(state: PlantState, v_y_dot: float, a_x_cmd: float,
                   phi: float, d: float, delta_f: float, t: float,
                   noise: NoiseLevels, rng: np.random.Generator,
                   g: float = G_STANDARD) -> SensorSample:
    """Produce one sensor frame from the plant state and its derivatives.

    a_y_sen = (v_y_dot + v_x r) + g sin(phi) + d + noise: the accelerometer
    reads specific force plus its bias.  Draw order is fixed (a_x, a_y, r,
    v_x, delta_f) so streams are reproducible given the generator state.
    """
    n_ax = rng.normal(0.0, noise.a_x) if noise.a_x > 0 else 0.0
    n_ay = rng.normal(0.0, noise.a_y) if noise.a_y > 0 else 0.0
    n_r = rng.normal(0.0, noise.r) if noise.r > 0 else 0.0
    n_vx = rng.normal(0.0, noise.v_x) if noise.v_x > 0 else 0.0
    n_delta = rng.normal(0.0, noise.delta_f) if noise.delta_f > 0 else 0.0
    return SensorSample(
        t=t,
        a_x=a_x_cmd - state.r * state.v_y + n_ax,
        a_y_sen=(v_y_dot + state.v_x * state.r) + g * math.sin(phi) + d + n_ay,
        r=state.r + n_r,
        v_x=state.v_x + n_vx,
        delta_f=delta_f + n_delta,
    )


@dataclass(frozen=True)
class ScenarioSpec:
    """Declarative description of one maneuver."""

    name: str
    duration: float
    seed: int = 0
    dt: float = 0.01
    speed: float = 50.0 / 3.6          # [m/s]
    steer_amplitude: float | None = None  # None: scenario default / auto-search
    target_lat_g: float | None = None     # lane change peak |a_y| target, in g
    pulse_period: float = 2.5             # lane-change steering pulse period [s]
    cone_spacing: float = 18.0            # slalom half-period distance [m]
    bank_deg: float = 14.0                # banked-scenario plateau
    bias: float = 0.0                     # lateral accelerometer bias [m/s^2]
    tire_kind: str = "linear"
    mu_peak: float = 1.0
    stiffness_scale: float = 1.0          # plant linear slope vs. nominal
    noise: NoiseLevels = field(default_factory=NoiseLevels)
    noise_scale: float = 1.0
    v_y0: float = 0.0

    def __post_init__(self) -> None:
        if self.name not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario '{self.name}'; pick from {SCENARIO_NAMES}")
        if self.duration <= 0 or self.dt <= 0 or self.speed <= 0:
            raise ValueError("duration, dt and speed must be strictly positive")
        if self.stiffness_scale <= 0:
            raise ValueError("stiffness_scale must be strictly positive")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be nonnegative")


@dataclass(frozen=True)
class GroundTruth:
    """Time-aligned ground truth emitted with every sensor stream."""

    t: np.ndarray
    v_x: np.ndarray
    v_y: np.ndarray
    r: np.ndarray
    beta: np.ndarray
    phi: np.ndarray
    d: np.ndarray
    c_f_eff: np.ndarray  # secant front stiffness F/alpha of the plant tire
    c_r_eff: np.ndarray


@dataclass(frozen=True)
class ScenarioRun:
    spec: ScenarioSpec
    samples: list[SensorSample]
    truth: GroundTruth
    tire: TireModel


def make_scenario(name: str, **overrides) -> ScenarioSpec:
    """ScenarioSpec with per-maneuver defaults applied before overrides."""
    defaults: dict = {
        "slalom": dict(duration=30.0, speed=50.0 / 3.6),
        "severe_single_lane_change": dict(duration=12.0, speed=60.0 / 3.6,
                                          target_lat_g=0.6),
        "steady_circle": dict(duration=30.0, speed=50.0 / 3.6),
        "banked_double_lane_change": dict(duration=60.0, speed=60.0 / 3.6),
        "stop_n_turn": dict(duration=30.0, speed=8.0),
    }[name]
    defaults.update(overrides)
    return ScenarioSpec(name=name, **defaults)


def steering_amplitude_for_lat_accel(params: VehicleParams, c_f: float,
                                     c_r: float, speed: float,
                                     a_y_target: float) -> float:
    """Steering amplitude reaching a_y_target in steady state (linear tire)."""
    k_us = params.m / params.wheelbase * (params.l_r / c_f - params.l_f / c_r)
    return a_y_target * (params.wheelbase + k_us * speed**2) / speed**2


def _search_lane_change_amplitude(params: VehicleParams, tire: TireModel,
                                  speed: float, period: float,
                                  target_g: float) -> float:
    """Bisect the pulse amplitude until peak |a_y| lands on target_g * g."""

    def pulse(t: float, amp: float) -> float:
        return amp * math.sin(2.0 * math.pi * t / period) if 0.0 <= t < period else 0.0

    def peak_a_y(amp: float) -> float:
        state = PlantState(v_x=speed)
        dt, peak = 0.01, 0.0
        steps = int(period / dt) + 200
        for k in range(steps):
            t = k * dt
            v_y_dot, _ = _lateral_derivs(state, pulse(t, amp), 0.0, tire, params)
            peak = max(peak, abs(v_y_dot + state.v_x * state.r))
            state = _rk4(state,
                         lambda tau, s: _full_derivs(s, pulse(tau, amp), 0.0, 0.0,
                                                     tire, params),
                         t, dt)
        return peak

    target = target_g * params.g
    lo, hi = 0.0, 0.6
    if peak_a_y(hi) < target:
        raise ValueError("lane-change target lateral acceleration unreachable")
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if peak_a_y(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-4:
            break
    return 0.5 * (lo + hi)


def _ramp(t: float, t0: float, t1: float) -> float:
    """Smooth 0 -> 1 cosine ramp between t0 and t1."""
    if t <= t0:
        return 0.0
    if t >= t1:
        return 1.0
    return 0.5 * (1.0 - math.cos(math.pi * (t - t0) / (t1 - t0)))


def _sine_pulse(t: float, t0: float, period: float, amp: float) -> float:
    if t0 <= t < t0 + period:
        return amp * math.sin(2.0 * math.pi * (t - t0) / period)
    return 0.0


def _build_profiles(spec: ScenarioSpec, params: VehicleParams, tire: TireModel):
    """Return (steer(t), a_x_cmd(t), bank(t)) callables for the maneuver."""
    v = spec.speed
    bank_rad = math.radians(spec.bank_deg)
    zero = lambda t: 0.0

    if spec.name == "slalom":
        freq = v / (2.0 * spec.cone_spacing)
        amp = spec.steer_amplitude
        if amp is None:
            target = 0.8 * spec.mu_peak * params.g if tire.kind == "brush" else 0.45 * params.g
            amp = steering_amplitude_for_lat_accel(params, tire.c_f, tire.c_r, v, target)
            amp = min(amp * (1.5 if tire.kind == "brush" else 1.0), 0.45)
        steer = lambda t: amp * math.sin(2.0 * math.pi * freq * t) * _ramp(t, 0.0, 2.0)
        return steer, zero, zero

    if spec.name == "severe_single_lane_change":
        period, t0 = spec.pulse_period, 3.0
        amp = spec.steer_amplitude
        if amp is None:
            amp = _search_lane_change_amplitude(params, tire, v, period,
                                                spec.target_lat_g or 0.6)
        steer = lambda t: _sine_pulse(t, t0, period, amp)
        return steer, zero, zero

    if spec.name == "steady_circle":
        amp = spec.steer_amplitude
        if amp is None:
            amp = steering_amplitude_for_lat_accel(params, tire.c_f, tire.c_r,
                                                   v, 0.3 * params.g)
        steer = lambda t: amp * _ramp(t, 1.0, 4.0)
        return steer, zero, zero

    if spec.name == "banked_double_lane_change":
        # lane-change pulses ride the bank ramp, the hardest stretch for any
        # estimator that leans on the lateral accelerometer
        period = spec.pulse_period
        amp = spec.steer_amplitude
        if amp is None:
            amp = steering_amplitude_for_lat_accel(params, tire.c_f, tire.c_r,
                                                   v, 0.25 * params.g)
        steer = lambda t: (_sine_pulse(t, 8.0, period, amp)
                           + _sine_pulse(t, 8.0 + period + 2.0, period, -amp))
        bank = lambda t: bank_rad * _ramp(t, 5.0, 12.0)
        return steer, zero, bank

    # stop_n_turn: decelerate to a crawl, turn ~90 deg, accelerate back.
    v_low, decel, accel = 1.5, -1.3, 1.0
    t_dec0 = 4.0
    t_dec1 = t_dec0 + (v_low - v) / decel
    t_acc0 = t_dec1 + 6.0
    t_acc1 = t_acc0 + (v - v_low) / accel
    amp = spec.steer_amplitude if spec.steer_amplitude is not None else 0.35

    def a_x_cmd(t: float) -> float:
        if t_dec0 <= t < t_dec1:
            return decel
        if t_acc0 <= t < t_acc1:
            return accel
        return 0.0

    def steer(t: float) -> float:
        # bell-shaped pulse centered in the low-speed window
        mid = 0.5 * (t_dec1 + t_acc0)
        width = 2.0
        return amp * math.exp(-0.5 * ((t - mid) / width) ** 2)

    return steer, a_x_cmd, zero


def _secant_stiffness(tire: TireModel, alpha_f: float, alpha_r: float,
                      params: VehicleParams) -> tuple[float, float]:
    f_yf, f_yr = tire.lateral_forces(alpha_f, alpha_r, params)
    c_f = f_yf / alpha_f if abs(alpha_f) > 1e-9 else tire.c_f
    c_r = f_yr / alpha_r if abs(alpha_r) > 1e-9 else tire.c_r
    return c_f, c_r


def generate_scenario(spec: ScenarioSpec, params: VehicleParams) -> ScenarioRun:
    """Simulate one maneuver and emit aligned sensor and ground-truth streams."""
    tire = TireModel(kind=spec.tire_kind,
                     c_f=spec.stiffness_scale * params.c_f_nom,
                     c_r=spec.stiffness_scale * params.c_r_nom,
                     mu_peak=spec.mu_peak)
    steer, a_x_cmd, bank = _build_profiles(spec, params, tire)
    noise = spec.noise.scaled(spec.noise_scale)
    rng = np.random.default_rng(spec.seed)

    n = int(round(spec.duration / spec.dt))
    state = PlantState(v_x=spec.speed, v_y=spec.v_y0)
    samples: list[SensorSample] = []
    cols: dict[str, list[float]] = {key: [] for key in
                                    ("t", "v_x", "v_y", "r", "beta", "phi", "d",
                                     "c_f_eff", "c_r_eff")}
    for k in range(n):
        t = k * spec.dt
        delta_f, a_x, phi = steer(t), a_x_cmd(t), bank(t)
        v_y_dot, _ = _lateral_derivs(state, delta_f, phi, tire, params)
        samples.append(sample_sensors(state, v_y_dot, a_x, phi, spec.bias,
                                      delta_f, t, noise, rng, params.g))
        alpha_f, alpha_r = _slip_angles(state, delta_f, params)
        c_f_eff, c_r_eff = _secant_stiffness(tire, alpha_f, alpha_r, params)
        cols["t"].append(t)
        cols["v_x"].append(state.v_x)
        cols["v_y"].append(state.v_y)
        cols["r"].append(state.r)
        cols["beta"].append(math.atan2(state.v_y, max(state.v_x, _V_SLIP_MIN)))
        cols["phi"].append(phi)
        cols["d"].append(spec.bias)
        cols["c_f_eff"].append(c_f_eff)
        cols["c_r_eff"].append(c_r_eff)
        # integrate with the profiles evaluated at the RK4 substep times, so
        # the emitted instantaneous derivatives stay consistent with the
        # trajectory (steering is smooth, not a 100 Hz staircase)
        state = _rk4(state,
                     lambda tau, s: _full_derivs(s, steer(tau), a_x_cmd(tau),
                                                 bank(tau), tire, params),
                     t, spec.dt)

    truth = GroundTruth(**{key: np.array(val) for key, val in cols.items()})
    return ScenarioRun(spec=spec, samples=samples, truth=truth, tire=tire)
