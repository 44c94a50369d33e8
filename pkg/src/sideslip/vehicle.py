"""Single-track vehicle models and state-space builders.

Everything here is a pure function of its inputs: the observers rebuild the
continuous-time matrices from the current sample at every step and discretize
them with a forward Euler step, so no module-level state exists.

State conventions:
    dynamics model   x = [v_y, r, sin_phi, d]   (lateral speed, yaw rate,
                     road-bank sine, lateral accelerometer bias)
    kinematics model x = [v_x, v_y, sin_phi]    (bank-augmented variant)
    planar variant   x = [v_x, v_y]             (bias-corrected input variant)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "G_STANDARD",
    "VehicleParams",
    "SensorSample",
    "StateSpace",
    "linear_tire_forces",
    "dynamics_state_space",
    "kinematics_state_space",
    "planar_kinematics_state_space",
    "forward_euler",
    "corrected_lateral_accel",
]

G_STANDARD = 9.80665


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the single-track (bicycle) model."""

    m: float        # vehicle mass [kg]
    i_z: float      # yaw moment of inertia [kg m^2]
    l_f: float      # COG to front axle [m]
    l_r: float      # COG to rear axle [m]
    c_f_nom: float  # nominal front cornering stiffness [N/rad]
    c_r_nom: float  # nominal rear cornering stiffness [N/rad]
    g: float = G_STANDARD

    def __post_init__(self) -> None:
        for name in ("m", "i_z", "l_f", "l_r", "c_f_nom", "c_r_nom", "g"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"VehicleParams.{name} must be strictly positive")

    @property
    def wheelbase(self) -> float:
        return self.l_f + self.l_r

    @property
    def theta_nominal(self) -> np.ndarray:
        """Nominal stiffness vector [c_f_nom, c_r_nom] in N/rad."""
        return np.array([self.c_f_nom, self.c_r_nom])

    @classmethod
    def default_sedan(cls) -> "VehicleParams":
        """Full-size test sedan used by the demos and default configuration."""
        return cls(m=2300.132, i_z=4400.0, l_f=1.505, l_r=1.504,
                   c_f_nom=160776.0, c_r_nom=254100.0)


@dataclass(frozen=True)
class SensorSample:
    """One sensor frame (100 Hz typical) as consumed by the observers."""

    t: float        # timestamp [s]
    a_x: float      # longitudinal accelerometer [m/s^2]
    a_y_sen: float  # lateral accelerometer incl. gravity component and bias [m/s^2]
    r: float        # yaw rate [rad/s]
    v_x: float      # longitudinal speed [m/s]
    delta_f: float  # front steering angle [rad]


@dataclass(frozen=True)
class StateSpace:
    """Generic (A, B, C, D) container, continuous or discrete."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self) -> None:
        n, n2 = self.a.shape
        if n != n2:
            raise ValueError("A must be square")
        if self.b.shape[0] != n:
            raise ValueError("B row count must match state dimension")
        if self.c.shape[1] != n:
            raise ValueError("C column count must match state dimension")
        if self.d.shape != (self.c.shape[0], self.b.shape[1]):
            raise ValueError("D must be (outputs x inputs)")

    @property
    def n_states(self) -> int:
        return self.a.shape[0]


def linear_tire_forces(params: VehicleParams, c_f: float, c_r: float,
                       v_y: float, r: float, v_x: float,
                       delta_f: float) -> tuple[float, float]:
    """Front/rear lateral forces of the linear tire model.

    F_yf = c_f * (delta_f - (v_y + l_f r) / v_x)
    F_yr = c_r * (-v_y + l_r r) / v_x
    """
    if v_x <= 0.0:
        raise ValueError("linear tire forces undefined for v_x <= 0")
    f_yf = c_f * (delta_f - (v_y + params.l_f * r) / v_x)
    f_yr = c_r * (-v_y + params.l_r * r) / v_x
    return f_yf, f_yr


def dynamics_state_space(params: VehicleParams, c_f: float, c_r: float,
                         v_x: float) -> StateSpace:
    """Lateral dynamics augmented with constant bank and accelerometer bias.

    State [v_y, r, sin_phi, d], input delta_f, output [a_y_sen, r].  Bank and
    bias rows are zero dynamics (random-walk disturbance model); bank couples
    into v_y through -g, bias feeds straight through to the measurement.
    """
    if v_x <= 0.0:
        raise ValueError("dynamics model singular for v_x <= 0")
    m, i_z, l_f, l_r, g = params.m, params.i_z, params.l_f, params.l_r, params.g
    a11 = -(c_f + c_r) / (m * v_x)
    a12 = -v_x - (l_f * c_f - l_r * c_r) / (m * v_x)
    a21 = (-l_f * c_f + l_r * c_r) / (i_z * v_x)
    a22 = -(l_f**2 * c_f + l_r**2 * c_r) / (i_z * v_x)
    a = np.array([
        [a11, a12, -g, 0.0],
        [a21, a22, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ])
    b = np.array([[c_f / m], [l_f * c_f / i_z], [0.0], [0.0]])
    c = np.array([
        [a11, -(l_f * c_f - l_r * c_r) / (m * v_x), 0.0, 1.0],
        [0.0, 1.0, 0.0, 0.0],
    ])
    d = np.array([[c_f / m], [0.0]])
    return StateSpace(a, b, c, d)


def kinematics_state_space(r: float, g: float = G_STANDARD) -> StateSpace:
    """Translational kinematics augmented with the road-bank sine.

    State [v_x, v_y, sin_phi], input [a_x, a_y_sen], output v_x.  The bank
    state removes the gravity component the lateral accelerometer picks up.
    """
    a = np.array([
        [0.0, r, 0.0],
        [-r, 0.0, -g],
        [0.0, 0.0, 0.0],
    ])
    b = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    c = np.array([[1.0, 0.0, 0.0]])
    d = np.zeros((1, 2))
    return StateSpace(a, b, c, d)


def planar_kinematics_state_space(r: float) -> StateSpace:
    """Plain two-state translational kinematics, state [v_x, v_y].

    Used with a lateral-acceleration input that the caller has already
    corrected for bank and bias (see :func:`corrected_lateral_accel`).
    """
    a = np.array([[0.0, r], [-r, 0.0]])
    b = np.eye(2)
    c = np.array([[1.0, 0.0]])
    d = np.zeros((1, 2))
    return StateSpace(a, b, c, d)


def forward_euler(ss: StateSpace, dt: float) -> StateSpace:
    """Forward Euler discretization: A_d = I + A dt, B_d = B dt; C, D kept."""
    if dt <= 0.0:
        raise ValueError("dt must be strictly positive")
    n = ss.n_states
    return StateSpace(np.eye(n) + ss.a * dt, ss.b * dt, ss.c, ss.d)


def corrected_lateral_accel(a_y_sen: float, sin_phi_hat: float, d_hat: float,
                            g: float = G_STANDARD) -> float:
    """Remove the estimated gravity component and sensor bias from a_y_sen."""
    return a_y_sen - g * sin_phi_hat - d_hat
