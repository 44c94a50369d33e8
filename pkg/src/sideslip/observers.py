"""Concrete observers: the 4-state dynamics filter and two kinematics filters.

The dynamics observer estimates [v_y, r, sin_phi, d] from the steering input
and the [a_y_sen, r] measurement pair, with the tire stiffness pair supplied
by the caller (fixed nominal or adapted).  The kinematics observer estimates
lateral velocity from accelerometer dead-reckoning with the measured v_x as
its only correction; it comes in a 3-state variant carrying the bank sine as
a state and a 2-state variant that instead consumes a bias/bank-corrected
lateral acceleration.

Observers are immutable values; step() returns a new observer.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .kalman import NoiseConfig, ObserverState, kf_update
from .vehicle import (SensorSample, VehicleParams, dynamics_state_space,
                      forward_euler, kinematics_state_space,
                      planar_kinematics_state_space)

__all__ = ["LowSpeedError", "DynamicsObserver", "KinematicsObserver",
           "reset_kinematics_from_dynamics"]


class LowSpeedError(ValueError):
    """Raised when a dynamics-model step is requested below the speed guard."""


@dataclass(frozen=True)
class DynamicsObserver:
    """Bicycle-dynamics filter over [v_y, r, sin_phi, d]."""

    params: VehicleParams
    state: ObserverState
    noise: NoiseConfig
    c_f: float
    c_r: float
    v_x_min: float = 1.0

    @classmethod
    def initial(cls, params: VehicleParams, noise: NoiseConfig,
                first: SensorSample, p0: np.ndarray | None = None,
                v_y0: float = 0.0) -> "DynamicsObserver":
        # True v_y is unavailable on real logs; default starts the state at zero.
        x0 = np.array([v_y0, first.r, 0.0, 0.0])
        p = np.eye(4) if p0 is None else np.asarray(p0, dtype=float)
        return cls(params=params, state=ObserverState(x=x0, p=p),
                   noise=noise, c_f=params.c_f_nom, c_r=params.c_r_nom)

    @property
    def v_y(self) -> float:
        return float(self.state.x[0])

    @property
    def sin_phi(self) -> float:
        return float(self.state.x[2])

    @property
    def bias(self) -> float:
        return float(self.state.x[3])

    def with_stiffness(self, c_f: float, c_r: float) -> "DynamicsObserver":
        return replace(self, c_f=c_f, c_r=c_r)

    def step(self, s_prev: SensorSample, s_now: SensorSample, dt: float) -> "DynamicsObserver":
        if s_now.v_x < self.v_x_min:
            raise LowSpeedError(f"dynamics observer requires v_x >= {self.v_x_min} m/s")
        ss = forward_euler(dynamics_state_space(self.params, self.c_f, self.c_r,
                                                s_now.v_x), dt)
        new = kf_update(self.state, ss,
                        u_prev=np.array([s_prev.delta_f]),
                        u_now=np.array([s_now.delta_f]),
                        y_now=np.array([s_now.a_y_sen, s_now.r]),
                        noise=self.noise)
        x = new.x.copy()
        x[2] = min(1.0, max(-1.0, x[2]))  # sin(phi) stays a sine
        return replace(self, state=ObserverState(x=x, p=new.p, k=new.k))


@dataclass(frozen=True)
class KinematicsObserver:
    """Translational-kinematics filter; variant "bank" (3 states) or "planar" (2)."""

    variant: str
    state: ObserverState
    noise: NoiseConfig
    g: float

    @classmethod
    def initial(cls, variant: str, noise: NoiseConfig, first: SensorSample,
                g: float, p0: np.ndarray | None = None,
                v_y0: float = 0.0) -> "KinematicsObserver":
        if variant not in ("bank", "planar"):
            raise ValueError("variant must be 'bank' or 'planar'")
        n = 3 if variant == "bank" else 2
        x0 = np.array([first.v_x, v_y0, 0.0])[:n]
        p = np.eye(n) if p0 is None else np.asarray(p0, dtype=float)
        return cls(variant=variant, state=ObserverState(x=x0, p=p), noise=noise, g=g)

    @property
    def v_y(self) -> float:
        return float(self.state.x[1])

    def step(self, s_prev: SensorSample, s_now: SensorSample, dt: float,
             a_y_corrected: float | None = None) -> "KinematicsObserver":
        """Advance one sample.

        The planar variant integrates ``a_y_corrected`` (the lateral
        accelerometer with the estimated gravity component and bias removed);
        the bank variant consumes the raw reading and carries the bank state
        itself.

        The rotation matrix is built at s_prev.r so the r*v_x coupling and
        the accelerometer input are sampled at the same instant; mixing the
        two phases leaks a systematic lateral-velocity error.
        """
        if self.variant == "bank":
            ss = forward_euler(kinematics_state_space(s_prev.r, self.g), dt)
            u_prev = np.array([s_prev.a_x, s_prev.a_y_sen])
            u_now = np.array([s_now.a_x, s_now.a_y_sen])
        else:
            if a_y_corrected is None:
                a_y_corrected = s_prev.a_y_sen
            ss = forward_euler(planar_kinematics_state_space(s_prev.r), dt)
            u_prev = np.array([s_prev.a_x, a_y_corrected])
            u_now = np.array([s_now.a_x, a_y_corrected])
        new = kf_update(self.state, ss, u_prev=u_prev, u_now=u_now,
                        y_now=np.array([s_now.v_x]), noise=self.noise)
        x = new.x.copy()
        if self.variant == "bank":
            x[2] = min(1.0, max(-1.0, x[2]))
        return replace(self, state=ObserverState(x=x, p=new.p, k=new.k))


def reset_kinematics_from_dynamics(kin: KinematicsObserver, dyn: DynamicsObserver,
                                   v_x_meas: float) -> KinematicsObserver:
    """Overwrite the kinematics state with the dynamics estimate.

    Applied whenever the yaw-rate gate is closed: the kinematics model is
    unobservable there and would drift, so its state is pinned to the
    dynamics observer (v_x to the measured speed, with zero variance).
    """
    p_d = dyn.state.p
    if kin.variant == "bank":
        x = np.array([v_x_meas, dyn.v_y, dyn.sin_phi])
        p = np.diag([0.0, p_d[0, 0], p_d[2, 2]])
    else:
        x = np.array([v_x_meas, dyn.v_y])
        p = np.diag([0.0, p_d[0, 0]])
    return replace(kin, state=ObserverState(x=x, p=p, k=kin.state.k))
