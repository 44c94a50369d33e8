"""Online tire cornering-stiffness identification.

The front/rear stiffness pair theta = [c_f, c_r] is identified from a 2x2
regression built out of measured signals and the kinematics observer's
lateral-velocity estimate.  The estimator is a regularized weighted least
squares with exponential forgetting: old samples are down-weighted
geometrically and a ridge term pulls the estimate toward the nominal pair
whenever the data carries little information.

Both the batch solution (reference/oracle) and the equivalent O(1) recursive
update used online are provided; they agree to floating-point accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import exp, pi
from typing import Iterable

import numpy as np

from .vehicle import SensorSample, VehicleParams

__all__ = [
    "AdaptationConfig",
    "AdaptationState",
    "RegressionSample",
    "yaw_accel_estimate",
    "build_regression",
    "batch_rwls",
    "recursive_rwls_step",
    "conditioning_gate",
    "clamp_stiffness",
]


@dataclass(frozen=True)
class AdaptationConfig:
    """Tuning knobs of the stiffness identification."""

    forgetting: float = 0.975        # geometric down-weighting of old samples
    regularization: float = 0.02     # ridge weight pulling toward nominal
    yaw_rate_min: float = 0.1        # [rad/s] gate below which adaptation is frozen
    max_condition_ratio: float = 20.0  # regressor-row ratio gate
    r_dot_cutoff_hz: float = 10.0    # low-pass cutoff for the yaw-accel estimate
    v_x_min: float = 1.0             # [m/s] regression not built below this speed
    clamp_lo: float = 0.1            # stiffness handed to the observer is kept
    clamp_hi: float = 3.0            # within [clamp_lo, clamp_hi] * nominal

    def __post_init__(self) -> None:
        if not 0.0 < self.forgetting < 1.0:
            raise ValueError("forgetting factor must be in (0, 1)")
        if self.regularization <= 0.0:
            raise ValueError("regularization weight must be > 0")
        if self.yaw_rate_min <= 0.0:
            raise ValueError("yaw_rate_min must be > 0")
        if self.max_condition_ratio <= 1.0:
            raise ValueError("max_condition_ratio must be > 1")
        if not 0.0 < self.clamp_lo < self.clamp_hi:
            raise ValueError("stiffness clamp bounds must satisfy 0 < lo < hi")


@dataclass(frozen=True)
class RegressionSample:
    """One regression frame: 2x2 regressor and force/moment outputs.

    ``phi_t`` is laid out so that row 1 matches the yaw-moment balance and
    row 2 the lateral-force balance; ``y = [i_z * r_dot, m * a_y_sen]``.
    ``y_tilde`` is the output with the nominal-stiffness prediction removed.
    """

    phi_t: np.ndarray  # (2, 2) regressor, transposed layout
    y: np.ndarray      # (2,)
    y_tilde: np.ndarray  # (2,) y - phi_t @ theta_nominal

    @property
    def phi(self) -> np.ndarray:
        return self.phi_t.T


def yaw_accel_estimate(r_now: float, r_prev: float, dt: float,
                       filter_state: float | None,
                       cutoff_hz: float = 10.0) -> tuple[float, float]:
    """Backward-difference yaw acceleration passed through a first-order low-pass.

    Returns ``(r_dot_filtered, new_filter_state)``.  ``filter_state`` is the
    previous filtered value; pass None on the first call to seed the filter
    with the raw difference (avoids a startup transient).
    """
    if dt <= 0.0:
        raise ValueError("dt must be strictly positive")
    raw = (r_now - r_prev) / dt
    if filter_state is None:
        return raw, raw
    alpha = 1.0 - exp(-2.0 * pi * cutoff_hz * dt)
    filtered = filter_state + alpha * (raw - filter_state)
    return filtered, filtered


def build_regression(s: SensorSample, v_y_hat_k: float, r_dot: float,
                     params: VehicleParams,
                     v_x_min: float = 1.0) -> RegressionSample:
    """Assemble one regression frame from a sensor sample.

    The unknown lateral velocity is replaced by the kinematics observer's
    estimate ``v_y_hat_k``; ``r_dot`` comes from :func:`yaw_accel_estimate`.
    """
    if s.v_x < v_x_min:
        raise ValueError(f"regression undefined below v_x_min={v_x_min} m/s")
    l_f, l_r = params.l_f, params.l_r
    r, v_x, delta_f = s.r, s.v_x, s.delta_f
    phi_t = np.array([
        [(-l_f**2 * r - l_f * v_y_hat_k) / v_x + l_f * delta_f,
         (-l_r**2 * r + l_r * v_y_hat_k) / v_x],
        [(-l_f * r - v_y_hat_k) / v_x + delta_f,
         (l_r * r - v_y_hat_k) / v_x],
    ])
    y = np.array([params.i_z * r_dot, params.m * s.a_y_sen])
    y_tilde = y - phi_t @ params.theta_nominal
    return RegressionSample(phi_t=phi_t, y=y, y_tilde=y_tilde)


@dataclass(frozen=True)
class AdaptationState:
    """Recursion state: deviation estimate, information matrix, step count."""

    theta_tilde: np.ndarray          # (2,) deviation from nominal [N/rad]
    r_info: np.ndarray               # (2, 2) forgetting-weighted information matrix
    theta_star: np.ndarray           # (2,) nominal + deviation (unclamped)
    k: int = 0

    @classmethod
    def initial(cls, theta_nominal: np.ndarray) -> "AdaptationState":
        return cls(theta_tilde=np.zeros(2), r_info=np.zeros((2, 2)),
                   theta_star=np.asarray(theta_nominal, dtype=float).copy(), k=0)


def _solve_2x2(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    if det == 0.0:
        raise ValueError("2x2 system is singular")
    return np.array([
        (mat[1, 1] * rhs[0] - mat[0, 1] * rhs[1]) / det,
        (mat[0, 0] * rhs[1] - mat[1, 0] * rhs[0]) / det,
    ])


def recursive_rwls_step(state: AdaptationState, sample: RegressionSample,
                        cfg: AdaptationConfig,
                        theta_plus: np.ndarray) -> AdaptationState:
    """One recursive update of the regularized weighted least squares.

    R_k     = lam R_{k-1} + Phi Phi^T
    e_k     = y_tilde - Phi^T theta_tilde
    dtheta  = (R_k + delta I)^-1 [delta (lam - 1) theta_tilde + Phi e_k]

    Only a 2x2 solve is needed; the ridge term guarantees invertibility.
    """
    lam, delta = cfg.forgetting, cfg.regularization
    phi = sample.phi
    r_new = lam * state.r_info + phi @ phi.T
    e = sample.y_tilde - sample.phi_t @ state.theta_tilde
    rhs = delta * (lam - 1.0) * state.theta_tilde + phi @ e
    gain_mat = r_new + delta * np.eye(2)
    theta_tilde = state.theta_tilde + _solve_2x2(gain_mat, rhs)
    return AdaptationState(theta_tilde=theta_tilde, r_info=r_new,
                           theta_star=theta_plus + theta_tilde, k=state.k + 1)


def batch_rwls(samples: Iterable[RegressionSample], cfg: AdaptationConfig,
               theta_plus: np.ndarray) -> np.ndarray:
    """Reference batch solution over a whole sample sequence.

    theta* = (sum lam^(k-i) Phi_i Phi_i^T + delta I)^-1
             (delta theta_plus + sum lam^(k-i) Phi_i y_i)

    Serves as the oracle for :func:`recursive_rwls_step`; an empty sequence
    returns the nominal pair (the ridge term alone).
    """
    lam, delta = cfg.forgetting, cfg.regularization
    s_acc = np.zeros((2, 2))
    b_acc = np.zeros(2)
    for sample in samples:
        phi = sample.phi
        s_acc = lam * s_acc + phi @ phi.T
        b_acc = lam * b_acc + phi @ sample.y
    rhs = delta * np.asarray(theta_plus, dtype=float) + b_acc
    return np.linalg.solve(s_acc + delta * np.eye(2), rhs)


def conditioning_gate(sample: RegressionSample, max_ratio: float) -> bool:
    """True when the force-row entries of the regressor are balanced.

    The ratio |phi_t(2,1) / phi_t(2,2)| approximates the regressor condition
    number (front/rear slip-angle ratio); frames outside [1/max_ratio,
    max_ratio] or with a zero denominator are rejected.
    """
    denom = sample.phi_t[1, 1]
    if denom == 0.0:
        return False
    ratio = abs(sample.phi_t[1, 0] / denom)
    return 1.0 / max_ratio <= ratio <= max_ratio


def clamp_stiffness(theta_star: np.ndarray, theta_plus: np.ndarray,
                    cfg: AdaptationConfig) -> tuple[np.ndarray, bool]:
    """Clip the identified stiffness into a physical band around nominal.

    The recursion state itself is never clamped, only the values handed to
    the dynamics observer; returns (clamped pair, whether clipping fired).
    """
    lo = cfg.clamp_lo * np.asarray(theta_plus, dtype=float)
    hi = cfg.clamp_hi * np.asarray(theta_plus, dtype=float)
    clamped = np.minimum(np.maximum(theta_star, lo), hi)
    return clamped, bool(np.any(clamped != theta_star))
