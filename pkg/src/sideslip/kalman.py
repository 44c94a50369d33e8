"""Discrete-time Kalman update for time-varying linear(ized) models.

All observer variants share this single update: the surrounding code
re-linearizes the model at each sample, so the "extended" filter reduces to a
plain time-varying linear update.  The covariance is propagated in Joseph form
and re-symmetrized after every step to keep round-off drift under control.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NoiseConfig", "ObserverState", "kf_update", "symmetrize"]


def symmetrize(p: np.ndarray) -> np.ndarray:
    """Return (P + P^T) / 2."""
    return (p + p.T) / 2.0


@dataclass(frozen=True)
class NoiseConfig:
    """Process (w) and measurement (v) noise covariances."""

    w: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        for name in ("w", "v"):
            mat = getattr(self, name)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError(f"{name} must be a square matrix")
            if not np.allclose(mat, mat.T, rtol=1e-10, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
        if np.any(np.linalg.eigvalsh(self.w) < -1e-12):
            raise ValueError("w must be positive semidefinite")
        try:
            np.linalg.cholesky(self.v)
        except np.linalg.LinAlgError as exc:
            raise ValueError("v must be positive definite") from exc


@dataclass(frozen=True)
class ObserverState:
    """Mean vector and covariance of one observer, plus its step index."""

    x: np.ndarray
    p: np.ndarray
    k: int = 0

    def __post_init__(self) -> None:
        if self.p.shape != (self.x.shape[0], self.x.shape[0]):
            raise ValueError("covariance shape must match state dimension")


def kf_update(state: ObserverState, ss, u_prev: np.ndarray, u_now: np.ndarray,
              y_now: np.ndarray, noise: NoiseConfig) -> ObserverState:
    """One predict + measurement update on a discrete-time model.

    Predicts with (A, B) and the previous input, then corrects against the
    new measurement using (C, D) and the current input:

        x-  = A x + B u_prev
        P-  = A P A^T + W
        K   = P- C^T (C P- C^T + V)^-1
        x+  = x- + K (y - C x- - D u_now)
        P+  = (I - K C) P- (I - K C)^T + K V K^T

    Raises ValueError when the innovation covariance is not invertible.
    """
    a, b, c, d = ss.a, ss.b, ss.c, ss.d
    x_pred = a @ state.x + b @ u_prev
    p_pred = symmetrize(a @ state.p @ a.T + noise.w)

    innovation = y_now - c @ x_pred - d @ u_now
    s = c @ p_pred @ c.T + noise.v
    try:
        s_chol = np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise ValueError("innovation covariance is singular; check V and the model") from exc
    # K = P- C^T S^-1 via two triangular solves
    k_gain = np.linalg.solve(s_chol.T, np.linalg.solve(s_chol, c @ p_pred)).T

    x_new = x_pred + k_gain @ innovation
    i_kc = np.eye(state.x.shape[0]) - k_gain @ c
    p_new = symmetrize(i_kc @ p_pred @ i_kc.T + k_gain @ noise.v @ k_gain.T)
    return ObserverState(x=x_new, p=p_new, k=state.k + 1)
