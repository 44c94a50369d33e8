"""Runtime stability diagnostics for the stiffness adaptation.

The recursive identifier admits an exact refactoring into two scalar-output
substeps per sample, one per singular direction of the regressor.  In that
form the update behaves like a feedback loop whose energy bookkeeping can be
monitored online: per-substep gain matrices, scaled prediction errors, a
dissipation rate ``eta``, and a running passivity (Popov) sum.  None of this
runs in the estimation hot path; it is opt-in instrumentation for analysis
runs and regression tests.

Substep conventions (n = 1, 2, ... over accepted samples, two per sample):
    odd n   first singular pair,  alpha_n = forgetting factor
    even n  second singular pair, alpha_n = 1
    beta_n  the scale mu of the active singular pair
    beta_0 = 1 and f_0 = I / regularization (empty information matrix)

Quantities tied to the true parameters (scaled deviation, free-response
error, parameter-rate bound) are only available when the caller supplies the
ground-truth stiffness, i.e. in simulation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adaptation import AdaptationConfig, AdaptationState, RegressionSample, recursive_rwls_step

__all__ = [
    "SvdSplit",
    "svd_split",
    "gain_split_update",
    "dissipation_rate",
    "eta_condition",
    "dissipation_feasibility",
    "suggest_regularization",
    "SubstepRecord",
    "StabilityTrace",
    "StabilityMonitor",
    "popov_sum",
    "theta_error_bound",
]


@dataclass(frozen=True)
class SvdSplit:
    """Singular-value split of one 2x2 regressor.

    phi_j = sigma_j * u_j are the rank-one directions whose outer products
    rebuild Phi Phi^T; mu_j >= 1 absorb the ridge leak into each direction.
    The right singular vectors v_j project the 2-vector output onto the
    scalar measurement seen by each substep.
    """

    sigma1: float
    sigma2: float
    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    mu1: float
    mu2: float
    ridge_leak: float  # regularization * (1 - forgetting)


def svd_split(phi: np.ndarray, forgetting: float, regularization: float) -> SvdSplit:
    """Split a full-rank 2x2 regressor into its two singular pairs.

    Raises ValueError on (numerically) rank-deficient input; the adaptation
    gates are expected to reject such frames upstream.
    """
    u, s, vh = np.linalg.svd(phi)
    sigma1, sigma2 = float(s[0]), float(s[1])
    if not np.isfinite(sigma1) or sigma2 <= sigma1 * 1e-14 or sigma2 <= 0.0:
        raise ValueError("regressor is rank deficient; singular split undefined")
    leak = regularization * (1.0 - forgetting)
    mu1 = (sigma1**2 + leak) / sigma1**2
    mu2 = (sigma2**2 + leak) / sigma2**2
    return SvdSplit(sigma1=sigma1, sigma2=sigma2,
                    u1=u[:, 0].copy(), u2=u[:, 1].copy(),
                    v1=vh[0, :].copy(), v2=vh[1, :].copy(),
                    phi1=sigma1 * u[:, 0], phi2=sigma2 * u[:, 1],
                    mu1=mu1, mu2=mu2, ridge_leak=leak)


def _rank_one_gain_update(f_prev: np.ndarray, phi: np.ndarray,
                          alpha: float, beta: float) -> np.ndarray:
    """f_new = (alpha f_prev^-1 + beta phi phi^T)^-1 via Sherman-Morrison."""
    f_phi = f_prev @ phi
    denom = alpha / beta + phi @ f_phi
    return (f_prev - np.outer(f_phi, f_phi) / denom) / alpha


def gain_split_update(f_prev: np.ndarray, split: SvdSplit,
                      forgetting: float) -> tuple[np.ndarray, np.ndarray]:
    """Two rank-one updates of the adaptation gain, one per singular pair.

    Returns (f_mid, f_new).  Internally cross-checks f_new against the
    directly inverted one-shot expression
    (forgetting * f_prev^-1 + ridge_leak * I + Phi Phi^T)^-1 and raises
    ArithmeticError if they disagree beyond 1e-9 relative.
    """
    if not np.allclose(f_prev, f_prev.T, rtol=1e-9, atol=1e-12):
        raise ValueError("gain matrix must be symmetric")
    if np.any(np.linalg.eigvalsh(f_prev) <= 0.0):
        raise ValueError("gain matrix must be positive definite")
    f_mid = _rank_one_gain_update(f_prev, split.phi1, forgetting, split.mu1)
    f_new = _rank_one_gain_update(f_mid, split.phi2, 1.0, split.mu2)

    phi_outer = np.outer(split.phi1, split.phi1) + np.outer(split.phi2, split.phi2)
    direct = np.linalg.inv(forgetting * np.linalg.inv(f_prev)
                           + split.ridge_leak * np.eye(2) + phi_outer)
    err = np.linalg.norm(f_new - direct) / max(np.linalg.norm(direct), 1e-300)
    if err > 1e-9:
        raise ArithmeticError(f"split gain update deviates from one-shot inverse ({err:.2e})")
    return f_mid, f_new


def dissipation_rate(beta_prev: float, beta_now: float, alpha_next: float) -> tuple[float, bool]:
    """eta = (2 - alpha_next) / beta_now - 1 / beta_prev and its sign test.

    Nonnegative eta means the substep dissipates energy; the passivity sum
    can only stay bounded below when eta >= 0 holds along the run.
    """
    eta = (2.0 - alpha_next) / beta_now - 1.0 / beta_prev
    return eta, eta >= 0.0


def eta_condition(split_prev: SvdSplit | None, split_now: SvdSplit,
                  alpha_next: float) -> tuple[float, bool]:
    """Dissipation rate at a substep boundary expressed through the splits.

    ``alpha_next == 1`` addresses the odd substep (first singular pair of
    ``split_now`` following the second pair of ``split_prev``); any other
    value addresses the even substep within ``split_now``.  ``split_prev``
    may be None for the very first substep (previous scale defaults to 1).
    """
    if alpha_next == 1.0:
        beta_prev = split_prev.mu2 if split_prev is not None else 1.0
        return dissipation_rate(beta_prev, split_now.mu1, 1.0)
    return dissipation_rate(split_now.mu1, split_now.mu2, alpha_next)


def dissipation_feasibility(sigma1: float, sigma2: float, forgetting: float,
                            regularization: float) -> tuple[float, bool]:
    """Feasibility of the within-step dissipation condition.

    value = sigma1^2 sigma2^2 + delta (2 - lambda) sigma2^2 - delta sigma1^2;
    a nonnegative value is equivalent to eta >= 0 at the even substep for
    the given singular values.
    """
    if not sigma1 >= sigma2 > 0.0:
        raise ValueError("requires sigma1 >= sigma2 > 0")
    value = (sigma1**2 * sigma2**2
             + regularization * (2.0 - forgetting) * sigma2**2
             - regularization * sigma1**2)
    return value, value >= 0.0


def suggest_regularization(sigma1: float, sigma2: float) -> float:
    """Starting ridge weight keeping the dissipation condition satisfiable.

    delta ~= 1 / (1/sigma2^2 - 1/sigma1^2); undefined for equal singular
    values (any ridge works there, the constraint is vacuous).
    """
    if not sigma1 > sigma2 > 0.0:
        raise ValueError("requires sigma1 > sigma2 > 0 (equal values leave delta unconstrained)")
    return 1.0 / (1.0 / sigma2**2 - 1.0 / sigma1**2)


@dataclass(frozen=True)
class SubstepRecord:
    """Everything logged for one scalar substep of the adaptation."""

    n: int                 # substep index, 1-based
    step: int              # accepted-sample index, 1-based
    pair: int              # 1 or 2: which singular pair
    alpha: float
    beta: float
    sigma: float
    mu: float
    phi: np.ndarray        # active rank-one direction sigma_j * u_j
    eps_prior: float       # scaled a-priori prediction error
    eps_post: float        # scaled a-posteriori prediction error
    eta: float
    eta_ok: bool
    w: float               # reconstruction output w_n
    s: float               # reconstruction input  s_n
    increment: float       # w_n * s_n
    popov: float           # running sum of increments
    f: np.ndarray          # gain matrix after this substep
    cond_f: float
    theta_sub: np.ndarray  # deviation estimate after this substep
    eps_free: float | None        # free response of the disturbance-free error system
    true_dev: np.ndarray | None   # ground-truth parameter deviation, if known
    scaled_dev: np.ndarray | None  # beta_n * theta_sub - true_dev


@dataclass
class StabilityTrace:
    """Append-only substep log plus per-step summaries."""

    rows: list[SubstepRecord] = field(default_factory=list)
    feasibility: list[tuple[int, float, bool]] = field(default_factory=list)
    oneshot_mismatch: list[float] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])


def popov_sum(trace: StabilityTrace, up_to: int | None = None) -> float:
    """Passivity sum over substeps 1..up_to (all rows when None)."""
    rows = trace.rows if up_to is None else trace.rows[:up_to]
    return float(sum(row.w * row.s for row in rows))


def theta_error_bound(trace: StabilityTrace, n: int) -> float:
    """Radius below which the parameter error may stall at substep n.

    bound = 2 cond(f_{n-1}) / eta_n * ||true_dev_n / beta_n
                                        - true_dev_{n-1} / beta_{n-1}||

    Requires a positive dissipation rate and a ground-truth deviation trace
    (simulation only); raises ValueError otherwise.
    """
    if not 1 <= n <= len(trace.rows):
        raise ValueError("substep index out of range")
    row = trace.rows[n - 1]
    if row.eta <= 0.0:
        raise ValueError("bound undefined for eta <= 0")
    if row.true_dev is None:
        raise ValueError("ground-truth parameter trace unavailable on this run")
    if n == 1:
        f_prev_cond, prev_dev, prev_beta = 1.0, np.zeros(2), 1.0
    else:
        prev = trace.rows[n - 2]
        f_prev_cond = prev.cond_f
        if prev.true_dev is None:
            raise ValueError("ground-truth parameter trace unavailable on this run")
        prev_dev, prev_beta = prev.true_dev, prev.beta
    rate = np.linalg.norm(row.true_dev / row.beta - prev_dev / prev_beta)
    return 2.0 * f_prev_cond / row.eta * rate


class StabilityMonitor:
    """Runs the substep refactoring alongside the one-shot identifier.

    update() consumes exactly the accepted regression samples, in order.  The
    monitor keeps its own copy of the recursion (substep form) and verifies
    at every sample that it reproduces the one-shot update it shadows.

    ``initial_true_deviation`` (theta_true - theta_nominal at the start of
    the run) seeds the free response of the disturbance-free error system;
    its decay is the empirical hyperstability check.
    """

    def __init__(self, cfg: AdaptationConfig,
                 initial_true_deviation: np.ndarray | None = None):
        self.cfg = cfg
        self.f = np.eye(2) / cfg.regularization
        self.theta_sub = np.zeros(2)
        self.beta_prev = 1.0
        self.popov = 0.0
        self.recon_dev = np.zeros(2)  # error-system state rebuilt from measured errors
        self.free_dev = (None if initial_true_deviation is None
                         else -np.asarray(initial_true_deviation, dtype=float))
        self._oneshot = AdaptationState.initial(np.zeros(2))
        self.n = 0
        self.step = 0
        self.trace = StabilityTrace()

    def update(self, sample: RegressionSample,
               true_dev: np.ndarray | None = None) -> None:
        cfg = self.cfg
        lam = cfg.forgetting
        split = svd_split(sample.phi, lam, cfg.regularization)
        self.step += 1
        self.trace.feasibility.append(
            (self.step, *dissipation_feasibility(split.sigma1, split.sigma2,
                                                 lam, cfg.regularization)))

        for pair, phi_n, sigma, mu, ytilde_n in (
                (1, split.phi1, split.sigma1, split.mu1, float(split.v1 @ sample.y_tilde)),
                (2, split.phi2, split.sigma2, split.mu2, float(split.v2 @ sample.y_tilde))):
            self.n += 1
            alpha = lam if pair == 1 else 1.0
            alpha_next = 1.0 if pair == 1 else lam
            beta = mu
            f_prev = self.f
            f_new = _rank_one_gain_update(f_prev, phi_n, alpha, beta)

            eps_prior = ytilde_n - beta * float(phi_n @ self.theta_sub)
            theta_new = self.theta_sub + f_new @ phi_n * eps_prior
            eps_post = ytilde_n - beta * float(phi_n @ theta_new)

            eta, eta_ok = dissipation_rate(self.beta_prev, beta, alpha_next)

            # Error-system state rebuilt from the measured a-posteriori error;
            # with eta >= 0 the resulting passivity sum is nonnegative by
            # construction, so dips flag either eta < 0 or an implementation bug.
            recon_new = (beta / self.beta_prev) * self.recon_dev \
                + (beta / alpha) * (f_prev @ phi_n) * eps_post
            w = float(recon_new @ phi_n)
            s = eps_post + 0.5 * alpha_next * w
            increment = w * s
            self.popov += increment

            eps_free = None
            if self.free_dev is not None:
                gain_scalar = float(phi_n @ f_prev @ phi_n)
                eps_free_prior = -(beta / self.beta_prev) * float(phi_n @ self.free_dev)
                eps_free = alpha * eps_free_prior / (alpha + beta * gain_scalar)
                self.free_dev = (beta / self.beta_prev) * self.free_dev \
                    + (beta / alpha) * (f_prev @ phi_n) * eps_free

            scaled_dev = None if true_dev is None else beta * theta_new - np.asarray(true_dev, dtype=float)

            cond_f = float(np.linalg.cond(f_new))
            self.trace.rows.append(SubstepRecord(
                n=self.n, step=self.step, pair=pair, alpha=alpha, beta=beta,
                sigma=sigma, mu=mu, phi=phi_n.copy(),
                eps_prior=eps_prior, eps_post=eps_post,
                eta=eta, eta_ok=eta_ok, w=w, s=s, increment=increment,
                popov=self.popov, f=f_new.copy(), cond_f=cond_f,
                theta_sub=theta_new.copy(), eps_free=eps_free,
                true_dev=None if true_dev is None else np.asarray(true_dev, dtype=float).copy(),
                scaled_dev=scaled_dev))

            self.f = f_new
            self.theta_sub = theta_new
            self.beta_prev = beta
            self.recon_dev = recon_new

        self._oneshot = recursive_rwls_step(self._oneshot, sample, cfg, np.zeros(2))
        scale = max(float(np.linalg.norm(self._oneshot.theta_tilde)), 1.0)
        self.trace.oneshot_mismatch.append(
            float(np.linalg.norm(self.theta_sub - self._oneshot.theta_tilde)) / scale)
