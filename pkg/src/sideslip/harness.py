"""Run harness: log files, metrics, configuration and batch execution.

Log format (CSV, header row, SI units, '.' decimal):

    t,ax,ay_sen,r,vx,delta_f[,beta_true,vy_true,phi_true,d_true]

Floats are written with shortest round-trip formatting, so a simulated log
read back from disk reproduces the in-memory stream bit-exactly.  Metrics are
emitted both as a human-readable table and as JSON.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .adaptation import AdaptationConfig
from .pipeline import VARIANTS, EstimateFrame, PipelineConfig, run_pipeline
from .simulator import GroundTruth, ScenarioRun
from .stability import StabilityMonitor
from .vehicle import SensorSample, VehicleParams

__all__ = [
    "SENSOR_COLUMNS", "TRUTH_COLUMNS", "SchemaError", "Metrics",
    "rms", "write_log", "ingest_log", "evaluate_frames", "run_estimate",
    "compare_variants", "write_trace", "metrics_table",
    "default_config", "config_to_dict", "load_config",
]

SENSOR_COLUMNS = ("t", "ax", "ay_sen", "r", "vx", "delta_f")
TRUTH_COLUMNS = ("beta_true", "vy_true", "phi_true", "d_true")


class SchemaError(ValueError):
    """Log file does not match the expected column schema."""


def rms(estimates: np.ndarray, truth: np.ndarray) -> float:
    """Root mean square of (estimates - truth); lengths must match."""
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape or est.size == 0:
        raise ValueError("series must have equal nonzero length")
    return float(np.sqrt(np.mean((est - tru) ** 2)))


@dataclass(frozen=True)
class Metrics:
    """Error summary of one estimator run against ground truth."""

    variant: str
    n_frames: int
    rms_beta: float
    max_abs_beta_err: float
    rms_beta_segments: tuple[float, float, float]  # early / mid / late thirds
    rms_phi: float | None = None        # bank angle [rad], truth permitting
    rms_d: float | None = None          # accelerometer bias [m/s^2]
    transition_jump: float | None = None  # max |d beta| across source switches


def _fmt(value: float) -> str:
    return repr(float(value))


def write_log(path: str | Path, samples: list[SensorSample],
              truth: GroundTruth | None = None) -> None:
    """Write a sensor log, with ground-truth columns when available."""
    lines = []
    header = list(SENSOR_COLUMNS) + (list(TRUTH_COLUMNS) if truth is not None else [])
    lines.append(",".join(header))
    for i, s in enumerate(samples):
        row = [_fmt(s.t), _fmt(s.a_x), _fmt(s.a_y_sen), _fmt(s.r),
               _fmt(s.v_x), _fmt(s.delta_f)]
        if truth is not None:
            row += [_fmt(truth.beta[i]), _fmt(truth.v_y[i]),
                    _fmt(truth.phi[i]), _fmt(truth.d[i])]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def ingest_log(path: str | Path, expected_dt: float | None = None
               ) -> tuple[list[SensorSample], dict[str, np.ndarray] | None]:
    """Parse and validate a sensor log.

    Returns (samples, truth) where truth is a column dict when the optional
    ground-truth columns are present, else None.  Raises SchemaError on a
    missing column, unparsable row, non-monotone timestamps, NaN values, or
    a sample cadence deviating more than 10% from expected_dt.
    """
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SchemaError(f"{path}: empty log")
    header = [h.strip() for h in lines[0].split(",")]
    for col in SENSOR_COLUMNS:
        if col not in header:
            raise SchemaError(f"{path}: missing required column '{col}'")
    has_truth = all(col in header for col in TRUTH_COLUMNS)
    index = {name: header.index(name) for name in header}

    samples: list[SensorSample] = []
    truth_cols: dict[str, list[float]] = {c: [] for c in TRUTH_COLUMNS}
    prev_t = -math.inf
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
        try:
            values = [float(p) for p in parts]
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: unparsable row") from exc
        if any(math.isnan(v) for v in values):
            raise SchemaError(f"{path}:{lineno}: NaN input")
        t = values[index["t"]]
        if t <= prev_t:
            raise SchemaError(f"{path}:{lineno}: non-monotone timestamp")
        if expected_dt is not None and prev_t > -math.inf:
            if abs((t - prev_t) - expected_dt) > 0.1 * expected_dt:
                raise SchemaError(
                    f"{path}:{lineno}: sample cadence {t - prev_t:.6g}s deviates "
                    f"more than 10% from configured dt={expected_dt:.6g}s")
        prev_t = t
        samples.append(SensorSample(
            t=t, a_x=values[index["ax"]], a_y_sen=values[index["ay_sen"]],
            r=values[index["r"]], v_x=values[index["vx"]],
            delta_f=values[index["delta_f"]]))
        if has_truth:
            for col in TRUTH_COLUMNS:
                truth_cols[col].append(values[index[col]])
    truth = ({c: np.array(v) for c, v in truth_cols.items()} if has_truth else None)
    return samples, truth


def _segment_rms(err: np.ndarray) -> tuple[float, float, float]:
    n = len(err)
    cuts = (0, n // 3, 2 * n // 3, n)
    return tuple(float(np.sqrt(np.mean(err[cuts[i]:cuts[i + 1]] ** 2)))
                 for i in range(3))


def evaluate_frames(frames: list[EstimateFrame],
                    truth: dict[str, np.ndarray] | GroundTruth,
                    variant: str = "") -> Metrics:
    """Compare an estimate stream against ground truth."""
    if isinstance(truth, GroundTruth):
        truth = {"beta_true": truth.beta, "vy_true": truth.v_y,
                 "phi_true": truth.phi, "d_true": truth.d}
    beta_est = np.array([f.beta for f in frames])
    beta_tru = truth["beta_true"]
    err = beta_est - beta_tru

    sources = [f.beta_source for f in frames]
    jumps = [abs(frames[i].beta - frames[i - 1].beta)
             for i in range(1, len(frames)) if sources[i] != sources[i - 1]]

    sin_phi_est = np.array([f.sin_phi for f in frames])
    phi_est = np.arcsin(np.clip(sin_phi_est, -1.0, 1.0))
    bias_est = np.array([f.bias for f in frames])
    return Metrics(
        variant=variant, n_frames=len(frames),
        rms_beta=rms(beta_est, beta_tru),
        max_abs_beta_err=float(np.max(np.abs(err))),
        rms_beta_segments=_segment_rms(err),
        rms_phi=rms(phi_est, truth["phi_true"]) if "phi_true" in truth else None,
        rms_d=rms(bias_est, truth["d_true"]) if "d_true" in truth else None,
        transition_jump=max(jumps) if jumps else None)


def run_estimate(samples: list[SensorSample], config: PipelineConfig,
                 params: VehicleParams,
                 truth: dict[str, np.ndarray] | GroundTruth | None = None,
                 true_stiffness: np.ndarray | None = None,
                 trace_path: str | Path | None = None
                 ) -> tuple[list[EstimateFrame], Metrics | None, StabilityMonitor | None]:
    """Run one variant over a stream; optionally score it and write the trace."""
    frames, monitor = run_pipeline(samples, config, params,
                                   true_stiffness=true_stiffness)
    metrics = (evaluate_frames(frames, truth, config.variant)
               if truth is not None else None)
    if trace_path is not None:
        write_trace(trace_path, frames, truth=truth, monitor=monitor)
    return frames, metrics, monitor


def compare_variants(samples: list[SensorSample], variants: list[str],
                     base_config: PipelineConfig, params: VehicleParams,
                     truth: dict[str, np.ndarray] | GroundTruth,
                     true_stiffness: np.ndarray | None = None
                     ) -> dict[str, Metrics]:
    """Score several variants over the same immutable stream."""
    results: dict[str, Metrics] = {}
    for variant in variants:
        config = replace(base_config, variant=variant)
        _, metrics, _ = run_estimate(samples, config, params, truth=truth,
                                     true_stiffness=true_stiffness)
        results[variant] = metrics
    return results


_TRACE_COLUMNS = ("t", "beta_hat", "v_y_dyn", "v_y_kin", "sin_phi_hat", "d_hat",
                  "c_f_hat", "c_r_hat", "gate_yaw", "gate_cond", "adapted",
                  "clamped", "low_speed", "beta_source")
_DIAG_COLUMNS = ("sigma1", "sigma2", "mu1", "mu2", "eta1", "eta2",
                 "eps1", "eps2", "popov", "feas_value", "cond_f")


def write_trace(path: str | Path, frames: list[EstimateFrame],
                truth: dict[str, np.ndarray] | GroundTruth | None = None,
                monitor: StabilityMonitor | None = None) -> None:
    """Write the per-frame estimate trace, plus truth/diagnostic columns.

    Diagnostic columns are only populated on frames where an adaptation step
    ran (two substeps each); other frames leave them blank.
    """
    if isinstance(truth, GroundTruth):
        truth = {"beta_true": truth.beta, "vy_true": truth.v_y,
                 "phi_true": truth.phi, "d_true": truth.d}
    header = list(_TRACE_COLUMNS)
    if truth is not None:
        header += list(TRUTH_COLUMNS)
    diag_by_frame: dict[int, list[str]] = {}
    if monitor is not None:
        header += list(_DIAG_COLUMNS)
        adapted_idx = [i for i, f in enumerate(frames) if f.adapted]
        rows = monitor.trace.rows
        for step_no, frame_idx in enumerate(adapted_idx, start=1):
            odd, even = rows[2 * step_no - 2], rows[2 * step_no - 1]
            feas = monitor.trace.feasibility[step_no - 1][1]
            diag_by_frame[frame_idx] = [
                _fmt(odd.sigma), _fmt(even.sigma), _fmt(odd.mu), _fmt(even.mu),
                _fmt(odd.eta), _fmt(even.eta), _fmt(odd.eps_post),
                _fmt(even.eps_post), _fmt(even.popov), _fmt(feas),
                _fmt(even.cond_f)]

    lines = [",".join(header)]
    for i, f in enumerate(frames):
        row = [_fmt(f.t), _fmt(f.beta), _fmt(f.v_y_dyn), _fmt(f.v_y_kin),
               _fmt(f.sin_phi), _fmt(f.bias), _fmt(f.c_f), _fmt(f.c_r),
               str(int(f.gate_yaw)), str(int(f.gate_cond)), str(int(f.adapted)),
               str(int(f.clamped)), str(int(f.low_speed)), f.beta_source]
        if truth is not None:
            row += [_fmt(truth[c][i]) for c in TRUTH_COLUMNS]
        if monitor is not None:
            row += diag_by_frame.get(i, [""] * len(_DIAG_COLUMNS))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def metrics_table(results: dict[str, Metrics]) -> str:
    """Human-readable comparison table."""
    header = f"{'variant':<20} {'rms_beta':>10} {'max_|err|':>10} {'rms_phi':>10} {'rms_d':>10} {'jump':>10}"
    lines = [header, "-" * len(header)]
    for name, m in results.items():
        opt = lambda v: f"{v:>10.5f}" if v is not None else f"{'-':>10}"
        lines.append(f"{name:<20} {m.rms_beta:>10.5f} {m.max_abs_beta_err:>10.5f} "
                     f"{opt(m.rms_phi)} {opt(m.rms_d)} {opt(m.transition_jump)}")
    return "\n".join(lines)


def metrics_to_dict(m: Metrics) -> dict:
    return asdict(m)


# --- configuration ---------------------------------------------------------

def default_config() -> dict:
    """Full default configuration as a plain dict (JSON-serializable)."""
    params = VehicleParams.default_sedan()
    pipe = PipelineConfig()
    ad = pipe.adaptation
    return {
        "vehicle": {"m": params.m, "i_z": params.i_z, "l_f": params.l_f,
                    "l_r": params.l_r, "c_f_nom": params.c_f_nom,
                    "c_r_nom": params.c_r_nom, "g": params.g},
        "variant": pipe.variant,
        "dt": pipe.dt,
        "v_x_min": pipe.v_x_min,
        "noise": {"w_dyn": np.diag(pipe.w_dyn).tolist(),
                  "v_dyn": np.diag(pipe.v_dyn).tolist(),
                  "w_kin3": np.diag(pipe.w_kin3).tolist(),
                  "w_kin2": np.diag(pipe.w_kin2).tolist(),
                  "v_kin": np.diag(pipe.v_kin).tolist()},
        "adaptation": {"forgetting": ad.forgetting,
                       "regularization": ad.regularization,
                       "yaw_rate_min": ad.yaw_rate_min,
                       "max_condition_ratio": ad.max_condition_ratio,
                       "r_dot_cutoff_hz": ad.r_dot_cutoff_hz,
                       "clamp_lo": ad.clamp_lo, "clamp_hi": ad.clamp_hi},
        "diagnostics": pipe.diagnostics,
    }


def config_to_dict(config: PipelineConfig, params: VehicleParams) -> dict:
    out = default_config()
    out["vehicle"] = {"m": params.m, "i_z": params.i_z, "l_f": params.l_f,
                      "l_r": params.l_r, "c_f_nom": params.c_f_nom,
                      "c_r_nom": params.c_r_nom, "g": params.g}
    out["variant"] = config.variant
    out["dt"] = config.dt
    out["v_x_min"] = config.v_x_min
    out["noise"] = {"w_dyn": np.diag(config.w_dyn).tolist(),
                    "v_dyn": np.diag(config.v_dyn).tolist(),
                    "w_kin3": np.diag(config.w_kin3).tolist(),
                    "w_kin2": np.diag(config.w_kin2).tolist(),
                    "v_kin": np.diag(config.v_kin).tolist()}
    ad = config.adaptation
    out["adaptation"] = {"forgetting": ad.forgetting,
                         "regularization": ad.regularization,
                         "yaw_rate_min": ad.yaw_rate_min,
                         "max_condition_ratio": ad.max_condition_ratio,
                         "r_dot_cutoff_hz": ad.r_dot_cutoff_hz,
                         "clamp_lo": ad.clamp_lo, "clamp_hi": ad.clamp_hi}
    out["diagnostics"] = config.diagnostics
    return out


def load_config(path: str | Path | None = None,
                overrides: dict | None = None) -> tuple[PipelineConfig, VehicleParams]:
    """Build (PipelineConfig, VehicleParams) from a JSON config document.

    Missing keys fall back to the defaults (which reproduce the standard
    parameter tables); ``overrides`` is merged last, one level deep.
    """
    doc = default_config()
    if path is not None:
        loaded = json.loads(Path(path).read_text())
        for key, value in loaded.items():
            if isinstance(value, dict) and key in doc:
                doc[key].update(value)
            else:
                doc[key] = value
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and key in doc:
            doc[key].update(value)
        else:
            doc[key] = value

    params = VehicleParams(**doc["vehicle"])
    noise = doc["noise"]
    ad = doc["adaptation"]
    config = PipelineConfig(
        variant=doc["variant"], dt=doc["dt"], v_x_min=doc["v_x_min"],
        w_dyn=np.diag(noise["w_dyn"]), v_dyn=np.diag(noise["v_dyn"]),
        w_kin3=np.diag(noise["w_kin3"]), w_kin2=np.diag(noise["w_kin2"]),
        v_kin=np.diag(noise["v_kin"]),
        adaptation=AdaptationConfig(
            forgetting=ad["forgetting"], regularization=ad["regularization"],
            yaw_rate_min=ad["yaw_rate_min"],
            max_condition_ratio=ad["max_condition_ratio"],
            r_dot_cutoff_hz=ad["r_dot_cutoff_hz"],
            v_x_min=doc["v_x_min"], clamp_lo=ad["clamp_lo"],
            clamp_hi=ad["clamp_hi"]),
        diagnostics=doc["diagnostics"])
    return config, params
