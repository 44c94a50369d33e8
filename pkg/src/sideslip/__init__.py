"""Adaptive vehicle sideslip, road-bank and sensor-bias estimation.

A dynamics-model Kalman observer carries the sideslip estimate; a kinematics
observer supplies the lateral-velocity information from which the front/rear
tire cornering stiffnesses are identified online by a regularized forgetting
least squares.  A scenario simulator and a run harness reproduce the standard
evaluation maneuvers at desk scale.
"""
from .adaptation import (AdaptationConfig, AdaptationState, RegressionSample,
                         batch_rwls, build_regression, clamp_stiffness,
                         conditioning_gate, recursive_rwls_step,
                         yaw_accel_estimate)
from .harness import (Metrics, SchemaError, compare_variants, default_config,
                      evaluate_frames, ingest_log, load_config, metrics_table,
                      rms, run_estimate, write_log, write_trace)
from .kalman import NoiseConfig, ObserverState, kf_update, symmetrize
from .observers import (DynamicsObserver, KinematicsObserver, LowSpeedError,
                        reset_kinematics_from_dynamics)
from .pipeline import (VARIANTS, EstimateFrame, EstimatorPipeline,
                       PipelineConfig, run_pipeline)
from .simulator import (SCENARIO_NAMES, GroundTruth, NoiseLevels, PlantState,
                        ScenarioRun, ScenarioSpec, TireModel,
                        generate_scenario, make_scenario, plant_step,
                        sample_sensors)
from .stability import (StabilityMonitor, StabilityTrace, SvdSplit,
                        dissipation_feasibility, dissipation_rate,
                        eta_condition, gain_split_update, popov_sum,
                        suggest_regularization, svd_split, theta_error_bound)
from .vehicle import (G_STANDARD, SensorSample, StateSpace, VehicleParams,
                      corrected_lateral_accel, dynamics_state_space,
                      forward_euler, kinematics_state_space,
                      linear_tire_forces, planar_kinematics_state_space)

__version__ = "0.1.0"
