//! Nonparametric fiducial inference for interval-censored survival data.
//!
//! The pipeline for one dataset:
//!
//! 1. [`data`] validates observations `(l, r]` and builds a [`data::TimeGrid`].
//! 2. [`constraint`] indexes which observations must carry ordered uniforms.
//! 3. [`gibbs`] samples those constrained uniforms.
//! 4. [`curves`] turns each draw into lower/upper bound curves on the grid.
//! 5. [`interp`] picks the smoothest curve between the bounds.
//! 6. [`inference`] aggregates draws into point estimates and intervals.
//!
//! [`npmle`] provides the Turnbull estimate used as a baseline and
//! [`simulation`] the Monte Carlo study harness.
//!
//! Numerical modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod constraint;
pub mod curves;
pub mod data;
pub mod gibbs;
pub mod inference;
pub mod interp;
pub mod npmle;
pub mod scalar;
pub mod simulation;

pub use scalar::Scalar;

pub use constraint::{build_index, ConstraintError, PrecedenceIndex};
pub use data::{default_grid, parse_dataset, write_dataset, CensoringKind, DataError};
pub use gibbs::{GibbsConfig, GibbsError};
pub use inference::{CiMethod, InferenceError};
pub use interp::{solve_qp, QpError};
pub use npmle::{fit_em, turnbull_intervals, EmOptions, EvalRule};
pub use simulation::{ExperimentConfig, ExperimentResult, Scenario, SimulationError};

pub type Observation = data::Observation<f64>;
pub type Dataset = data::Dataset<f64>;
pub type TimeGrid = data::TimeGrid<f64>;
pub type UVector = constraint::UVector<f64>;
pub type StepFunction = curves::StepFunction<f64>;
pub type FiducialSample = curves::FiducialSample<f64>;
pub type QpProblem = interp::QpProblem<f64>;
pub type CurveEstimate = inference::CurveEstimate<f64>;
pub type PointInterval = inference::PointInterval<f64>;
pub type NpmleFit = npmle::NpmleFit<f64>;
pub type TurnbullIntervals = npmle::TurnbullIntervals<f64>;

pub type Dataset32 = data::Dataset<f32>;
pub type TimeGrid32 = data::TimeGrid<f32>;
pub type FiducialSample32 = curves::FiducialSample<f32>;
