//! Density-matrix simulator for Raman-driven spin echoes and optically
//! locked coherence storage in inhomogeneously broadened ensembles.
//!
//! A [`scenarios::Scenario`] bundles a level system, a marked pulse
//! sequence and an ensemble spec. [`ensemble::sweep`] propagates every
//! detuning-class member (exactly, via the segment propagator, or with
//! RK4) and reduces to macroscopic observables; [`analysis`] locates the
//! mirror echoes, measures retrieval efficiency and fits storage decay.
//!
//! ```
//! use raman_echo::{analysis, ensemble, model, scenarios};
//!
//! let scenario = scenarios::triple_bit_storage(&scenarios::ScenarioParams::default()).unwrap();
//! let resolved = model::resolve(&model::resolve_durations(&scenario.sequence).unwrap()).unwrap();
//! let (grid, _) = ensemble::build_grid(&scenario.ensemble);
//! # let grid = ensemble::DetuningGrid::single(0.0); // keep the doctest fast
//! let trace = ensemble::sweep(&scenario.system, &resolved, &grid, &Default::default()).unwrap();
//! let report = analysis::echo_report(
//!     &trace.times,
//!     &trace.abs_s12(),
//!     &resolved,
//!     &analysis::AnalysisConfig::default(),
//! )
//! .unwrap();
//! # let _ = report;
//! ```

pub mod analysis;
pub mod cli;
pub mod ensemble;
pub mod linalg;
pub mod liouvillian;
pub mod model;
pub mod output;
pub mod propagate;
pub mod scenarios;
pub mod seqdsl;
pub mod units;

pub use analysis::{EchoReport, EfficiencyMetric, FitResult, PhaseReport};
pub use ensemble::{build_grid, sweep, DetuningGrid, EnsembleTrace, SweepOptions};
pub use model::{EnsembleSpec, FieldId, LevelSystem, PulseSequence};
pub use propagate::{run_member, Integrator, PropagateOptions, TimeTrace};
pub use scenarios::{Scenario, ScenarioParams, Variant};
