//! Wideband link simulator for intelligent-reflecting-surface (IRS) aided
//! THz channels: geometry, per-element channels, transmit spectra, the
//! quadratic coupling of the received power, IRS phase solvers and rate
//! bounds, plus a seeded experiment harness.

pub mod antenna;
pub mod channel;
pub mod coupling;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod rate_bounds;
pub mod rng;
pub mod solvers;
pub mod spectrum;
pub mod units;

pub use channel::{ChannelModel, ChannelSlice, ChannelSource, IrsResponse, ShadowingModel, SmallArrayChannel};
pub use coupling::{assemble_coupling, Coupling, PhaseConfig};
pub use error::{Error, ErrorClass, Result};
pub use experiments::{ExperimentConfig, ResultRow, ResultTable, RunOptions};
pub use geometry::{PlanarLayout, Scenario, ScenarioSpec};
pub use rate_bounds::{achievable_rate, upper_bound, BoundReport, RateReport};
pub use solvers::{NbDelays, SolverReport};
pub use spectrum::{FrequencyGrid, PsdBundle, SpectrumSpec};
