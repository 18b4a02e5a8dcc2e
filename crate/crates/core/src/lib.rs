//! Physics baseline plus learned residual correction for EV trip energy and
//! state-of-charge prediction.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs and an explicitly passed [`SeededRng`]; file
//! formats, threads and wall-clock timing live in the `discharge` crate.
//!
//! Pipeline, bottom to top:
//!
//! - [`domain`]: vehicle parameters, driving profiles, trip descriptors.
//! - [`trajectory`]: discretizes a trip into velocity/acceleration/phase steps.
//! - [`physics`]: force-balance power model and energy/SoC integration.
//! - [`dataset`]: synthetic trip corpus with structured multiplicative noise.
//! - [`nn`]: the feed-forward residual learner, Adam, gradient checking.
//! - [`hybrid`]: physics + residual predictor with physics fallback.
//! - [`eval`]: metrics, baselines, stratified reports, ablations, figure data.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod domain;
pub mod error;
pub mod eval;
pub mod hybrid;
pub mod nn;
pub mod physics;
pub mod rng;
pub mod trajectory;

pub use dataset::{NoiseComponents, NoiseConfig, Split, TripRecord};
pub use domain::{DischargeSession, DrivingMode, DrivingProfile, ProfileSet, VehicleParams};
pub use error::{Error, Result};
pub use hybrid::{Clock, HybridPrediction, NoClock};
pub use nn::{FeatureGroup, FeatureSet, ResidualNet, TrainConfig, TrainingLog};
pub use physics::{SimOptions, SimulationResult, Simulator};
pub use rng::SeededRng;
pub use trajectory::{Phase, PhaseLayout, SynthesisConfig, TrajectoryStep, TripTrajectory};
