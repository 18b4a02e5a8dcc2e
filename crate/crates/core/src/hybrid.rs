//! Physics baseline plus learned residual.
//!
//! Without a model the predictor falls back to the physics estimate
//! unchanged. A residual that would push the energy below zero is clamped
//! and flagged.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::DischargeSession;
use crate::error::Result;
use crate::nn::{RawFeatures, ResidualNet};
use crate::physics::Simulator;
use crate::rng::{derive_seed, SeededRng};

/// Millisecond wall clock; supplied by the caller since `core` has none.
pub trait Clock {
    fn now_ms(&self) -> f64;
}

/// Reports zero for every reading.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ms(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridPrediction {
    /// kWh
    pub physics_energy: f64,
    /// kWh
    pub residual: f64,
    /// kWh
    pub hybrid_energy: f64,
    pub final_soc: f64,
    pub used_fallback: bool,
    /// The raw residual would have made the energy negative.
    pub clamped: bool,
    pub physics_latency_ms: f64,
    pub ml_latency_ms: f64,
    pub total_latency_ms: f64,
}

impl HybridPrediction {
    /// Combines a physics estimate with an optional residual.
    pub fn combine(physics_energy: f64, residual: Option<f64>, initial_soc: f64, capacity: f64) -> Self {
        let used_fallback = residual.is_none();
        let mut residual = residual.unwrap_or(0.0);
        let mut clamped = false;
        if physics_energy + residual < 0.0 {
            residual = -physics_energy;
            clamped = true;
        }
        let hybrid_energy = physics_energy + residual;
        HybridPrediction {
            physics_energy,
            residual,
            hybrid_energy,
            final_soc: (initial_soc - hybrid_energy / capacity).max(0.0),
            used_fallback,
            clamped,
            physics_latency_ms: 0.0,
            ml_latency_ms: 0.0,
            total_latency_ms: 0.0,
        }
    }
}

/// Runs the physics model for `session` with a trajectory drawn from `seed`,
/// then adds the model's residual if a model is given.
pub fn predict<C: Clock + ?Sized>(
    simulator: &Simulator,
    session: &DischargeSession,
    model: Option<&ResidualNet>,
    seed: u64,
    clock: &C,
) -> Result<HybridPrediction> {
    if let Some(model) = model {
        model.validate()?;
    }
    let start = clock.now_ms();
    let (trajectory, result) = simulator.run(session, &mut SeededRng::new(seed))?;
    let physics_done = clock.now_ms();

    let residual = match model {
        Some(model) => {
            let raw = RawFeatures::new(session, trajectory.max_velocity_kmh(), result.total_energy);
            Some(model.predict(&raw)?)
        }
        None => None,
    };
    let ml_done = clock.now_ms();

    let mut prediction =
        HybridPrediction::combine(result.total_energy, residual, session.initial_soc, simulator.vehicle.battery_capacity);
    prediction.physics_latency_ms = physics_done - start;
    prediction.ml_latency_ms = ml_done - physics_done;
    prediction.total_latency_ms = ml_done - start;
    Ok(prediction)
}

/// Seed used for item `index` of a batch.
pub fn batch_item_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, "trip", index as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchPrediction {
    /// One outcome per session, in input order.
    pub items: Vec<Result<HybridPrediction>>,
    pub total_latency_ms: f64,
}

impl BatchPrediction {
    pub fn mean_latency_ms(&self) -> f64 {
        if self.items.is_empty() {
            0.0
        } else {
            self.total_latency_ms / self.items.len() as f64
        }
    }
}

/// Predicts every session; failures are kept per item and do not stop the
/// batch.
pub fn predict_batch<C: Clock + ?Sized>(
    simulator: &Simulator,
    sessions: &[DischargeSession],
    model: Option<&ResidualNet>,
    master_seed: u64,
    clock: &C,
) -> BatchPrediction {
    let start = clock.now_ms();
    let items = sessions
        .iter()
        .enumerate()
        .map(|(i, s)| predict(simulator, s, model, batch_item_seed(master_seed, i), clock))
        .collect();
    BatchPrediction { items, total_latency_ms: clock.now_ms() - start }
}
