//! Row data behind the SoC-depletion, error-distribution and
//! rate-versus-distance plots.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::baselines::BaselinePredictor;
use super::metrics::percent_error;
use crate::dataset::{Split, TripRecord};
use crate::domain::{DischargeSession, DrivingMode};
use crate::error::Result;
use crate::hybrid::{predict, NoClock};
use crate::nn::ResidualNet;
use crate::physics::Simulator;
use crate::rng::derive_seed;

pub const ROLLING_WINDOW: usize = 25;

/// Trailing mean over at most `window` values ending at each index.
pub fn rolling_mean(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..values.len())
        .map(|i| {
            let slice = &values[(i + 1).saturating_sub(window)..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocRowKind {
    Curve,
    Observed,
}

/// Either a model curve point or an observed trip, both expressed as SoC
/// remaining after `distance_km` from the curve's starting SoC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocDepletionRow {
    pub kind: SocRowKind,
    pub distance_km: f64,
    pub physics_soc: Option<f64>,
    pub constant_soc: Option<f64>,
    pub linear_soc: Option<f64>,
    pub hybrid_soc: Option<f64>,
    pub observed_soc: Option<f64>,
}

/// Scenario for the depletion curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocCurve {
    pub initial_soc: f64,
    pub mean_velocity: f64,
    pub mode: DrivingMode,
    pub ambient_temp: f64,
    pub distances_km: Vec<f64>,
    pub seed: u64,
}

impl Default for SocCurve {
    fn default() -> Self {
        SocCurve {
            initial_soc: 0.8,
            mean_velocity: 90.0,
            mode: DrivingMode::Normal,
            ambient_temp: 20.0,
            distances_km: (1..=40).map(|i| 5.0 * i as f64).collect(),
            seed: 0,
        }
    }
}

pub fn soc_depletion_rows(
    simulator: &Simulator,
    curve: &SocCurve,
    corpus: &[TripRecord],
    constant: &BaselinePredictor,
    linear: Option<&BaselinePredictor>,
    model: Option<&ResidualNet>,
) -> Result<Vec<SocDepletionRow>> {
    let capacity = simulator.vehicle.battery_capacity;
    let soc = |energy: f64| (curve.initial_soc - energy / capacity).max(0.0);
    let mut rows = Vec::with_capacity(curve.distances_km.len() + corpus.len());
    for (i, &d) in curve.distances_km.iter().enumerate() {
        let session = DischargeSession::new(curve.initial_soc, d, curve.mean_velocity, curve.mode)
            .with_ambient_temp(curve.ambient_temp);
        let seed = derive_seed(curve.seed, "trip", i as u64);
        let physics = predict(simulator, &session, None, seed, &NoClock)?;
        let hybrid = model.map(|m| predict(simulator, &session, Some(m), seed, &NoClock)).transpose()?;
        rows.push(SocDepletionRow {
            kind: SocRowKind::Curve,
            distance_km: d,
            physics_soc: Some(physics.final_soc),
            constant_soc: Some(soc(constant.predict_session(&session, curve.mean_velocity, physics.physics_energy)?)),
            linear_soc: linear.map(|l| l.predict_session(&session, curve.mean_velocity, physics.physics_energy).map(soc)).transpose()?,
            hybrid_soc: hybrid.map(|h| h.final_soc),
            observed_soc: None,
        });
    }
    for r in corpus.iter().filter(|r| r.session.mode == curve.mode) {
        rows.push(SocDepletionRow {
            kind: SocRowKind::Observed,
            distance_km: r.session.distance,
            physics_soc: None,
            constant_soc: None,
            linear_soc: None,
            hybrid_soc: None,
            observed_soc: Some(soc(r.true_energy)),
        });
    }
    Ok(rows)
}

/// Signed percent errors for one trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub trip_id: usize,
    pub mode: DrivingMode,
    pub split: Split,
    pub constant_pct: f64,
    pub linear_pct: Option<f64>,
    pub physics_pct: f64,
    pub hybrid_pct: Option<f64>,
}

pub fn error_rows(
    corpus: &[TripRecord],
    constant: &BaselinePredictor,
    linear: Option<&BaselinePredictor>,
    hybrid: Option<&BaselinePredictor>,
) -> Result<Vec<ErrorRow>> {
    corpus
        .iter()
        .map(|r| {
            let pct = |p: &BaselinePredictor| p.predict(r).map(|e| percent_error(e, r.true_energy));
            Ok(ErrorRow {
                trip_id: r.trip_id,
                mode: r.session.mode,
                split: r.split,
                constant_pct: pct(constant)?,
                linear_pct: linear.map(pct).transpose()?,
                physics_pct: percent_error(r.physics_energy, r.true_energy),
                hybrid_pct: hybrid.map(pct).transpose()?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub trip_id: usize,
    pub mode: DrivingMode,
    pub distance_km: f64,
    /// True kWh/km.
    pub rate: f64,
    pub rolling_mean: f64,
}

/// Trips sorted by distance within each mode, with a trailing mean of the
/// rate per mode.
pub fn rate_rows(corpus: &[TripRecord], window: usize) -> Vec<RateRow> {
    let mut out = Vec::with_capacity(corpus.len());
    for mode in DrivingMode::ALL {
        let mut trips: Vec<&TripRecord> = corpus.iter().filter(|r| r.session.mode == mode).collect();
        trips.sort_by(|a, b| a.session.distance.total_cmp(&b.session.distance).then(a.trip_id.cmp(&b.trip_id)));
        let rates: Vec<f64> = trips.iter().map(|r| r.true_rate()).collect();
        let smooth = rolling_mean(&rates, window);
        out.extend(trips.iter().zip(rates.iter().zip(smooth)).map(|(r, (&rate, rolling_mean))| RateRow {
            trip_id: r.trip_id,
            mode,
            distance_km: r.session.distance,
            rate,
            rolling_mean,
        }));
    }
    out
}
