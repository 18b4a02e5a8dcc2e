use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::dataset::TripRecord;
use crate::domain::{DischargeSession, DrivingMode};
use crate::error::{Error, Result};
use crate::hybrid::HybridPrediction;
use crate::nn::{RawFeatures, ResidualNet};

pub const DEFAULT_CONSTANT_RATE: f64 = 0.185;

pub const OLS_TERMS: usize = 6;

/// Coefficient order of the linear baseline. Eco is the reference mode.
pub const OLS_TERM_NAMES: [&str; OLS_TERMS] =
    ["intercept", "distance_km", "mean_velocity_kmh", "mode_normal", "mode_aggressive", "temp_c"];

const RIDGE_JITTER: f64 = 1e-8;
const PIVOT_TOLERANCE: f64 = 1e-12;

/// A trip-energy predictor compared against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselinePredictor {
    /// Fixed kWh/km.
    ConstantRate { rate: f64 },
    /// OLS on trip descriptors, coefficients in [`OLS_TERM_NAMES`] order.
    Linear { coefficients: [f64; OLS_TERMS] },
    PhysicsOnly,
    Hybrid { model: ResidualNet },
}

impl Default for BaselinePredictor {
    fn default() -> Self {
        BaselinePredictor::ConstantRate { rate: DEFAULT_CONSTANT_RATE }
    }
}

impl BaselinePredictor {
    pub fn name(&self) -> &'static str {
        match self {
            BaselinePredictor::ConstantRate { .. } => "constant_rate",
            BaselinePredictor::Linear { .. } => "linear",
            BaselinePredictor::PhysicsOnly => "physics",
            BaselinePredictor::Hybrid { .. } => "hybrid",
        }
    }

    /// Predicted trip energy in kWh.
    pub fn predict(&self, record: &TripRecord) -> Result<f64> {
        self.predict_session(&record.session, record.max_velocity, record.physics_energy)
    }

    /// Same as [`BaselinePredictor::predict`] from the trip's parts.
    pub fn predict_session(&self, session: &DischargeSession, max_velocity_kmh: f64, physics_energy: f64) -> Result<f64> {
        match self {
            BaselinePredictor::ConstantRate { rate } => Ok(rate * session.distance),
            BaselinePredictor::Linear { coefficients } => Ok(linear_energy(coefficients, session)),
            BaselinePredictor::PhysicsOnly => Ok(physics_energy),
            BaselinePredictor::Hybrid { model } => {
                let residual = model.predict(&RawFeatures::new(session, max_velocity_kmh, physics_energy))?;
                Ok(HybridPrediction::combine(physics_energy, Some(residual), session.initial_soc, 1.0).hybrid_energy)
            }
        }
    }

    pub fn predict_all<'a>(&self, records: impl IntoIterator<Item = &'a TripRecord>) -> Result<alloc::vec::Vec<f64>> {
        records.into_iter().map(|r| self.predict(r)).collect()
    }
}

pub fn design_row(session: &DischargeSession) -> [f64; OLS_TERMS] {
    [
        1.0,
        session.distance,
        session.mean_velocity,
        (session.mode == DrivingMode::Normal) as u8 as f64,
        (session.mode == DrivingMode::Aggressive) as u8 as f64,
        session.ambient_temp,
    ]
}

pub fn linear_energy(coefficients: &[f64; OLS_TERMS], session: &DischargeSession) -> f64 {
    design_row(session).iter().zip(coefficients).map(|(x, b)| x * b).sum()
}

/// Least squares through the jittered normal equations.
pub fn solve_ols<'a>(rows: impl IntoIterator<Item = (&'a [f64; OLS_TERMS], f64)>) -> Result<[f64; OLS_TERMS]> {
    let mut gram = SMatrix::<f64, OLS_TERMS, OLS_TERMS>::zeros();
    let mut rhs = SVector::<f64, OLS_TERMS>::zeros();
    let mut n = 0usize;
    for (x, y) in rows {
        let x = SVector::<f64, OLS_TERMS>::from_row_slice(x);
        gram += x * x.transpose();
        rhs += x * y;
        n += 1;
    }
    if n < OLS_TERMS + 1 {
        return Err(Error::invalid("records", "linear baseline needs at least 7 training trips"));
    }
    let scale = gram.diagonal().max();
    for i in 0..OLS_TERMS {
        gram[(i, i)] += RIDGE_JITTER;
    }
    let chol = gram.cholesky().ok_or(Error::RankDeficient)?;
    let pivots = chol.l_dirty().diagonal();
    let smallest = pivots.iter().map(|p| p * p).fold(f64::INFINITY, f64::min);
    if !(smallest > (PIVOT_TOLERANCE * scale).max(10.0 * RIDGE_JITTER)) {
        return Err(Error::RankDeficient);
    }
    let beta = chol.solve(&rhs);
    let mut out = [0.0; OLS_TERMS];
    out.copy_from_slice(beta.as_slice());
    Ok(out)
}

/// Fits the linear baseline to true trip energies.
pub fn fit_linear_baseline<'a>(records: impl IntoIterator<Item = &'a TripRecord>) -> Result<BaselinePredictor> {
    let rows: alloc::vec::Vec<([f64; OLS_TERMS], f64)> =
        records.into_iter().map(|r| (design_row(&r.session), r.true_energy)).collect();
    let coefficients = solve_ols(rows.iter().map(|(x, y)| (x, *y)))?;
    Ok(BaselinePredictor::Linear { coefficients })
}
