use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Error summary over a set of trip energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// kWh
    pub mae: f64,
    /// Percent of the true energy.
    pub mape: f64,
    /// kWh
    pub rmse: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strata: Option<Vec<Stratum>>,
}

/// One labelled slice of a report; `metrics` is absent when `n == 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    pub n: usize,
    pub metrics: Option<MetricsReport>,
}

pub fn compute_metrics(predictions: &[f64], truths: &[f64]) -> Result<MetricsReport> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch { predictions: predictions.len(), truths: truths.len() });
    }
    if truths.is_empty() {
        return Err(Error::Empty);
    }
    if let Some((index, &value)) = truths.iter().enumerate().find(|(_, &y)| !(y > 0.0)) {
        return Err(Error::MapeUndefined { index, value });
    }
    let n = truths.len() as f64;
    let (mut abs, mut pct, mut sq) = (0.0, 0.0, 0.0);
    for (p, y) in predictions.iter().zip(truths) {
        let e = p - y;
        abs += e.abs();
        pct += e.abs() / y;
        sq += e * e;
    }
    Ok(MetricsReport {
        mae: abs / n,
        mape: 100.0 * pct / n,
        rmse: libm::sqrt(sq / n),
        n: truths.len(),
        strata: None,
    })
}

/// Signed percentage error `100·(ŷ − y)/y`.
pub fn percent_error(prediction: f64, truth: f64) -> f64 {
    100.0 * (prediction - truth) / truth
}
