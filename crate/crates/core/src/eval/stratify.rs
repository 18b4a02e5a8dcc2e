use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, MetricsReport, Stratum};
use crate::dataset::TripRecord;
use crate::domain::DrivingMode;
use crate::error::{Error, Result};

/// Mean-velocity bands in km/h; the last band is closed.
pub const VELOCITY_BANDS: [(f64, f64); 4] = [(40.0, 60.0), (60.0, 80.0), (80.0, 100.0), (100.0, 120.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratification {
    Mode,
    VelocityBand,
}

impl FromStr for Stratification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mode" => Ok(Stratification::Mode),
            "velocity_band" | "velocity" => Ok(Stratification::VelocityBand),
            _ => Err(Error::invalid("strata", "expected `mode` or `velocity_band`")),
        }
    }
}

impl Stratification {
    pub fn labels(self) -> Vec<String> {
        match self {
            Stratification::Mode => DrivingMode::ALL.iter().map(|m| m.as_str().to_string()).collect(),
            Stratification::VelocityBand => VELOCITY_BANDS.iter().map(|&(lo, hi)| band_label(lo, hi)).collect(),
        }
    }

    /// Index into [`Stratification::labels`].
    pub fn assign(self, record: &TripRecord) -> Result<usize> {
        match self {
            Stratification::Mode => Ok(record.session.mode.index()),
            Stratification::VelocityBand => {
                let v = record.session.mean_velocity;
                let last = VELOCITY_BANDS.len() - 1;
                VELOCITY_BANDS
                    .iter()
                    .position(|&(lo, hi)| v >= lo && v < hi)
                    .or((v == VELOCITY_BANDS[last].1).then_some(last))
                    .ok_or(Error::Unstratified { trip_id: record.trip_id })
            }
        }
    }
}

fn band_label(lo: f64, hi: f64) -> String {
    alloc::format!("{lo:.0}-{hi:.0}")
}

/// Overall metrics plus one entry per stratum, in stratum order.
pub fn stratified_report(predictions: &[f64], records: &[&TripRecord], by: Stratification) -> Result<MetricsReport> {
    if predictions.len() != records.len() {
        return Err(Error::LengthMismatch { predictions: predictions.len(), truths: records.len() });
    }
    let labels = by.labels();
    let mut buckets: Vec<(Vec<f64>, Vec<f64>)> = labels.iter().map(|_| (Vec::new(), Vec::new())).collect();
    for (p, r) in predictions.iter().zip(records) {
        let bucket = &mut buckets[by.assign(r)?];
        bucket.0.push(*p);
        bucket.1.push(r.true_energy);
    }
    let truths: Vec<f64> = records.iter().map(|r| r.true_energy).collect();
    let mut report = compute_metrics(predictions, &truths)?;
    let strata = labels
        .into_iter()
        .zip(buckets)
        .map(|(label, (p, y))| {
            let metrics = if y.is_empty() { None } else { Some(compute_metrics(&p, &y)?) };
            Ok(Stratum { label, n: y.len(), metrics })
        })
        .collect::<Result<Vec<_>>>()?;
    report.strata = Some(strata);
    Ok(report)
}
