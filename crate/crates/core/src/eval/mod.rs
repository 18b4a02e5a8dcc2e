//! Scoring of trip-energy predictors on corpus splits.

pub mod ablation;
pub mod baselines;
pub mod figures;
pub mod metrics;
pub mod stats;
pub mod stratify;

pub use ablation::{ablation_plan, ablation_row, ablation_study, AblationCase, AblationRow};
pub use baselines::{fit_linear_baseline, solve_ols, BaselinePredictor, DEFAULT_CONSTANT_RATE, OLS_TERM_NAMES};
pub use figures::{error_rows, rate_rows, rolling_mean, soc_depletion_rows, ErrorRow, RateRow, SocCurve, SocDepletionRow};
pub use metrics::{compute_metrics, percent_error, MetricsReport, Stratum};
pub use stats::{consumption_stats, ModeConsumption};
pub use stratify::{stratified_report, Stratification, VELOCITY_BANDS};

use alloc::vec::Vec;

use crate::dataset::{Split, TripRecord};
use crate::error::{Error, Result};

/// Metrics of `predictor` against true energies on one split.
pub fn evaluate_on(predictor: &BaselinePredictor, corpus: &[TripRecord], split: Split) -> Result<MetricsReport> {
    let records: Vec<&TripRecord> = corpus.iter().filter(|r| r.split == split).collect();
    if records.is_empty() {
        return Err(Error::EmptySplit(split));
    }
    let predictions = predictor.predict_all(records.iter().copied())?;
    let truths: Vec<f64> = records.iter().map(|r| r.true_energy).collect();
    compute_metrics(&predictions, &truths)
}
