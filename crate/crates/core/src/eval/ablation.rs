use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::baselines::BaselinePredictor;
use super::evaluate_on;
use super::metrics::MetricsReport;
use crate::dataset::{Split, TripRecord};
use crate::error::{Error, Result};
use crate::nn::{train, FeatureGroup, FeatureSet, TrainConfig};

pub const FULL_MODEL: &str = "full_model";
pub const PHYSICS_ONLY: &str = "physics_only";

/// One row to evaluate: `features` is `None` for the physics-only row.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationCase {
    pub label: String,
    pub features: Option<FeatureSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub features: Vec<String>,
    pub seed: u64,
    /// Test-split metrics, absent if the row failed.
    pub metrics: Option<MetricsReport>,
    pub error: Option<String>,
}

impl AblationRow {
    pub fn mape(&self) -> Option<f64> {
        self.metrics.as_ref().map(|m| m.mape)
    }
}

/// Resolves group names into cases: the full model, one per removed group,
/// and physics only. Unknown or absent groups fail before any training.
pub fn ablation_plan(base: &FeatureSet, groups: &[&str]) -> Result<Vec<AblationCase>> {
    let mut cases = alloc::vec![AblationCase { label: FULL_MODEL.to_string(), features: Some(base.clone()) }];
    for name in groups {
        let group: FeatureGroup = name.parse()?;
        cases.push(AblationCase { label: format!("without_{}", group.name()), features: Some(base.without(group)?) });
    }
    cases.push(AblationCase { label: PHYSICS_ONLY.to_string(), features: None });
    Ok(cases)
}

/// Trains (unless physics-only) and scores one case on the test split.
pub fn ablation_row(corpus: &[TripRecord], config: &TrainConfig, case: &AblationCase) -> AblationRow {
    let outcome = match &case.features {
        None => evaluate_on(&BaselinePredictor::PhysicsOnly, corpus, Split::Test),
        Some(features) => train(corpus, features, config)
            .and_then(|(model, _)| evaluate_on(&BaselinePredictor::Hybrid { model }, corpus, Split::Test)),
    };
    let (metrics, error) = match outcome {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    AblationRow {
        label: case.label.clone(),
        features: case.features.as_ref().map(|f| f.names().into_iter().map(String::from).collect()).unwrap_or_default(),
        seed: config.seed,
        metrics,
        error,
    }
}

/// Every row is retrained from scratch with the same seed.
pub fn ablation_study(corpus: &[TripRecord], config: &TrainConfig, base: &FeatureSet, groups: &[&str]) -> Result<Vec<AblationRow>> {
    if !corpus.iter().any(|r| r.split == Split::Test) {
        return Err(Error::EmptySplit(Split::Test));
    }
    Ok(ablation_plan(base, groups)?.iter().map(|case| ablation_row(corpus, config, case)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_has_full_and_physics_rows() {
        let plan = ablation_plan(&FeatureSet::all(), &["physics_prediction", "velocity"]).unwrap();
        let labels: Vec<_> = plan.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["full_model", "without_physics_prediction", "without_velocity", "physics_only"]);
        assert_eq!(plan[1].features.as_ref().unwrap().len(), 9);
    }

    #[test]
    fn bad_groups_are_named() {
        assert_eq!(ablation_plan(&FeatureSet::all(), &["weather"]), Err(Error::UnknownFeatureGroup("weather".into())));
        let base = FeatureSet::all().without(FeatureGroup::Velocity).unwrap();
        assert_eq!(ablation_plan(&base, &["velocity"]), Err(Error::FeatureGroupAbsent("velocity")));
    }
}
