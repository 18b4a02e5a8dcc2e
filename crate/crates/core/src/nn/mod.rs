//! Feed-forward residual learner.
//!
//! The network maps standardized trip features to the energy residual
//! `true − physics` in kWh. Default shape is 11 → 64 → 32 → 16 → 1 with
//! ReLU, dropout 0.2 after the second and third hidden layers, and a
//! zero-initialized output layer so an untrained model adds nothing to the
//! physics baseline.

pub mod adam;
pub mod features;
pub mod gradcheck;
pub mod mlp;
pub mod train;

use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamConfig};
pub use features::{FeatureGroup, FeatureSet, RawFeatures, StandardizationStats, FEATURE_NAMES, N_FEATURES};
pub use gradcheck::gradient_check;
pub use mlp::{Activation, Example, Mlp};
pub use train::{train, train_mlp, EpochLog, TrainConfig, TrainingLog};

use crate::error::{Error, Result};

/// A trained residual model: feature selection, scaling, and network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualNet {
    pub features: FeatureSet,
    pub stats: StandardizationStats,
    pub mlp: Mlp,
}

impl ResidualNet {
    /// Untrained model that predicts zero for every trip.
    pub fn zero(features: FeatureSet, hidden: &[usize]) -> Result<Self> {
        let mut dims = alloc::vec![features.len()];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mlp = Mlp::zeros(&dims, Activation::Relu)?;
        let n = features.len();
        let stats = StandardizationStats {
            columns: features.columns.clone(),
            mean: alloc::vec![0.0; n],
            std: alloc::vec![1.0; n],
        };
        Ok(ResidualNet { features, stats, mlp })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.features.len();
        if self.stats.columns != self.features.columns || self.stats.mean.len() != n || self.stats.std.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.stats.columns.len() });
        }
        if self.mlp.input_dim() != n {
            return Err(Error::DimensionMismatch { expected: self.mlp.input_dim(), got: n });
        }
        if self.features.columns.iter().any(|&c| c >= N_FEATURES) {
            return Err(Error::invalid("features", "column index out of range"));
        }
        Ok(())
    }

    pub fn featurize(&self, raw: &RawFeatures) -> alloc::vec::Vec<f64> {
        self.stats.apply(raw)
    }

    /// Predicted residual in kWh.
    pub fn predict(&self, raw: &RawFeatures) -> Result<f64> {
        self.validate()?;
        let x = self.featurize(raw);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features", "non-finite feature value"));
        }
        Ok(self.mlp.forward(&x))
    }
}
