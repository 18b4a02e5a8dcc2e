//! Mini-batch training with Adam, step-decayed learning rate, L2 on
//! weights, and early stopping on validation MSE.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::features::{FeatureSet, RawFeatures, StandardizationStats};
use super::mlp::{mse, Activation, Example, Mlp};
use super::ResidualNet;
use crate::dataset::{Split, TripRecord};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplier applied every `decay_every` epochs.
    pub decay_rate: f64,
    pub decay_every: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Non-improving epochs tolerated before stopping.
    pub patience: usize,
    pub weight_decay: f64,
    pub adam: AdamConfig,
    pub hidden: Vec<usize>,
    /// Drop probability on every hidden layer after the first.
    pub dropout: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            decay_rate: 0.95,
            decay_every: 50,
            batch_size: 32,
            max_epochs: 200,
            patience: 20,
            weight_decay: 1e-4,
            adam: AdamConfig::default(),
            hidden: alloc::vec![64, 32, 16],
            dropout: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.decay_rate > 0.0) || self.decay_every == 0 {
            return Err(Error::invalid("learning_rate", "learning rate, decay rate and decay period must be positive"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::invalid("batch_size", "batch size and epoch budget must be positive"));
        }
        if self.patience >= self.max_epochs {
            return Err(Error::invalid("patience", "must be smaller than max_epochs"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::invalid("weight_decay", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid("dropout", "must lie in [0, 1)"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::invalid("hidden", "hidden layers must be non-empty"));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * libm::pow(self.decay_rate, (epoch / self.decay_every) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean mini-batch objective (MSE + L2) with dropout active.
    pub train_loss: f64,
    /// Validation MSE, inference mode.
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

impl TrainingLog {
    pub fn epochs_run(&self) -> usize {
        self.epochs.len()
    }
}

/// Trains `mlp` in place of a copy and returns the parameters with the
/// lowest validation loss.
pub fn train_mlp(mut mlp: Mlp, train: &[Example], val: &[Example], config: &TrainConfig) -> Result<(Mlp, TrainingLog)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptySplit(Split::Train));
    }
    if val.is_empty() {
        return Err(Error::EmptySplit(Split::Val));
    }
    let mut shuffle_rng = SeededRng::derived(config.seed, "shuffle", 0);
    let mut dropout_rng = SeededRng::derived(config.seed, "dropout", 0);
    let mut adam = Adam::new(mlp.param_count(), config.adam);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut batch: Vec<Example> = Vec::with_capacity(config.batch_size);

    let mut log = TrainingLog { best_val_loss: f64::INFINITY, ..Default::default() };
    let mut best_params = mlp.params.clone();
    let mut waited = 0;

    for epoch in 0..config.max_epochs {
        let lr = config.learning_rate_at(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut weighted_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i].clone()));
            let (loss, grads) = mlp.loss_and_gradient(&batch, config.weight_decay, Some(&mut dropout_rng));
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            weighted_loss += loss * chunk.len() as f64;
            adam.step(&mut mlp.params, &grads, lr);
        }
        let val_loss = mse(&mlp, val);
        if !val_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        log.epochs.push(EpochLog { epoch, train_loss: weighted_loss / train.len() as f64, val_loss, lr });

        if val_loss < log.best_val_loss {
            log.best_val_loss = val_loss;
            log.best_epoch = epoch;
            best_params.clone_from(&mlp.params);
            waited = 0;
        } else {
            waited += 1;
            if waited > config.patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    mlp.params = best_params;
    Ok((mlp, log))
}

fn examples(records: &[&TripRecord], stats: &StandardizationStats) -> Vec<Example> {
    records.iter().map(|r| Example { x: stats.apply(&RawFeatures::from_record(r)), y: r.residual }).collect()
}

/// Fits a residual network on the corpus' train split, early-stopping on
/// its validation split.
pub fn train(corpus: &[TripRecord], features: &FeatureSet, config: &TrainConfig) -> Result<(ResidualNet, TrainingLog)> {
    config.validate()?;
    if features.is_empty() {
        return Err(Error::invalid("features", "feature set is empty"));
    }
    let train_records: Vec<&TripRecord> = corpus.iter().filter(|r| r.split == Split::Train).collect();
    let val_records: Vec<&TripRecord> = corpus.iter().filter(|r| r.split == Split::Val).collect();
    if train_records.is_empty() {
        return Err(Error::EmptySplit(Split::Train));
    }
    if val_records.is_empty() {
        return Err(Error::EmptySplit(Split::Val));
    }

    let raw: Vec<RawFeatures> = train_records.iter().map(|r| RawFeatures::from_record(r)).collect();
    let stats = StandardizationStats::fit(features, &raw)?;
    let train_set = examples(&train_records, &stats);
    let val_set = examples(&val_records, &stats);

    let mut dims = Vec::with_capacity(config.hidden.len() + 2);
    dims.push(features.len());
    dims.extend_from_slice(&config.hidden);
    dims.push(1);
    let mut init_rng = SeededRng::derived(config.seed, "init", 0);
    let dropout = (0..config.hidden.len()).map(|l| if l == 0 { 0.0 } else { config.dropout }).collect();
    let mut mlp = Mlp::he_init(&dims, Activation::Relu, true, &mut init_rng)?.with_dropout(dropout)?;

    let n = train_set.len() as f64;
    let mean = train_set.iter().map(|e| e.y).sum::<f64>() / n;
    let spread = libm::sqrt(train_set.iter().map(|e| (e.y - mean) * (e.y - mean)).sum::<f64>() / n);
    if spread > 0.0 && spread.is_finite() {
        mlp.output_scale = spread;
    }

    let (mlp, log) = train_mlp(mlp, &train_set, &val_set, config)?;
    Ok((ResidualNet { features: features.clone(), stats, mlp }, log))
}
