//! On-disk formats: corpus CSV with JSON sidecar, model file, training log.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use discharge_core::dataset::{NoiseComponents, Split, TripRecord};
use discharge_core::domain::{DischargeSession, DrivingMode};
use discharge_core::nn::EpochLog;
use discharge_core::{NoiseConfig, ResidualNet, TrainConfig, TrainingLog};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// One corpus CSV line. `max_velocity_kmh` trails the documented columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub trip_id: usize,
    pub distance_km: f64,
    pub mean_velocity_kmh: f64,
    pub mode: DrivingMode,
    pub temp_c: f64,
    pub time_of_day_h: f64,
    pub initial_soc: f64,
    pub physics_kwh: f64,
    pub true_kwh: f64,
    pub residual_kwh: f64,
    pub eps_terrain: f64,
    pub eps_traffic: f64,
    pub eps_driver: f64,
    pub eps_weather: f64,
    pub split: Split,
    pub max_velocity_kmh: f64,
}

impl From<&TripRecord> for CorpusRow {
    fn from(r: &TripRecord) -> Self {
        CorpusRow {
            trip_id: r.trip_id,
            distance_km: r.session.distance,
            mean_velocity_kmh: r.session.mean_velocity,
            mode: r.session.mode,
            temp_c: r.session.ambient_temp,
            time_of_day_h: r.session.time_of_day,
            initial_soc: r.session.initial_soc,
            physics_kwh: r.physics_energy,
            true_kwh: r.true_energy,
            residual_kwh: r.residual,
            eps_terrain: r.noise.terrain,
            eps_traffic: r.noise.traffic,
            eps_driver: r.noise.driver,
            eps_weather: r.noise.weather,
            split: r.split,
            max_velocity_kmh: r.max_velocity,
        }
    }
}

impl CorpusRow {
    pub fn into_record(self) -> TripRecord {
        let session = DischargeSession::new(self.initial_soc, self.distance_km, self.mean_velocity_kmh, self.mode)
            .with_ambient_temp(self.temp_c)
            .with_time_of_day(self.time_of_day_h);
        TripRecord {
            trip_id: self.trip_id,
            session,
            max_velocity: self.max_velocity_kmh,
            physics_energy: self.physics_kwh,
            true_energy: self.true_kwh,
            residual: self.residual_kwh,
            noise: NoiseComponents {
                terrain: self.eps_terrain,
                traffic: self.eps_traffic,
                driver: self.eps_driver,
                weather: self.eps_weather,
            },
            split: self.split,
        }
    }
}

/// Serializes rows as CSV with a header line.
pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    create_parent(path)?;
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn write_corpus(path: &Path, corpus: &[TripRecord]) -> Result<()> {
    write_csv(path, corpus.iter().map(CorpusRow::from))
}

pub fn read_corpus(path: &Path) -> Result<Vec<TripRecord>> {
    let corpus: Vec<TripRecord> = read_csv::<CorpusRow>(path)?.into_iter().map(CorpusRow::into_record).collect();
    for r in &corpus {
        r.session.validate().map_err(|e| Error::Format { path: path.into(), reason: format!("trip {}: {e}", r.trip_id) })?;
    }
    Ok(corpus)
}

/// Provenance written next to a corpus CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSidecar {
    pub generator_version: String,
    pub seed: u64,
    pub n_trips: usize,
    pub noise: NoiseConfig,
    pub config_hash: String,
    pub config: RunConfig,
}

pub fn sidecar_path(corpus: &Path) -> PathBuf {
    corpus.with_extension("json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

impl From<&TrainingLog> for TrainingSummary {
    fn from(log: &TrainingLog) -> Self {
        TrainingSummary {
            epochs_run: log.epochs_run(),
            best_epoch: log.best_epoch,
            best_val_loss: log.best_val_loss,
            stopped_early: log.stopped_early,
        }
    }
}

/// Self-describing trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub config_hash: String,
    pub train_config: TrainConfig,
    pub training: TrainingSummary,
    pub net: ResidualNet,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let model: ModelFile = read_json(path)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format {
                path: path.into(),
                reason: format!("unsupported model format version {}", model.format_version),
            });
        }
        model.net.validate().map_err(|e| Error::Format { path: path.into(), reason: e.to_string() })?;
        Ok(model)
    }
}

pub fn write_training_log(path: &Path, log: &TrainingLog) -> Result<()> {
    write_csv::<&EpochLog>(path, &log.epochs)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json { path: path.into(), source })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}
