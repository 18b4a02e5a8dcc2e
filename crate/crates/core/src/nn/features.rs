use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::TripRecord;
use crate::domain::DischargeSession;
use crate::error::{Error, Result};

pub const N_FEATURES: usize = 11;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "distance_km",
    "mean_velocity_kmh",
    "max_velocity_kmh",
    "mode_eco",
    "mode_normal",
    "mode_aggressive",
    "temp_c",
    "time_of_day_h",
    "initial_soc",
    "physics_kwh",
    "consumption_rate_kwh_per_km",
];

const ONE_HOT: core::ops::Range<usize> = 3..6;

/// Unscaled trip features in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawFeatures(pub [f64; N_FEATURES]);

impl RawFeatures {
    pub fn new(session: &DischargeSession, max_velocity_kmh: f64, physics_energy: f64) -> Self {
        let mut onehot = [0.0; 3];
        onehot[session.mode.index()] = 1.0;
        RawFeatures([
            session.distance,
            session.mean_velocity,
            max_velocity_kmh,
            onehot[0],
            onehot[1],
            onehot[2],
            session.ambient_temp,
            session.time_of_day,
            session.initial_soc,
            physics_energy,
            physics_energy / session.distance,
        ])
    }

    pub fn from_record(record: &TripRecord) -> Self {
        Self::new(&record.session, record.max_velocity, record.physics_energy)
    }
}

/// Named column groups that can be removed together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    PhysicsPrediction,
    DrivingBehavior,
    Velocity,
    Environmental,
    BatteryState,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 5] = [
        FeatureGroup::PhysicsPrediction,
        FeatureGroup::DrivingBehavior,
        FeatureGroup::Velocity,
        FeatureGroup::Environmental,
        FeatureGroup::BatteryState,
    ];

    pub fn columns(self) -> &'static [usize] {
        match self {
            FeatureGroup::PhysicsPrediction => &[9, 10],
            FeatureGroup::DrivingBehavior => &[3, 4, 5],
            FeatureGroup::Velocity => &[1, 2],
            FeatureGroup::Environmental => &[6, 7],
            FeatureGroup::BatteryState => &[8],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::PhysicsPrediction => "physics_prediction",
            FeatureGroup::DrivingBehavior => "driving_behavior",
            FeatureGroup::Velocity => "velocity",
            FeatureGroup::Environmental => "environmental",
            FeatureGroup::BatteryState => "battery_state",
        }
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownFeatureGroup(s.into()))
    }
}

/// Ordered subset of the raw feature columns fed to the network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub columns: Vec<usize>,
}

impl Default for FeatureSet {
    fn default() -> Self {
        Self::all()
    }
}

impl FeatureSet {
    pub fn all() -> Self {
        FeatureSet { columns: (0..N_FEATURES).collect() }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn contains_group(&self, group: FeatureGroup) -> bool {
        group.columns().iter().any(|c| self.columns.contains(c))
    }

    pub fn without(&self, group: FeatureGroup) -> Result<Self> {
        if !self.contains_group(group) {
            return Err(Error::FeatureGroupAbsent(group.name()));
        }
        let columns = self.columns.iter().copied().filter(|c| !group.columns().contains(c)).collect();
        Ok(FeatureSet { columns })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.columns.iter().map(|&c| FEATURE_NAMES[c]).collect()
    }
}

/// Per-column z-score parameters. One-hot columns keep mean 0 and std 1 so
/// they pass through unscaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    pub fn fit<'a>(features: &FeatureSet, rows: impl IntoIterator<Item = &'a RawFeatures>) -> Result<Self> {
        let rows: Vec<&RawFeatures> = rows.into_iter().collect();
        if rows.is_empty() {
            return Err(Error::Empty);
        }
        let n = rows.len() as f64;
        let mut mean = Vec::with_capacity(features.len());
        let mut std = Vec::with_capacity(features.len());
        for &c in &features.columns {
            if ONE_HOT.contains(&c) {
                mean.push(0.0);
                std.push(1.0);
                continue;
            }
            let m = rows.iter().map(|r| r.0[c]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r.0[c] - m) * (r.0[c] - m)).sum::<f64>() / n;
            let s = libm::sqrt(var);
            mean.push(m);
            std.push(if s > 0.0 { s } else { 1.0 });
        }
        Ok(StandardizationStats { columns: features.columns.clone(), mean, std })
    }

    pub fn apply(&self, raw: &RawFeatures) -> Vec<f64> {
        self.columns
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&c, (m, s))| (raw.0[c] - m) / s)
            .collect()
    }
}
