//! Synthetic trip corpus.
//!
//! Ground truth is the physics energy times `1 + Σ ε_j` for four noise
//! sources (terrain, traffic, driver, weather). Each `ε_j` blends a
//! deterministic function of the trip's features with i.i.d. normal noise:
//!
//! ```text
//! ε_j = f · σ_j · z_j(session) + (1 − f) · N(0, σ_j²)
//! ```
//!
//! where `f` is [`NoiseConfig::structured_fraction`] and every `z_j` has zero
//! mean and unit standard deviation over the session sampling distribution.
//! With `f = 0` the noise is independent of the features and no predictor
//! can beat the physics baseline in expectation.
//!
//! The structured signals:
//!
//! - terrain: `√2 · sin(2π·h/24 + φ)`, `h` the time of day, `φ` a fixed
//!   hash-derived phase.
//! - traffic: `0.8 · z(v̄) + 0.6 · z(rush(h))`, decreasing in mean velocity and
//!   peaking around 08:00 and 17:30.
//! - driver: `−√1.5, 0, +√1.5` for eco, normal, aggressive.
//! - weather: a table over the climate bands, standardized over the sampled
//!   temperatures.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{DischargeSession, DrivingMode};
use crate::error::{Error, Result};
use crate::physics::Simulator;
use crate::rng::{derive_seed, SeededRng};

pub const SAMPLED_VELOCITIES_KMH: [f64; 5] = [40.0, 60.0, 80.0, 100.0, 120.0];
pub const SAMPLED_TEMPERATURES_C: [f64; 3] = [20.0, -5.0, 32.0];
pub const DISTANCE_RANGE_KM: (f64, f64) = (20.0, 200.0);
pub const INITIAL_SOC_RANGE: (f64, f64) = (0.3, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::invalid("split", alloc::format!("unknown split `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub sigma_terrain: f64,
    pub sigma_traffic: f64,
    pub sigma_driver: f64,
    pub sigma_weather: f64,
    pub structured_fraction: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma_terrain: 0.05,
            sigma_traffic: 0.08,
            sigma_driver: 0.06,
            sigma_weather: 0.03,
            structured_fraction: 0.7,
        }
    }
}

impl NoiseConfig {
    /// Independent noise only.
    pub fn unstructured() -> Self {
        NoiseConfig { structured_fraction: 0.0, ..Default::default() }
    }

    fn sigmas(&self) -> [f64; 4] {
        [self.sigma_terrain, self.sigma_traffic, self.sigma_driver, self.sigma_weather]
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigmas().iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid("sigma", "noise standard deviations must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.structured_fraction) {
            return Err(Error::invalid("structured_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Relative noise terms of one trip.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseComponents {
    pub terrain: f64,
    pub traffic: f64,
    pub driver: f64,
    pub weather: f64,
}

impl NoiseComponents {
    pub fn sum(&self) -> f64 {
        self.terrain + self.traffic + self.driver + self.weather
    }

    fn from_array([terrain, traffic, driver, weather]: [f64; 4]) -> Self {
        NoiseComponents { terrain, traffic, driver, weather }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub trip_id: usize,
    pub session: DischargeSession,
    /// Highest step velocity of the simulated trajectory, km/h.
    pub max_velocity: f64,
    /// kWh
    pub physics_energy: f64,
    /// kWh
    pub true_energy: f64,
    /// `true_energy − physics_energy`, kWh
    pub residual: f64,
    pub noise: NoiseComponents,
    pub split: Split,
}

impl TripRecord {
    /// kWh/km
    pub fn true_rate(&self) -> f64 {
        self.true_energy / self.session.distance
    }
}

pub fn sample_session<R: Rng + ?Sized>(rng: &mut R) -> DischargeSession {
    let distance = rng.random_range(DISTANCE_RANGE_KM.0..=DISTANCE_RANGE_KM.1);
    let mean_velocity = *SAMPLED_VELOCITIES_KMH.choose(rng).unwrap_or(&80.0);
    let initial_soc = rng.random_range(INITIAL_SOC_RANGE.0..=INITIAL_SOC_RANGE.1);
    let mode = *DrivingMode::ALL.choose(rng).unwrap_or(&DrivingMode::Normal);
    let ambient_temp = *SAMPLED_TEMPERATURES_C.choose(rng).unwrap_or(&20.0);
    let time_of_day = rng.random_range(0.0..24.0);
    DischargeSession {
        initial_soc,
        target_final_soc: None,
        distance,
        mean_velocity,
        mode,
        ambient_temp,
        time_of_day,
        grade_angle: 0.0,
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

/// Mean and standard deviation of [`rush_hour_intensity`] for a time of day
/// uniform on [0, 24).
pub const RUSH_HOUR_MEAN: f64 = 0.6207161805772977;
pub const RUSH_HOUR_STD: f64 = 0.3060821910758166;

pub fn rush_hour_intensity(hour: f64) -> f64 {
    let bump = |center: f64| {
        let z = (hour - center) / 3.0;
        libm::exp(-0.5 * z * z)
    };
    bump(8.0) + bump(17.5)
}

fn terrain_phase() -> f64 {
    let h = derive_seed(0, "terrain-phase", 0);
    (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 * PI
}

fn weather_table(temp: f64) -> f64 {
    if temp < 0.0 {
        1.2
    } else if temp < 15.0 {
        0.4
    } else if temp <= 25.0 {
        -1.0
    } else {
        -0.2
    }
}

/// Unit-scale structured signals `[terrain, traffic, driver, weather]`.
pub fn structured_signals(session: &DischargeSession) -> [f64; 4] {
    let hour = session.time_of_day;
    let terrain = core::f64::consts::SQRT_2 * libm::sin(2.0 * PI * hour / 24.0 + terrain_phase());

    let (v_mean, v_std) = mean_std(&SAMPLED_VELOCITIES_KMH);
    let z_velocity = (v_mean - session.mean_velocity) / v_std;
    let z_rush = (rush_hour_intensity(hour) - RUSH_HOUR_MEAN) / RUSH_HOUR_STD;
    let traffic = 0.8 * z_velocity + 0.6 * z_rush;

    let driver = match session.mode {
        DrivingMode::Eco => -libm::sqrt(1.5),
        DrivingMode::Normal => 0.0,
        DrivingMode::Aggressive => libm::sqrt(1.5),
    };

    let table = SAMPLED_TEMPERATURES_C.map(weather_table);
    let (w_mean, w_std) = mean_std(&table);
    let weather = (weather_table(session.ambient_temp) - w_mean) / w_std;

    [terrain, traffic, driver, weather]
}

/// Draws the noise terms for one trip and returns `(true_energy, terms)`.
pub fn apply_noise<R: Rng + ?Sized>(
    physics_energy: f64,
    session: &DischargeSession,
    config: &NoiseConfig,
    rng: &mut R,
) -> Result<(f64, NoiseComponents)> {
    if !(physics_energy > 0.0) {
        return Err(Error::invalid("physics_energy", "must be positive"));
    }
    config.validate()?;
    let f = config.structured_fraction;
    let signals = structured_signals(session);
    let mut eps = [0.0; 4];
    for ((e, sigma), signal) in eps.iter_mut().zip(config.sigmas()).zip(signals) {
        let random = if sigma > 0.0 { Normal::new(0.0, sigma).map(|n| n.sample(rng)).unwrap_or(0.0) } else { 0.0 };
        *e = f * sigma * signal + (1.0 - f) * random;
    }
    let components = NoiseComponents::from_array(eps);
    Ok((physics_energy * (1.0 + components.sum()), components))
}

/// Simulates trip `trip_id` of the corpus seeded by `master_seed`. The split
/// is provisional until [`assign_splits`] runs.
pub fn generate_record(simulator: &Simulator, noise: &NoiseConfig, master_seed: u64, trip_id: usize) -> Result<TripRecord> {
    let mut trip_rng = SeededRng::derived(master_seed, "trip", trip_id as u64);
    let session = sample_session(&mut trip_rng);
    let (trajectory, result) = simulator.run(&session, &mut trip_rng)?;

    let mut noise_rng = SeededRng::derived(master_seed, "noise", trip_id as u64);
    let (true_energy, components) = apply_noise(result.total_energy, &session, noise, &mut noise_rng)?;
    Ok(TripRecord {
        trip_id,
        session,
        max_velocity: trajectory.max_velocity_kmh(),
        physics_energy: result.total_energy,
        true_energy,
        residual: true_energy - result.total_energy,
        noise: components,
        split: Split::Train,
    })
}

/// `(train, val, test)`: 15% each for val and test rounded down, the rest
/// to train.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let held_out = n * 15 / 100;
    (n - 2 * held_out, held_out, held_out)
}

/// Seeded shuffle, then val and test take the first positions.
pub fn assign_splits(records: &mut [TripRecord], master_seed: u64) {
    let (_, n_val, n_test) = split_sizes(records.len());
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut SeededRng::derived(master_seed, "split", 0));
    for (rank, idx) in order.into_iter().enumerate() {
        records[idx].split = if rank < n_val {
            Split::Val
        } else if rank < n_val + n_test {
            Split::Test
        } else {
            Split::Train
        };
    }
}

pub const MIN_CORPUS_TRIPS: usize = 10;

/// Collects per-trip outcomes in trip order, drops failures (at most 1%
/// tolerated) and assigns splits.
pub fn finalize_corpus(outcomes: Vec<Result<TripRecord>>, master_seed: u64) -> Result<Vec<TripRecord>> {
    let total = outcomes.len();
    let mut records: Vec<TripRecord> = outcomes.into_iter().filter_map(|r| r.ok()).collect();
    let failed = total - records.len();
    if failed * 100 > total {
        return Err(Error::CorpusFailed { failed, total });
    }
    assign_splits(&mut records, master_seed);
    Ok(records)
}

pub fn build_corpus(simulator: &Simulator, noise: &NoiseConfig, n_trips: usize, master_seed: u64) -> Result<Vec<TripRecord>> {
    if n_trips < MIN_CORPUS_TRIPS {
        return Err(Error::invalid("n_trips", alloc::format!("need at least {MIN_CORPUS_TRIPS} trips")));
    }
    simulator.validate()?;
    noise.validate()?;
    let outcomes = (0..n_trips).map(|i| generate_record(simulator, noise, master_seed, i)).collect();
    finalize_corpus(outcomes, master_seed)
}

pub fn records_in(corpus: &[TripRecord], split: Split) -> Vec<&TripRecord> {
    corpus.iter().filter(|r| r.split == split).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_rule() {
        assert_eq!(split_sizes(1500), (1050, 225, 225));
        assert_eq!(split_sizes(10), (8, 1, 1));
    }

    #[test]
    fn small_corpus_rejected() {
        let err = build_corpus(&Simulator::default(), &NoiseConfig::default(), 9, 0).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument { name: "n_trips", .. }));
    }

    #[test]
    fn noiseless_truth_equals_physics() {
        let cfg = NoiseConfig {
            sigma_terrain: 0.0,
            sigma_traffic: 0.0,
            sigma_driver: 0.0,
            sigma_weather: 0.0,
            structured_fraction: 0.0,
        };
        let session = DischargeSession::baseline(DrivingMode::Normal);
        let (truth, eps) = apply_noise(17.5, &session, &cfg, &mut SeededRng::new(0)).unwrap();
        assert_eq!(truth, 17.5);
        assert_eq!(eps.sum(), 0.0);
    }

    #[test]
    fn fully_structured_noise_is_a_function_of_features() {
        let cfg = NoiseConfig { structured_fraction: 1.0, ..Default::default() };
        let session = DischargeSession::baseline(DrivingMode::Aggressive).with_time_of_day(7.5);
        let (_, a) = apply_noise(20.0, &session, &cfg, &mut SeededRng::new(1)).unwrap();
        let (_, b) = apply_noise(20.0, &session, &cfg, &mut SeededRng::new(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corpus_records_are_consistent() {
        let corpus = build_corpus(&Simulator::default(), &NoiseConfig::default(), 40, 9).unwrap();
        assert_eq!(corpus.len(), 40);
        for r in &corpus {
            assert!(r.physics_energy > 0.0);
            assert!((r.residual - (r.true_energy - r.physics_energy)).abs() < 1e-9);
            assert!((r.true_energy - r.physics_energy * (1.0 + r.noise.sum())).abs() < 1e-9);
        }
        let count = |s| corpus.iter().filter(|r| r.split == s).count();
        assert_eq!((count(Split::Train), count(Split::Val), count(Split::Test)), (28, 6, 6));
    }
}
