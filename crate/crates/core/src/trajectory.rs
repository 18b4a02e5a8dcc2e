//! Discretization of a trip into fixed-length time steps.
//!
//! Each step carries an independently perturbed velocity and a phase-driven
//! acceleration. Velocity is not integrated from acceleration: acceleration
//! only feeds the inertial and regenerative terms of the power model.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{DischargeSession, DrivingProfile};
use crate::error::{Error, Result};

/// Fraction of `max_accel` used in accel and brake phases.
pub const PHASE_ACCEL_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Accel,
    Cruise,
    Brake,
}

/// How phases are laid out along the trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PhaseLayout {
    /// One accel → cruise → brake arc over the whole trip.
    #[default]
    Contiguous,
    /// `k` consecutive arcs over equal-length chunks.
    Cycles(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub n_steps: usize,
    /// Perturbation standard deviation as a fraction of mean velocity,
    /// before scaling by the profile's efficiency multiplier.
    pub kappa: f64,
    pub layout: PhaseLayout,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig { n_steps: 1000, kappa: 0.05, layout: PhaseLayout::Contiguous }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be at least 1"));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa", "must be a finite non-negative number"));
        }
        if let PhaseLayout::Cycles(k) = self.layout {
            if k == 0 || k as usize > self.n_steps {
                return Err(Error::invalid("layout", "cycle count must lie in [1, n_steps]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    /// s
    pub time: f64,
    /// m/s, never negative
    pub velocity: f64,
    /// m/s²
    pub acceleration: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripTrajectory {
    /// s
    pub dt: f64,
    pub steps: Vec<TrajectoryStep>,
}

impl TripTrajectory {
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Σ v·dt in metres.
    pub fn distance_m(&self) -> f64 {
        self.steps.iter().map(|s| s.velocity * self.dt).sum()
    }

    /// Highest step velocity, km/h.
    pub fn max_velocity_kmh(&self) -> f64 {
        self.steps.iter().map(|s| s.velocity).fold(0.0, f64::max) * 3.6
    }
}

/// Step length in seconds: the physical trip duration `d / v̄` split into
/// `n_steps` equal pieces.
pub fn time_step(distance_km: f64, mean_velocity_kmh: f64, n_steps: usize) -> Result<f64> {
    if !(distance_km > 0.0) {
        return Err(Error::invalid("distance", "must be positive"));
    }
    if !(mean_velocity_kmh > 0.0) {
        return Err(Error::invalid("mean_velocity", "must be positive"));
    }
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be at least 1"));
    }
    Ok(distance_km * 3600.0 / (mean_velocity_kmh * n_steps as f64))
}

/// Contiguous accel → cruise → brake schedule. Accel and brake get
/// `round(n·frac)` steps; cruise takes whatever remains.
pub fn phase_schedule(profile: &DrivingProfile, n_steps: usize) -> Vec<Phase> {
    let n = n_steps as f64;
    let accel = (libm::round(n * profile.accel_phase_frac) as usize).min(n_steps);
    let brake = (libm::round(n * profile.brake_phase_frac) as usize).min(n_steps - accel);
    let cruise = n_steps - accel - brake;

    let mut phases = Vec::with_capacity(n_steps);
    phases.extend(core::iter::repeat_n(Phase::Accel, accel));
    phases.extend(core::iter::repeat_n(Phase::Cruise, cruise));
    phases.extend(core::iter::repeat_n(Phase::Brake, brake));
    phases
}

pub fn layout_schedule(profile: &DrivingProfile, n_steps: usize, layout: PhaseLayout) -> Vec<Phase> {
    match layout {
        PhaseLayout::Contiguous => phase_schedule(profile, n_steps),
        PhaseLayout::Cycles(k) => {
            let k = (k as usize).clamp(1, n_steps.max(1));
            let (base, extra) = (n_steps / k, n_steps % k);
            (0..k).flat_map(|i| phase_schedule(profile, base + usize::from(i < extra))).collect()
        }
    }
}

/// Zero-mean normal draw with σ = κ · efficiency_multiplier · v̄.
pub fn velocity_perturbation<R: Rng + ?Sized>(
    rng: &mut R,
    profile: &DrivingProfile,
    mean_velocity_ms: f64,
    kappa: f64,
) -> f64 {
    let sigma = kappa * profile.efficiency_multiplier * mean_velocity_ms;
    if sigma == 0.0 {
        return 0.0;
    }
    // sigma is finite and positive here, so construction cannot fail
    Normal::new(0.0, sigma).map(|n| n.sample(rng)).unwrap_or(0.0)
}

pub fn step_acceleration(phase: Phase, profile: &DrivingProfile) -> f64 {
    match phase {
        Phase::Accel => PHASE_ACCEL_FRACTION * profile.max_accel,
        Phase::Cruise => 0.0,
        Phase::Brake => -PHASE_ACCEL_FRACTION * profile.max_accel,
    }
}

/// Builds the per-step trajectory for `session`. Deterministic in
/// `(session, config, rng state)`.
pub fn synthesize_trajectory<R: Rng + ?Sized>(
    session: &DischargeSession,
    profile: &DrivingProfile,
    config: &SynthesisConfig,
    rng: &mut R,
) -> Result<TripTrajectory> {
    config.validate()?;
    let dt = time_step(session.distance, session.mean_velocity, config.n_steps)?;
    let mean_ms = session.mean_velocity / 3.6;

    let steps = layout_schedule(profile, config.n_steps, config.layout)
        .into_iter()
        .enumerate()
        .map(|(k, phase)| {
            let dv = velocity_perturbation(rng, profile, mean_ms, config.kappa);
            TrajectoryStep {
                time: k as f64 * dt,
                velocity: (mean_ms + dv).max(0.0),
                acceleration: step_acceleration(phase, profile),
                phase,
            }
        })
        .collect();
    Ok(TripTrajectory { dt, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{canonical_profile, DrivingMode};
    use crate::rng::SeededRng;
    use Phase::*;

    #[test]
    fn time_step_examples() {
        assert!((time_step(100.0, 90.0, 1000).unwrap() - 4.0).abs() < 1e-12);
        assert!((time_step(50.0, 100.0, 500).unwrap() - 3.6).abs() < 1e-12);
        // one step spans the whole trip
        assert!((time_step(100.0, 90.0, 1).unwrap() - 4000.0).abs() < 1e-9);
    }

    #[test]
    fn time_step_rejects_non_positive() {
        assert!(matches!(time_step(0.0, 90.0, 10), Err(Error::InvalidArgument { name: "distance", .. })));
        assert!(matches!(time_step(10.0, -1.0, 10), Err(Error::InvalidArgument { name: "mean_velocity", .. })));
        assert!(matches!(time_step(10.0, 90.0, 0), Err(Error::InvalidArgument { name: "n_steps", .. })));
    }

    #[test]
    fn schedule_examples() {
        let normal = canonical_profile(DrivingMode::Normal);
        assert_eq!(phase_schedule(&normal, 10), [Accel, Accel, Accel, Cruise, Cruise, Cruise, Cruise, Cruise, Brake, Brake]);

        let eco = canonical_profile(DrivingMode::Eco);
        assert_eq!(phase_schedule(&eco, 1), [Cruise]);

        let aggressive = canonical_profile(DrivingMode::Aggressive);
        let s = phase_schedule(&aggressive, 100);
        let count = |p| s.iter().filter(|&&x| x == p).count();
        assert_eq!((count(Accel), count(Cruise), count(Brake)), (40, 35, 25));
    }

    #[test]
    fn cycles_repeat_the_arc() {
        let normal = canonical_profile(DrivingMode::Normal);
        let s = layout_schedule(&normal, 20, PhaseLayout::Cycles(2));
        assert_eq!(&s[..10], &s[10..]);
        assert_eq!(&s[..10], phase_schedule(&normal, 10).as_slice());
    }

    #[test]
    fn acceleration_examples() {
        let normal = canonical_profile(DrivingMode::Normal);
        let aggressive = canonical_profile(DrivingMode::Aggressive);
        assert!((step_acceleration(Accel, &normal) - 1.75).abs() < 1e-12);
        assert_eq!(step_acceleration(Cruise, &aggressive), 0.0);
        assert!((step_acceleration(Brake, &aggressive) + 2.8).abs() < 1e-12);
    }

    #[test]
    fn zero_kappa_means_no_perturbation() {
        let mut rng = SeededRng::new(3);
        for mode in DrivingMode::ALL {
            let p = canonical_profile(mode);
            for _ in 0..100 {
                assert_eq!(velocity_perturbation(&mut rng, &p, 25.0, 0.0), 0.0);
            }
        }
        let session = DischargeSession::baseline(DrivingMode::Normal);
        let config = SynthesisConfig { kappa: 0.0, ..Default::default() };
        let traj = synthesize_trajectory(&session, &canonical_profile(DrivingMode::Normal), &config, &mut rng).unwrap();
        assert!(traj.steps.iter().all(|s| s.velocity == 90.0 / 3.6));
    }

    fn sample_std(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        libm::sqrt(xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn perturbation_std_matches_configuration() {
        let normal = canonical_profile(DrivingMode::Normal);
        let mut rng = SeededRng::new(11);
        let draws: Vec<f64> = (0..100_000).map(|_| velocity_perturbation(&mut rng, &normal, 25.0, 0.05)).collect();
        let std = sample_std(&draws);
        assert!((std - 1.25).abs() / 1.25 < 0.03, "std {std}");
    }

    #[test]
    fn perturbation_scales_with_aggressiveness() {
        let eco = canonical_profile(DrivingMode::Eco);
        let aggressive = canonical_profile(DrivingMode::Aggressive);
        let mut rng = SeededRng::new(12);
        let e: Vec<f64> = (0..100_000).map(|_| velocity_perturbation(&mut rng, &eco, 25.0, 0.05)).collect();
        let a: Vec<f64> = (0..100_000).map(|_| velocity_perturbation(&mut rng, &aggressive, 25.0, 0.05)).collect();
        let ratio = sample_std(&e) / sample_std(&a);
        let expected = 0.85 / 1.35;
        assert!((ratio - expected).abs() / expected < 0.03, "ratio {ratio}");
    }

    #[test]
    fn baseline_trip_preserves_distance() {
        let session = DischargeSession::baseline(DrivingMode::Normal);
        let mut rng = SeededRng::new(5);
        let traj =
            synthesize_trajectory(&session, &canonical_profile(DrivingMode::Normal), &Default::default(), &mut rng)
                .unwrap();
        assert_eq!(traj.n_steps(), 1000);
        let mean_v = traj.steps.iter().map(|s| s.velocity).sum::<f64>() / 1000.0;
        assert!((mean_v - 25.0).abs() / 25.0 < 0.02);
        assert!((traj.distance_m() - 100_000.0).abs() / 100_000.0 < 0.02);
    }
}
