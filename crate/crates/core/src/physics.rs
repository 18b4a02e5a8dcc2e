//! Force-balance power model and energy / state-of-charge integration.
//!
//! Battery power at each step is `traction + auxiliary − regen`. Traction
//! is clipped at zero when the net road force is negative; braking energy is
//! credited only through the regen term, capped at the concurrent draw plus
//! a charge-acceptance limit.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{DischargeSession, DrivingProfile, ProfileSet, VehicleParams};
use crate::error::Result;
use crate::trajectory::{synthesize_trajectory, Phase, SynthesisConfig, TrajectoryStep, TripTrajectory};

/// Base auxiliary load, kW.
pub const BASE_AUX_KW: f64 = 0.5;

/// N
pub fn rolling_force(vehicle: &VehicleParams, grade: f64) -> f64 {
    vehicle.rolling_coeff * vehicle.mass * vehicle.gravity * libm::cos(grade)
}

/// N
pub fn aero_force(vehicle: &VehicleParams, velocity: f64) -> f64 {
    0.5 * vehicle.air_density * vehicle.drag_coeff * vehicle.frontal_area * velocity * velocity
}

/// N, negative downhill.
pub fn grade_force(vehicle: &VehicleParams, grade: f64) -> f64 {
    vehicle.mass * vehicle.gravity * libm::sin(grade)
}

/// N, signed.
pub fn inertial_force(vehicle: &VehicleParams, accel: f64) -> f64 {
    vehicle.mass * accel
}

/// Traction power at the battery in kW, scaled by the profile's efficiency
/// multiplier. Negative road-force totals contribute nothing.
pub fn traction_power(vehicle: &VehicleParams, profile: &DrivingProfile, step: &TrajectoryStep, grade: f64) -> f64 {
    let force = rolling_force(vehicle, grade)
        + aero_force(vehicle, step.velocity)
        + grade_force(vehicle, grade)
        + inertial_force(vehicle, step.acceleration);
    let wheel_w = (force * step.velocity / vehicle.drivetrain_eff).max(0.0);
    profile.efficiency_multiplier * wheel_w / 1000.0
}

/// HVAC load in kW by ambient temperature band.
pub fn climate_power(ambient_temp: f64) -> f64 {
    if ambient_temp < 0.0 {
        2.0
    } else if ambient_temp < 15.0 {
        1.0
    } else if ambient_temp <= 25.0 {
        0.5
    } else {
        2.5
    }
}

/// kW
pub fn auxiliary_power(profile: &DrivingProfile, ambient_temp: f64) -> f64 {
    BASE_AUX_KW + climate_power(ambient_temp) + profile.mode_aux_power
}

/// Uncapped regenerative power in kW; zero unless decelerating.
pub fn regen_power(vehicle: &VehicleParams, profile: &DrivingProfile, step: &TrajectoryStep) -> f64 {
    if step.acceleration < 0.0 {
        profile.regen_efficiency * vehicle.mass * step.acceleration.abs() * step.velocity / 1000.0
    } else {
        0.0
    }
}

/// Kinetic power available at the wheels while braking, kW.
fn braking_power(vehicle: &VehicleParams, step: &TrajectoryStep) -> f64 {
    if step.acceleration < 0.0 {
        vehicle.mass * step.acceleration.abs() * step.velocity / 1000.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    /// Net charging power the battery accepts, kW. Regen is capped at the
    /// concurrent draw plus this.
    pub regen_limit_kw: f64,
    /// Replaces the computed auxiliary load when set.
    pub aux_override_kw: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { regen_limit_kw: 50.0, aux_override_kw: None }
    }
}

/// kW
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub traction: f64,
    pub auxiliary: f64,
    pub regen: f64,
    pub net: f64,
}

pub fn step_power(
    vehicle: &VehicleParams,
    profile: &DrivingProfile,
    step: &TrajectoryStep,
    session: &DischargeSession,
    options: &SimOptions,
) -> PowerBreakdown {
    let traction = traction_power(vehicle, profile, step, session.grade_angle);
    let auxiliary = options.aux_override_kw.unwrap_or_else(|| auxiliary_power(profile, session.ambient_temp));
    let regen = regen_power(vehicle, profile, step).min(traction + auxiliary + options.regen_limit_kw).max(0.0);
    PowerBreakdown { traction, auxiliary, regen, net: traction + auxiliary - regen }
}

/// kWh
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub traction: f64,
    pub auxiliary: f64,
    pub regen_recovered: f64,
    /// Kinetic energy shed during braking steps, before regen efficiency.
    pub braking: f64,
}

impl EnergyBreakdown {
    /// Share of braking energy returned to the battery.
    pub fn regen_fraction(&self) -> f64 {
        if self.braking > 0.0 {
            self.regen_recovered / self.braking
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocPoint {
    /// s
    pub time: f64,
    pub soc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    /// kWh
    pub total_energy: f64,
    pub final_soc: f64,
    /// `n_steps + 1` points from `t = 0` to the end of the trip.
    pub soc_trajectory: Vec<SocPoint>,
    pub energy_breakdown: EnergyBreakdown,
    /// kWh/km
    pub consumption_rate: f64,
    pub braking_event_count: usize,
    /// SoC hit zero before the trip ended.
    pub depleted: bool,
}

/// Integrates battery power over `trajectory`.
pub fn simulate(
    session: &DischargeSession,
    vehicle: &VehicleParams,
    profile: &DrivingProfile,
    trajectory: &TripTrajectory,
    options: &SimOptions,
) -> SimulationResult {
    let dt_h = trajectory.dt / 3600.0;
    let capacity = vehicle.battery_capacity;

    let mut soc_trajectory = Vec::with_capacity(trajectory.n_steps() + 1);
    soc_trajectory.push(SocPoint { time: 0.0, soc: session.initial_soc });

    let mut total = 0.0;
    let mut breakdown = EnergyBreakdown::default();
    let mut depleted = false;
    for (k, step) in trajectory.steps.iter().enumerate() {
        let power = step_power(vehicle, profile, step, session, options);
        total += power.net * dt_h;
        breakdown.traction += power.traction * dt_h;
        breakdown.auxiliary += power.auxiliary * dt_h;
        breakdown.regen_recovered += power.regen * dt_h;
        breakdown.braking += braking_power(vehicle, step) * dt_h;

        let soc = session.initial_soc - total / capacity;
        if soc < 0.0 {
            depleted = true;
        }
        soc_trajectory.push(SocPoint { time: (k + 1) as f64 * trajectory.dt, soc: soc.max(0.0) });
    }

    SimulationResult {
        total_energy: total,
        final_soc: (session.initial_soc - total / capacity).max(0.0),
        soc_trajectory,
        energy_breakdown: breakdown,
        consumption_rate: total / session.distance,
        braking_event_count: braking_events(&trajectory.steps),
        depleted,
    }
}

/// Number of maximal runs of consecutive brake steps.
pub fn braking_events(steps: &[TrajectoryStep]) -> usize {
    let mut count = 0;
    let mut in_brake = false;
    for step in steps {
        let braking = step.phase == Phase::Brake;
        if braking && !in_brake {
            count += 1;
        }
        in_brake = braking;
    }
    count
}

/// Vehicle, profiles and discretization settings bundled for repeated use.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Simulator {
    pub vehicle: VehicleParams,
    pub profiles: ProfileSet,
    pub synthesis: SynthesisConfig,
    pub options: SimOptions,
}

impl Simulator {
    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.profiles.validate()?;
        self.synthesis.validate()
    }

    pub fn trajectory<R: Rng + ?Sized>(&self, session: &DischargeSession, rng: &mut R) -> Result<TripTrajectory> {
        session.validate()?;
        synthesize_trajectory(session, self.profiles.get(session.mode), &self.synthesis, rng)
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        session: &DischargeSession,
        rng: &mut R,
    ) -> Result<(TripTrajectory, SimulationResult)> {
        let trajectory = self.trajectory(session, rng)?;
        let result = simulate(session, &self.vehicle, self.profiles.get(session.mode), &trajectory, &self.options);
        Ok((trajectory, result))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{canonical_profile, DrivingMode};
    use crate::trajectory::Phase;

    fn step(velocity: f64, acceleration: f64) -> TrajectoryStep {
        let phase = if acceleration > 0.0 {
            Phase::Accel
        } else if acceleration < 0.0 {
            Phase::Brake
        } else {
            Phase::Cruise
        };
        TrajectoryStep { time: 0.0, velocity, acceleration, phase }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn force_examples() {
        let v = VehicleParams::default();
        assert!(close(rolling_force(&v, 0.0), 176.58, 1e-9));
        assert_eq!(rolling_force(&VehicleParams { rolling_coeff: 0.0, ..v }, 0.0), 0.0);
        assert!(close(rolling_force(&v, core::f64::consts::FRAC_PI_2), 0.0, 1e-12));

        assert!(close(aero_force(&v, 25.0), 211.3125, 1e-9));
        assert_eq!(aero_force(&v, 0.0), 0.0);
        assert!(close(aero_force(&v, 50.0), 4.0 * aero_force(&v, 25.0), 1e-9));

        assert_eq!(grade_force(&v, 0.0), 0.0);
        let g = 1800.0 * 9.81 * libm::sin(0.05);
        assert!(close(grade_force(&v, 0.05), g, 1e-9));
        assert!(close(g, 882.53, 0.01));
        assert!(close(grade_force(&v, -0.05), -g, 1e-9));

        assert_eq!(inertial_force(&v, 0.0), 0.0);
        assert!(close(inertial_force(&v, 1.75), 3150.0, 1e-9));
        assert!(close(inertial_force(&v, -2.8), -5040.0, 1e-9));
    }

    #[test]
    fn traction_examples() {
        let v = VehicleParams::default();
        let normal = canonical_profile(DrivingMode::Normal);
        let eco = canonical_profile(DrivingMode::Eco);
        let cruise = step(25.0, 0.0);
        let expected = (176.58 + 211.3125) * 25.0 / 0.9 / 1000.0;
        assert!(close(traction_power(&v, &normal, &cruise, 0.0), expected, 1e-12));
        assert!(close(expected, 10.775, 1e-3));
        assert_eq!(traction_power(&v, &normal, &step(0.0, 0.0), 0.0), 0.0);
        let ratio = traction_power(&v, &eco, &cruise, 0.0) / traction_power(&v, &normal, &cruise, 0.0);
        assert!(close(ratio, 0.85, 1e-12));
    }

    #[test]
    fn braking_force_gives_no_traction() {
        let v = VehicleParams::default();
        let normal = canonical_profile(DrivingMode::Normal);
        assert_eq!(traction_power(&v, &normal, &step(25.0, -1.75), 0.0), 0.0);
    }

    #[test]
    fn auxiliary_examples() {
        assert!(close(auxiliary_power(&canonical_profile(DrivingMode::Normal), 20.0), 1.5, 1e-12));
        assert!(close(auxiliary_power(&canonical_profile(DrivingMode::Eco), 20.0), 1.0, 1e-12));
        assert!(close(auxiliary_power(&canonical_profile(DrivingMode::Aggressive), -5.0), 4.0, 1e-12));
    }

    #[test]
    fn climate_band_edges() {
        assert_eq!(climate_power(-0.1), 2.0);
        assert_eq!(climate_power(0.0), 1.0);
        assert_eq!(climate_power(15.0), 0.5);
        assert_eq!(climate_power(25.0), 0.5);
        assert_eq!(climate_power(25.1), 2.5);
        assert_eq!(climate_power(32.0), 2.5);
    }

    #[test]
    fn regen_examples() {
        let v = VehicleParams::default();
        let normal = canonical_profile(DrivingMode::Normal);
        assert!(close(regen_power(&v, &normal, &step(20.0, -1.75)), 40.95, 1e-9));
        assert_eq!(regen_power(&v, &normal, &step(20.0, 1.0)), 0.0);
        let s = step(20.0, -1.0);
        let ratio = regen_power(&v, &canonical_profile(DrivingMode::Eco), &s)
            / regen_power(&v, &canonical_profile(DrivingMode::Aggressive), &s);
        assert!(close(ratio, 1.5, 1e-12));
    }

    #[test]
    fn regen_cap_binds_at_high_power() {
        let v = VehicleParams::default();
        let aggressive = canonical_profile(DrivingMode::Aggressive);
        let session = DischargeSession::baseline(DrivingMode::Aggressive);
        let p = step_power(&v, &aggressive, &step(25.0, -2.8), &session, &SimOptions::default());
        // raw regen 63 kW; cap is 0 traction + 2.5 aux + 50
        assert!(close(p.regen, 52.5, 1e-12));
        assert!(close(p.net, -50.0, 1e-12));
    }

    #[test]
    fn final_soc_from_energy() {
        // 17.5 kWh from 0.8 of 75 kWh
        let soc: f64 = 0.8 - 17.5 / 75.0;
        assert!(close(soc, 0.5667, 1e-4));
    }

    #[test]
    fn degenerate_trip_uses_no_energy() {
        let session = DischargeSession::baseline(DrivingMode::Normal);
        let traj = TripTrajectory { dt: 4000.0, steps: alloc::vec![step(0.0, 0.0)] };
        let opts = SimOptions { aux_override_kw: Some(0.0), ..Default::default() };
        let r = simulate(&session, &VehicleParams::default(), &canonical_profile(DrivingMode::Normal), &traj, &opts);
        assert_eq!(r.total_energy, 0.0);
        assert_eq!(r.final_soc, 0.8);
        assert!(!r.depleted);
        assert_eq!(r.soc_trajectory.len(), 2);
    }

    #[test]
    fn constant_cruise_matches_closed_form() {
        let sim = Simulator {
            synthesis: SynthesisConfig { kappa: 0.0, ..Default::default() },
            ..Default::default()
        };
        let session = DischargeSession::baseline(DrivingMode::Normal);
        let profile = sim.profiles.normal;
        let traj = TripTrajectory {
            dt: 4.0,
            steps: (0..1000).map(|k| TrajectoryStep { time: 4.0 * k as f64, ..step(25.0, 0.0) }).collect(),
        };
        let r = simulate(&session, &sim.vehicle, &profile, &traj, &sim.options);
        let closed = ((176.58 + 211.3125) * 25.0 / 0.9 / 1000.0 + 1.5) * 4000.0 / 3600.0;
        assert!(((r.total_energy - closed) / closed).abs() < 1e-9);
        assert!(close(closed, 13.64, 0.01));
        assert_eq!(r.braking_event_count, 0);
    }

    #[test]
    fn depletion_is_flagged_and_floored() {
        let mut session = DischargeSession::baseline(DrivingMode::Aggressive);
        session.initial_soc = 0.1;
        let sim = Simulator::default();
        let (_, r) = sim.run(&session, &mut crate::rng::SeededRng::new(1)).unwrap();
        assert!(r.depleted);
        assert_eq!(r.final_soc, 0.0);
        assert!(r.soc_trajectory.iter().all(|p| p.soc >= 0.0));
        assert!(r.total_energy > 7.5);
    }

    #[test]
    fn braking_runs_counted() {
        let steps: Vec<_> = [0.0, -1.0, -1.0, 0.0, -1.0, 1.0, -1.0].iter().map(|&a| step(10.0, a)).collect();
        assert_eq!(braking_events(&steps), 3);
    }
}
