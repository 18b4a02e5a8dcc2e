//! Vehicle constants, driving profiles and trip descriptors.
//!
//! Units are stored exactly as named in each field (km, km/h, kWh, kW, m/s²,
//! °C). Conversions to SI happen inside the operations that need them.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrivingMode {
    Eco,
    Normal,
    Aggressive,
}

impl DrivingMode {
    pub const ALL: [DrivingMode; 3] = [DrivingMode::Eco, DrivingMode::Normal, DrivingMode::Aggressive];

    /// Position in [`DrivingMode::ALL`]; also the one-hot column offset.
    pub fn index(self) -> usize {
        match self {
            DrivingMode::Eco => 0,
            DrivingMode::Normal => 1,
            DrivingMode::Aggressive => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DrivingMode::Eco => "eco",
            DrivingMode::Normal => "normal",
            DrivingMode::Aggressive => "aggressive",
        }
    }
}

impl fmt::Display for DrivingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DrivingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eco" => Ok(DrivingMode::Eco),
            "normal" => Ok(DrivingMode::Normal),
            "aggressive" => Ok(DrivingMode::Aggressive),
            _ => Err(Error::invalid("mode", alloc::format!("expected eco|normal|aggressive, got `{s}`"))),
        }
    }
}

/// Per-mode behaviour parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivingProfile {
    pub mode: DrivingMode,
    /// m/s²
    pub max_accel: f64,
    /// Scales traction power.
    pub efficiency_multiplier: f64,
    pub regen_efficiency: f64,
    /// kW
    pub mode_aux_power: f64,
    pub accel_phase_frac: f64,
    pub cruise_phase_frac: f64,
    pub brake_phase_frac: f64,
}

impl DrivingProfile {
    pub fn validate(&self) -> Result<()> {
        let fractions = [self.accel_phase_frac, self.cruise_phase_frac, self.brake_phase_frac];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::invalid("phase_frac", "each phase fraction must lie in [0, 1]"));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("phase_frac", alloc::format!("phase fractions sum to {sum}, not 1")));
        }
        if !(self.regen_efficiency > 0.0 && self.regen_efficiency < 1.0) {
            return Err(Error::invalid("regen_efficiency", "must lie in (0, 1)"));
        }
        if !(self.max_accel > 0.0) {
            return Err(Error::invalid("max_accel", "must be positive"));
        }
        if !(self.efficiency_multiplier > 0.0) {
            return Err(Error::invalid("efficiency_multiplier", "must be positive"));
        }
        if !(self.mode_aux_power >= 0.0) {
            return Err(Error::invalid("mode_aux_power", "must be non-negative"));
        }
        Ok(())
    }

    /// Same profile with every step in the cruise phase.
    pub fn all_cruise(self) -> Self {
        DrivingProfile { accel_phase_frac: 0.0, cruise_phase_frac: 1.0, brake_phase_frac: 0.0, ..self }
    }
}

/// The three reference profiles.
pub const fn canonical_profile(mode: DrivingMode) -> DrivingProfile {
    match mode {
        DrivingMode::Eco => DrivingProfile {
            mode,
            max_accel: 1.5,
            efficiency_multiplier: 0.85,
            regen_efficiency: 0.75,
            mode_aux_power: 0.0,
            accel_phase_frac: 0.20,
            cruise_phase_frac: 0.65,
            brake_phase_frac: 0.15,
        },
        DrivingMode::Normal => DrivingProfile {
            mode,
            max_accel: 2.5,
            efficiency_multiplier: 1.00,
            regen_efficiency: 0.65,
            mode_aux_power: 0.5,
            accel_phase_frac: 0.30,
            cruise_phase_frac: 0.50,
            brake_phase_frac: 0.20,
        },
        DrivingMode::Aggressive => DrivingProfile {
            mode,
            max_accel: 4.0,
            efficiency_multiplier: 1.35,
            regen_efficiency: 0.50,
            mode_aux_power: 1.5,
            accel_phase_frac: 0.40,
            cruise_phase_frac: 0.35,
            brake_phase_frac: 0.25,
        },
    }
}

/// One profile per driving mode; defaults to the canonical table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    pub eco: DrivingProfile,
    pub normal: DrivingProfile,
    pub aggressive: DrivingProfile,
}

impl Default for ProfileSet {
    fn default() -> Self {
        ProfileSet {
            eco: canonical_profile(DrivingMode::Eco),
            normal: canonical_profile(DrivingMode::Normal),
            aggressive: canonical_profile(DrivingMode::Aggressive),
        }
    }
}

impl ProfileSet {
    pub fn get(&self, mode: DrivingMode) -> &DrivingProfile {
        match mode {
            DrivingMode::Eco => &self.eco,
            DrivingMode::Normal => &self.normal,
            DrivingMode::Aggressive => &self.aggressive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for mode in DrivingMode::ALL {
            let profile = self.get(mode);
            if profile.mode != mode {
                return Err(Error::invalid("profiles", alloc::format!("{mode} slot holds a {} profile", profile.mode)));
            }
            profile.validate()?;
        }
        Ok(())
    }

    pub fn all_cruise(self) -> Self {
        ProfileSet { eco: self.eco.all_cruise(), normal: self.normal.all_cruise(), aggressive: self.aggressive.all_cruise() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    /// kWh
    pub battery_capacity: f64,
    /// kg
    pub mass: f64,
    pub drag_coeff: f64,
    /// m²
    pub frontal_area: f64,
    pub rolling_coeff: f64,
    pub drivetrain_eff: f64,
    /// kg/m³
    pub air_density: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            battery_capacity: 75.0,
            mass: 1800.0,
            drag_coeff: 0.24,
            frontal_area: 2.3,
            rolling_coeff: 0.01,
            drivetrain_eff: 0.90,
            air_density: 1.225,
            gravity: 9.81,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("battery_capacity", self.battery_capacity),
            ("mass", self.mass),
            ("drag_coeff", self.drag_coeff),
            ("frontal_area", self.frontal_area),
            ("rolling_coeff", self.rolling_coeff),
            ("drivetrain_eff", self.drivetrain_eff),
            ("air_density", self.air_density),
            ("gravity", self.gravity),
        ];
        for (name, value) in named {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid(name, "must be strictly positive"));
            }
        }
        if self.drivetrain_eff > 1.0 {
            return Err(Error::invalid("drivetrain_eff", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// A single trip to be predicted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DischargeSession {
    pub initial_soc: f64,
    /// Carried for completeness; the forward model never reads it.
    pub target_final_soc: Option<f64>,
    /// km
    pub distance: f64,
    /// km/h
    pub mean_velocity: f64,
    pub mode: DrivingMode,
    /// °C
    pub ambient_temp: f64,
    /// hours, [0, 24)
    pub time_of_day: f64,
    /// rad
    #[serde(default)]
    pub grade_angle: f64,
}

impl DischargeSession {
    /// Flat road, 20 °C, noon, no target SoC.
    pub fn new(initial_soc: f64, distance: f64, mean_velocity: f64, mode: DrivingMode) -> Self {
        DischargeSession {
            initial_soc,
            target_final_soc: None,
            distance,
            mean_velocity,
            mode,
            ambient_temp: 20.0,
            time_of_day: 12.0,
            grade_angle: 0.0,
        }
    }

    /// 100 km at 90 km/h from 80% SoC at 20 °C.
    pub fn baseline(mode: DrivingMode) -> Self {
        Self::new(0.8, 100.0, 90.0, mode)
    }

    pub fn with_ambient_temp(mut self, celsius: f64) -> Self {
        self.ambient_temp = celsius;
        self
    }

    pub fn with_time_of_day(mut self, hours: f64) -> Self {
        self.time_of_day = hours;
        self
    }

    pub fn with_grade(mut self, radians: f64) -> Self {
        self.grade_angle = radians;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(Error::invalid("initial_soc", "must lie in [0, 1]"));
        }
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::invalid("distance", "must be positive"));
        }
        if !(self.mean_velocity > 0.0 && self.mean_velocity.is_finite()) {
            return Err(Error::invalid("mean_velocity", "must be positive"));
        }
        if let Some(target) = self.target_final_soc {
            if !(0.0..=1.0).contains(&target) || target >= self.initial_soc {
                return Err(Error::invalid("target_final_soc", "must lie in [0, initial_soc)"));
            }
        }
        if !(0.0..24.0).contains(&self.time_of_day) {
            return Err(Error::invalid("time_of_day", "must lie in [0, 24)"));
        }
        if !self.ambient_temp.is_finite() || !self.grade_angle.is_finite() {
            return Err(Error::invalid("ambient_temp", "must be finite"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_rows() {
        let eco = canonical_profile(DrivingMode::Eco);
        assert_eq!(
            (eco.max_accel, eco.efficiency_multiplier, eco.regen_efficiency, eco.mode_aux_power),
            (1.5, 0.85, 0.75, 0.0)
        );
        assert_eq!((eco.accel_phase_frac, eco.cruise_phase_frac, eco.brake_phase_frac), (0.20, 0.65, 0.15));

        let normal = canonical_profile(DrivingMode::Normal);
        assert_eq!(
            (normal.max_accel, normal.efficiency_multiplier, normal.regen_efficiency, normal.mode_aux_power),
            (2.5, 1.00, 0.65, 0.5)
        );
        assert_eq!((normal.accel_phase_frac, normal.cruise_phase_frac, normal.brake_phase_frac), (0.30, 0.50, 0.20));

        let aggressive = canonical_profile(DrivingMode::Aggressive);
        assert_eq!(
            (aggressive.max_accel, aggressive.efficiency_multiplier, aggressive.regen_efficiency, aggressive.mode_aux_power),
            (4.0, 1.35, 0.50, 1.5)
        );
        assert_eq!(
            (aggressive.accel_phase_frac, aggressive.cruise_phase_frac, aggressive.brake_phase_frac),
            (0.40, 0.35, 0.25)
        );
    }

    #[test]
    fn profile_ordering() {
        let [e, n, a] = DrivingMode::ALL.map(canonical_profile);
        assert!(e.max_accel < n.max_accel && n.max_accel < a.max_accel);
        assert!(e.regen_efficiency > n.regen_efficiency && n.regen_efficiency > a.regen_efficiency);
        assert!(e.efficiency_multiplier < n.efficiency_multiplier && n.efficiency_multiplier < a.efficiency_multiplier);
    }

    #[test]
    fn canonical_profiles_validate() {
        ProfileSet::default().validate().unwrap();
        VehicleParams::default().validate().unwrap();
    }

    #[test]
    fn canonical_profile_is_pure() {
        for mode in DrivingMode::ALL {
            let a = canonical_profile(mode);
            let b = canonical_profile(mode);
            assert_eq!(a.max_accel.to_bits(), b.max_accel.to_bits());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn phase_fractions_must_sum_to_one() {
        let mut p = canonical_profile(DrivingMode::Normal);
        p.brake_phase_frac = 0.25;
        assert!(matches!(p.validate(), Err(Error::InvalidArgument { name: "phase_frac", .. })));
    }

    #[test]
    fn session_invariants() {
        let ok = DischargeSession::baseline(DrivingMode::Eco);
        ok.validate().unwrap();

        let mut s = ok;
        s.distance = 0.0;
        assert!(matches!(s.validate(), Err(Error::InvalidArgument { name: "distance", .. })));

        let mut s = ok;
        s.initial_soc = 1.2;
        assert!(s.validate().is_err());

        let mut s = ok;
        s.target_final_soc = Some(0.9);
        assert!(matches!(s.validate(), Err(Error::InvalidArgument { name: "target_final_soc", .. })));
        s.target_final_soc = Some(0.5);
        s.validate().unwrap();
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("Aggressive".parse::<DrivingMode>().unwrap(), DrivingMode::Aggressive);
        assert!("sport".parse::<DrivingMode>().is_err());
    }
}
