use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::TripRecord;
use crate::domain::DrivingMode;
use crate::error::{Error, Result};

/// True consumption rate statistics (kWh/km) for one driving mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeConsumption {
    pub mode: DrivingMode,
    pub n: usize,
    pub mean: Option<f64>,
    /// Population standard deviation.
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

/// One row per mode, in Eco/Normal/Aggressive order.
pub fn consumption_stats<'a>(records: impl IntoIterator<Item = &'a TripRecord>) -> Result<Vec<ModeConsumption>> {
    let mut rates: [Vec<f64>; 3] = Default::default();
    for r in records {
        rates[r.session.mode.index()].push(r.true_rate());
    }
    if rates.iter().all(Vec::is_empty) {
        return Err(Error::Empty);
    }
    Ok(DrivingMode::ALL
        .iter()
        .map(|&mode| {
            let xs = &rates[mode.index()];
            if xs.is_empty() {
                return ModeConsumption { mode, n: 0, mean: None, std: None, min: None, max: None };
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            ModeConsumption {
                mode,
                n: xs.len(),
                mean: Some(mean),
                std: Some(libm::sqrt(var)),
                min: xs.iter().copied().reduce(f64::min),
                max: xs.iter().copied().reduce(f64::max),
            }
        })
        .collect())
}
