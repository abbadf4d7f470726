//! Battery economics: capital cost, cycle life and round-trip efficiency.
//!
//! Wear cost is the capital cost spread evenly over the lifetime throughput
//! of `cycle_life` equivalent full cycles. It is expressed per MWh of energy
//! cycled through the storage (nominal-capacity throughput). Power-conversion
//! cost is assumed to be part of `capital_cost`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::EurPerMwh;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BatteryError {
    #[error("capital cost must be finite and >= 0, got {0}")]
    CapitalCost(f64),
    #[error("cycle life must be finite and > 0, got {0}")]
    CycleLife(f64),
    #[error("round-trip efficiency must lie in (0, 1], got {0}")]
    Efficiency(f64),
}

/// Validated battery parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBatteryParams")]
pub struct BatteryParams {
    /// €/kWh of nominal energy capacity.
    capital_cost: f64,
    /// Equivalent full cycles before replacement.
    cycle_life: f64,
    round_trip_efficiency: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBatteryParams {
    capital_cost: f64,
    cycle_life: f64,
    round_trip_efficiency: f64,
}

impl TryFrom<RawBatteryParams> for BatteryParams {
    type Error = BatteryError;

    fn try_from(raw: RawBatteryParams) -> Result<Self, Self::Error> {
        BatteryParams::new(raw.capital_cost, raw.cycle_life, raw.round_trip_efficiency)
    }
}

impl BatteryParams {
    pub fn new(
        capital_cost: f64,
        cycle_life: f64,
        round_trip_efficiency: f64,
    ) -> Result<Self, BatteryError> {
        if !(capital_cost.is_finite() && capital_cost >= 0.0) {
            return Err(BatteryError::CapitalCost(capital_cost));
        }
        if !(cycle_life.is_finite() && cycle_life > 0.0) {
            return Err(BatteryError::CycleLife(cycle_life));
        }
        if !(round_trip_efficiency > 0.0 && round_trip_efficiency <= 1.0) {
            return Err(BatteryError::Efficiency(round_trip_efficiency));
        }
        Ok(BatteryParams {
            capital_cost,
            cycle_life,
            round_trip_efficiency,
        })
    }

    /// 300 €/kWh, 3000 equivalent full cycles, 85 % round trip.
    pub fn reference() -> Self {
        BatteryParams::new(300.0, 3000.0, 0.85).expect("reference parameters are valid")
    }

    pub fn capital_cost(&self) -> f64 {
        self.capital_cost
    }

    pub fn cycle_life(&self) -> f64 {
        self.cycle_life
    }

    pub fn round_trip_efficiency(&self) -> f64 {
        self.round_trip_efficiency
    }

    pub fn wear_cost(&self) -> EurPerMwh {
        wear_cost(self)
    }

    pub fn efficiency(&self) -> EfficiencyPair {
        split_efficiency(self)
    }
}

/// Charging and discharging efficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPair {
    /// Grid energy to stored energy.
    pub charge: f64,
    /// Stored energy to grid energy.
    pub discharge: f64,
}

impl EfficiencyPair {
    /// Losses split evenly: both legs are `sqrt(round_trip)`.
    pub fn symmetric(round_trip: f64) -> Self {
        let e = round_trip.sqrt();
        EfficiencyPair {
            charge: e,
            discharge: e,
        }
    }

    pub fn lossless() -> Self {
        EfficiencyPair {
            charge: 1.0,
            discharge: 1.0,
        }
    }

    pub fn round_trip(&self) -> f64 {
        self.charge * self.discharge
    }
}

/// Capital cost per MWh cycled: `capital_cost * 1000 / cycle_life`.
pub fn wear_cost(params: &BatteryParams) -> EurPerMwh {
    EurPerMwh(params.capital_cost * 1000.0 / params.cycle_life)
}

pub fn split_efficiency(params: &BatteryParams) -> EfficiencyPair {
    EfficiencyPair::symmetric(params.round_trip_efficiency)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_wear_cost_is_100() {
        assert_eq!(wear_cost(&BatteryParams::reference()), EurPerMwh(100.0));
    }

    #[test]
    fn wear_cost_examples() {
        let p = BatteryParams::new(0.0, 1234.0, 0.9).unwrap();
        assert_eq!(wear_cost(&p), EurPerMwh(0.0));
        let p = BatteryParams::new(150.0, 5000.0, 0.9).unwrap();
        assert_eq!(wear_cost(&p), EurPerMwh(30.0));
    }

    #[test]
    fn wear_cost_linear_in_capital_and_inverse_in_cycles() {
        let base = wear_cost(&BatteryParams::new(100.0, 2000.0, 0.85).unwrap()).0;
        for k in [0.5, 2.0, 3.0] {
            let scaled = wear_cost(&BatteryParams::new(100.0 * k, 2000.0, 0.85).unwrap()).0;
            assert!((scaled - k * base).abs() < 1e-9);
            let longer = wear_cost(&BatteryParams::new(100.0, 2000.0 * k, 0.85).unwrap()).0;
            assert!((longer - base / k).abs() < 1e-9);
        }
    }

    #[test]
    fn split_examples() {
        let e = split_efficiency(&BatteryParams::new(300.0, 3000.0, 0.85).unwrap());
        assert_eq!(e.charge, e.discharge);
        assert!((e.charge - 0.921_954_445_729_288_7).abs() < 1e-15);
        assert!((e.round_trip() - 0.85).abs() < 1e-12);
        let e = split_efficiency(&BatteryParams::new(300.0, 3000.0, 1.0).unwrap());
        assert_eq!(e, EfficiencyPair::lossless());
        let e = split_efficiency(&BatteryParams::new(300.0, 3000.0, 0.25).unwrap());
        assert_eq!(e.charge, 0.5);
    }

    #[test]
    fn invalid_params_rejected() {
        assert_eq!(BatteryParams::new(-1.0, 10.0, 0.9), Err(BatteryError::CapitalCost(-1.0)));
        assert_eq!(BatteryParams::new(1.0, 0.0, 0.9), Err(BatteryError::CycleLife(0.0)));
        assert!(BatteryParams::new(1.0, 10.0, 0.0).is_err());
        assert!(BatteryParams::new(1.0, 10.0, 1.01).is_err());
        assert!(BatteryParams::new(1.0, 10.0, f64::NAN).is_err());
    }
}
