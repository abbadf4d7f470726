//! Unit-tagged quantities.
//!
//! Energy prices (€/MWh), capacity prices (€/MW) and band utilization (MWh/MW)
//! are kept apart at the type level. The only bridge from an energy price to a
//! capacity price is multiplication by a utilization:
//!
//! ```
//! use pput_core::units::{EurPerMw, EurPerMwh, MwhPerMw};
//! let band: EurPerMw = EurPerMwh(100.0) * MwhPerMw(0.25);
//! assert_eq!(band, EurPerMw(25.0));
//! ```
//!
//! Mixing them without that scaling does not compile:
//!
//! ```compile_fail
//! use pput_core::units::{EurPerMw, EurPerMwh};
//! let _ = EurPerMw(10.0) + EurPerMwh(5.0);
//! ```
//!
//! ```compile_fail
//! use pput_core::units::{EurPerMw, EurPerMwh};
//! let _: EurPerMw = EurPerMwh(5.0);
//! ```

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

macro_rules! quantity {
    ($name:ident, $unit:literal) => {
        #[doc = concat!("A value in ", $unit, ".")]
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub f64);

        impl $name {
            pub const UNIT: &'static str = $unit;

            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                $name(self.0 + rhs.0)
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                $name(self.0 - rhs.0)
            }
        }

        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-self.0)
            }
        }

        impl Mul<f64> for $name {
            type Output = $name;
            fn mul(self, rhs: f64) -> $name {
                $name(self.0 * rhs)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {}", self.0, $unit)
            }
        }
    };
}

quantity!(EurPerMwh, "€/MWh");
quantity!(EurPerMw, "€/MW");
quantity!(MwhPerMw, "MWh/MW");

impl Mul<MwhPerMw> for EurPerMwh {
    type Output = EurPerMw;
    fn mul(self, rhs: MwhPerMw) -> EurPerMw {
        EurPerMw(self.0 * rhs.0)
    }
}

impl Mul<EurPerMwh> for MwhPerMw {
    type Output = EurPerMw;
    fn mul(self, rhs: EurPerMwh) -> EurPerMw {
        EurPerMw(self.0 * rhs.0)
    }
}
