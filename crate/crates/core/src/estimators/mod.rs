//! Information-theoretic estimators. Everything is computed in bits; use
//! [`Units`] to report nats.

mod band;
pub mod discrete;
pub mod kdtree;
pub mod ksg;

use serde::{Deserialize, Serialize};

pub use band::{quantile_band, quantile_sorted, EstimateWithBand};
pub use discrete::{cmi_cols, corrected, joint_entropy, mi_cols, Col, Correction, DiscreteSample};
pub use ksg::{mi_ksg, ContinuousPairSample, KsgParams};

/// Default bootstrap resample count.
pub const DEFAULT_BOOTSTRAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Bits,
    Nats,
}

impl Units {
    /// Multiplier converting a value in bits to these units.
    pub fn factor(self) -> f64 {
        match self {
            Units::Bits => 1.0,
            Units::Nats => std::f64::consts::LN_2,
        }
    }

    pub fn from_bits(self, bits: f64) -> f64 {
        bits * self.factor()
    }
}

impl std::str::FromStr for Units {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bits" => Ok(Units::Bits),
            "nats" => Ok(Units::Nats),
            other => Err(format!("unknown units `{other}` (expected bits|nats)")),
        }
    }
}

/// Gaussian mutual information `-1/2 log2(1 - rho^2)`.
pub fn gaussian_mi_bits(rho: f64) -> f64 {
    -0.5 * (1.0 - rho * rho).log2()
}
