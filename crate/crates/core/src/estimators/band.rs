use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point estimate with an empirical replicate band, all in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithBand {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub replicates: usize,
    pub alpha: f64,
}

impl EstimateWithBand {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Strictly above or below, with no overlap.
    pub fn separated_from(&self, other: &EstimateWithBand) -> bool {
        self.lower > other.upper || self.upper < other.lower
    }

    pub fn scaled(&self, factor: f64) -> Self {
        EstimateWithBand {
            point: self.point * factor,
            lower: self.lower * factor,
            upper: self.upper * factor,
            ..*self
        }
    }
}

/// Linearly interpolated sample quantile: with sorted values `v[0..n]`,
/// `q(p) = v[floor(h)] + (h - floor(h)) (v[floor(h)+1] - v[floor(h)])` where
/// `h = (n - 1) p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Band from the `alpha/2` and `1 - alpha/2` quantiles; the point is the median.
pub fn quantile_band(values: &[f64], alpha: f64) -> Result<EstimateWithBand> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if values.len() < 2 {
        return Err(Error::Config("a band needs at least 2 replicates".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("non-finite replicate value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EstimateWithBand {
        point: quantile_sorted(&sorted, 0.5),
        lower: quantile_sorted(&sorted, alpha / 2.0),
        upper: quantile_sorted(&sorted, 1.0 - alpha / 2.0),
        replicates: values.len(),
        alpha,
    })
}
