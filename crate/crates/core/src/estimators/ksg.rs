//! Kraskov–Stögbauer–Grassberger k-nearest-neighbour mutual information
//! (first variant) for a pair of scalar variables.
//!
//! Both coordinates are centred and scaled to unit standard deviation, then
//! receive seeded Gaussian jitter of relative amplitude `jitter_scale` so that
//! tied integer values (word counts) become distinct. For each point the max
//! norm distance `eps` to its k-th joint neighbour is found with an exact 2-d
//! tree, and the marginal neighbours strictly inside `eps` are counted by
//! binary search on the sorted coordinates:
//!
//! ```text
//! I = psi(k) + psi(N) - < psi(n_x + 1) + psi(n_y + 1) >
//! ```

use rand_distr::{Distribution, StandardNormal};

use super::kdtree::KdTree;
use crate::error::{Error, Result};
use crate::replicate::{map_indexed, rng_for, Execution, Stream};

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPairSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl ContinuousPairSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Config(format!(
                "paired columns differ in length ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite value in continuous sample".into()));
        }
        Ok(ContinuousPairSample { x, y })
    }

    pub fn from_integers(x: &[u32], y: &[u32]) -> Result<Self> {
        Self::new(
            x.iter().map(|&v| v as f64).collect(),
            y.iter().map(|&v| v as f64).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsgParams {
    pub k: usize,
    pub jitter_scale: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for KsgParams {
    fn default() -> Self {
        KsgParams { k: DEFAULT_K, jitter_scale: DEFAULT_JITTER, seed: 0, execution: Execution::Parallel }
    }
}

/// `psi(1..=n)` for integer arguments via harmonic numbers.
pub(crate) fn digamma_table(n: usize) -> Vec<f64> {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut t = Vec::with_capacity(n + 1);
    t.push(f64::NAN);
    let mut h = 0.0;
    for m in 1..=n {
        t.push(h - EULER_GAMMA);
        h += 1.0 / m as f64;
    }
    t
}

fn standardize(v: &[f64], jitter: f64, seed: u64, column: u64) -> Result<Vec<f64>> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    let scale = if sd > 0.0 {
        sd
    } else if jitter > 0.0 {
        1.0
    } else {
        return Err(Error::InsufficientData(
            "zero-variance column with jitter disabled".into(),
        ));
    };
    let mut rng = rng_for(seed, Stream::KsgJitter, column);
    Ok(v.iter()
        .map(|a| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            (a - mean) / scale + jitter * noise
        })
        .collect())
}

/// Number of values in sorted `s` strictly within `eps` of `c`, minus one for
/// the point itself.
#[inline]
fn strict_count(sorted: &[f64], c: f64, eps: f64) -> usize {
    let lo = sorted.partition_point(|&v| c - v >= eps);
    let hi = sorted.partition_point(|&v| v - c < eps);
    hi.saturating_sub(lo).saturating_sub(1)
}

/// KSG estimate of I(X:Y) in bits.
pub fn mi_ksg(sample: &ContinuousPairSample, params: &KsgParams) -> Result<f64> {
    let n = sample.len();
    let k = params.k;
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "KSG needs more than k={k} points, got {n}"
        )));
    }
    if params.jitter_scale.is_nan() || params.jitter_scale < 0.0 {
        return Err(Error::Config("jitter_scale must be non-negative".into()));
    }
    let xs = standardize(&sample.x, params.jitter_scale, params.seed, 0)?;
    let ys = standardize(&sample.y, params.jitter_scale, params.seed, 1)?;
    let tree = KdTree::new(&xs, &ys);
    let mut sx = xs.clone();
    let mut sy = ys.clone();
    sx.sort_by(f64::total_cmp);
    sy.sort_by(f64::total_cmp);

    let counts = map_indexed(n, params.execution, |i| {
        let eps = tree.kth_distance(i, k);
        (strict_count(&sx, xs[i], eps), strict_count(&sy, ys[i], eps))
    });

    let psi = digamma_table(n);
    let marginal: f64 = counts.iter().map(|&(cx, cy)| psi[cx + 1] + psi[cy + 1]).sum::<f64>() / n as f64;
    let nats = psi[k] + psi[n] - marginal;
    Ok(nats / std::f64::consts::LN_2)
}
