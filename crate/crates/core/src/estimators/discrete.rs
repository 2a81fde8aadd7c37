//! Plug-in and bootstrap-corrected entropy, mutual information and
//! conditional mutual information over small-alphabet columns.

use std::collections::HashMap;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::replicate::{rng_for, Stream};

/// A borrowed column of dense codes in `0..card`.
#[derive(Debug, Clone, Copy)]
pub struct Col<'a> {
    pub codes: &'a [u32],
    pub card: u32,
}

impl<'a> Col<'a> {
    pub fn new(codes: &'a [u32]) -> Self {
        let card = codes.iter().copied().max().map_or(1, |m| m + 1);
        Col { codes, card }
    }

    pub fn with_card(codes: &'a [u32], card: u32) -> Self {
        debug_assert!(codes.iter().all(|&c| c < card));
        Col { codes, card }
    }
}

fn sum_c_log_c<I: IntoIterator<Item = u32>>(counts: I) -> f64 {
    counts
        .into_iter()
        .filter(|&c| c > 1)
        .map(|c| {
            let c = c as f64;
            c * c.log2()
        })
        .sum()
}

/// Plug-in joint entropy in bits of the given columns (all of equal length).
pub fn joint_entropy(cols: &[Col<'_>]) -> f64 {
    let n = match cols.first() {
        Some(c) => c.codes.len(),
        None => return 0.0,
    };
    if n == 0 {
        return 0.0;
    }
    debug_assert!(cols.iter().all(|c| c.codes.len() == n));
    let product = cols
        .iter()
        .try_fold(1u64, |acc, c| acc.checked_mul(c.card.max(1) as u64));
    let s = match product {
        Some(p) if p <= (4 * n as u64).max(4096) => {
            let mut counts = vec![0u32; p as usize];
            for i in 0..n {
                counts[mixed_key(cols, i) as usize] += 1;
            }
            sum_c_log_c(counts)
        }
        Some(_) => {
            let mut keys: Vec<u64> = (0..n).map(|i| mixed_key(cols, i)).collect();
            keys.sort_unstable();
            sum_c_log_c(RunLengths::new(&keys))
        }
        None => {
            let mut map: HashMap<Vec<u32>, u32> = HashMap::new();
            for i in 0..n {
                *map.entry(cols.iter().map(|c| c.codes[i]).collect()).or_default() += 1;
            }
            let mut counts: Vec<u32> = map.into_values().collect();
            counts.sort_unstable();
            sum_c_log_c(counts)
        }
    };
    let n = n as f64;
    (n.log2() - s / n).max(0.0)
}

fn mixed_key(cols: &[Col<'_>], i: usize) -> u64 {
    cols.iter()
        .fold(0u64, |acc, c| acc * c.card.max(1) as u64 + c.codes[i] as u64)
}

struct RunLengths<'a> {
    keys: &'a [u64],
    pos: usize,
}

impl<'a> RunLengths<'a> {
    fn new(keys: &'a [u64]) -> Self {
        RunLengths { keys, pos: 0 }
    }
}

impl Iterator for RunLengths<'_> {
    type Item = u32;
    fn next(&mut self) -> Option<u32> {
        let start = self.pos;
        let first = *self.keys.get(start)?;
        let len = self.keys[start..].iter().take_while(|&&k| k == first).count();
        self.pos += len;
        Some(len as u32)
    }
}

/// Plug-in I(X:Y) in bits.
pub fn mi_cols(x: &[Col<'_>], y: &[Col<'_>]) -> f64 {
    let xy: Vec<Col<'_>> = x.iter().chain(y).copied().collect();
    joint_entropy(x) + joint_entropy(y) - joint_entropy(&xy)
}

/// Plug-in I(X:Y|Z) in bits.
pub fn cmi_cols(x: &[Col<'_>], y: &[Col<'_>], z: &[Col<'_>]) -> f64 {
    if z.is_empty() {
        return mi_cols(x, y);
    }
    let xz: Vec<Col<'_>> = x.iter().chain(z).copied().collect();
    let yz: Vec<Col<'_>> = y.iter().chain(z).copied().collect();
    let xyz: Vec<Col<'_>> = x.iter().chain(y).chain(z).copied().collect();
    joint_entropy(&xz) + joint_entropy(&yz) - joint_entropy(&xyz) - joint_entropy(z)
}

/// How finite-sample bias is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Correction {
    /// Raw plug-in estimate.
    #[default]
    None,
    /// Single-round bootstrap correction: `2·plug_in − mean(plug_in on
    /// resamples)`, each resample drawing N rows with replacement.
    Bootstrap { replicates: usize, seed: u64 },
}

impl Correction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Correction::Bootstrap { replicates, .. } if replicates < 2 => Err(Error::Config(
                format!("bootstrap needs at least 2 resamples, got {replicates}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Apply `correction` to a statistic computed from a set of columns.
///
/// `stat` receives gathered copies of `cols` for each resample.
pub fn corrected<F>(cols: &[Col<'_>], correction: Correction, stat: F) -> Result<f64>
where
    F: Fn(&[Col<'_>]) -> f64,
{
    correction.validate()?;
    let point = stat(cols);
    let Correction::Bootstrap { replicates, seed } = correction else {
        return Ok(point);
    };
    let n = cols.first().map_or(0, |c| c.codes.len());
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut buffers: Vec<Vec<u32>> = vec![vec![0; n]; cols.len()];
    let mut idx = vec![0usize; n];
    let mut total = 0.0;
    for b in 0..replicates {
        let mut rng = rng_for(seed, Stream::Bootstrap, b as u64);
        for slot in idx.iter_mut() {
            *slot = rng.random_range(0..n);
        }
        for (buf, col) in buffers.iter_mut().zip(cols) {
            for (dst, &i) in buf.iter_mut().zip(&idx) {
                *dst = col.codes[i];
            }
        }
        let gathered: Vec<Col<'_>> = buffers
            .iter()
            .zip(cols)
            .map(|(buf, c)| Col::with_card(buf, c.card))
            .collect();
        total += stat(&gathered);
    }
    Ok(2.0 * point - total / replicates as f64)
}

/// A table of named discrete columns with equal length.
#[derive(Debug, Clone, Default)]
pub struct DiscreteSample {
    names: Vec<String>,
    columns: Vec<Vec<u32>>,
    cards: Vec<u32>,
}

impl DiscreteSample {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a column of arbitrary ordered symbols; values are recoded densely.
    pub fn with_symbols<T: Ord + Clone>(mut self, name: &str, values: &[T]) -> Result<Self> {
        if let Some(first) = self.columns.first() {
            if first.len() != values.len() {
                return Err(Error::Config(format!(
                    "column `{name}` has {} rows, expected {}",
                    values.len(),
                    first.len()
                )));
            }
        }
        let mut uniq: Vec<T> = values.to_vec();
        uniq.sort();
        uniq.dedup();
        let codes: Vec<u32> = values
            .iter()
            .map(|v| uniq.binary_search(v).expect("present") as u32)
            .collect();
        self.names.push(name.to_string());
        self.cards.push(uniq.len().max(1) as u32);
        self.columns.push(codes);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn cols(&self, which: &[usize]) -> Result<Vec<Col<'_>>> {
        which
            .iter()
            .map(|&i| {
                self.columns
                    .get(i)
                    .map(|c| Col::with_card(c, self.cards[i]))
                    .ok_or_else(|| Error::Config(format!("no column {i}")))
            })
            .collect()
    }

    fn check(&self, sets: &[&[usize]]) -> Result<()> {
        if self.rows() == 0 {
            return Err(Error::EmptySample);
        }
        for (a, sa) in sets.iter().enumerate() {
            if sa.is_empty() && a < 2 {
                return Err(Error::Config("empty column selection".into()));
            }
            for sb in &sets[a + 1..] {
                if sa.iter().any(|c| sb.contains(c)) {
                    return Err(Error::Config("column sets overlap".into()));
                }
            }
        }
        Ok(())
    }

    pub fn entropy_plugin(&self, columns: &[usize]) -> Result<f64> {
        if self.rows() == 0 {
            return Err(Error::EmptySample);
        }
        Ok(joint_entropy(&self.cols(columns)?))
    }

    pub fn entropy_bootstrap(&self, columns: &[usize], replicates: usize, seed: u64) -> Result<f64> {
        if self.rows() == 0 {
            return Err(Error::EmptySample);
        }
        let cols = self.cols(columns)?;
        corrected(&cols, Correction::Bootstrap { replicates, seed }, joint_entropy)
    }

    pub fn mi(&self, x: &[usize], y: &[usize], correction: Correction) -> Result<f64> {
        self.check(&[x, y])?;
        let mut all = self.cols(x)?;
        all.extend(self.cols(y)?);
        let nx = x.len();
        corrected(&all, correction, |c| mi_cols(&c[..nx], &c[nx..]))
    }

    pub fn cmi(&self, x: &[usize], y: &[usize], z: &[usize], correction: Correction) -> Result<f64> {
        self.check(&[x, y, z])?;
        let mut all = self.cols(x)?;
        all.extend(self.cols(y)?);
        all.extend(self.cols(z)?);
        let (nx, ny) = (x.len(), y.len());
        corrected(&all, correction, |c| {
            cmi_cols(&c[..nx], &c[nx..nx + ny], &c[nx + ny..])
        })
    }

    /// Interaction information I(X:Y) − I(X:Y|Z), plug-in.
    pub fn mmi(&self, x: &[usize], y: &[usize], z: &[usize]) -> Result<f64> {
        Ok(self.mi(x, y, Correction::None)? - self.cmi(x, y, z, Correction::None)?)
    }
}
