//! Coordination quantities on an [`ExchangeTable`].
//!
//! * OSC, the stylistic CMI `I(F_O : F_R | L_R)` for one marker.
//! * The bias-matched MI band: the same CMI estimator with the conditioning
//!   column permuted globally, so MI and CMI carry comparable bias.
//! * The zero-information band: CMI with whole respondent rows
//!   `(f_m(R), len(R))` permuted globally.
//! * OLC, the KSG estimate of `I(L_O : L_R)`, and a direct TLC estimate for
//!   synthetic corpora with large per-dialogue samples.
//! * Pearson correlation between originator and respondent lengths.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::ExchangeTable;
use crate::error::{Error, Result};
use crate::estimators::{
    cmi_cols, joint_entropy, corrected, mi_cols, mi_ksg, quantile_band, Col, ContinuousPairSample, Correction,
    EstimateWithBand, KsgParams, Units, DEFAULT_BOOTSTRAP,
};
use crate::replicate::{derive_seed, map_indexed, rng_for, Execution, Stream};

pub const DEFAULT_REPLICATES: usize = 400;
pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_MIN_SAMPLE: usize = 50;
/// Exact length strata are used only if each holds at least this many rows.
pub const MIN_STRATUM_ROWS: usize = 5;
pub const AUTO_BINS: usize = 10;

/// How the respondent length is turned into a conditioning variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthConditioning {
    /// Exact values when every stratum has at least [`MIN_STRATUM_ROWS`]
    /// rows, otherwise [`AUTO_BINS`] quantile bins.
    #[default]
    Auto,
    Exact,
    QuantileBins(usize),
}

impl std::str::FromStr for LengthConditioning {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "exact" => Ok(Self::Exact),
            _ => {
                let n = s
                    .strip_prefix("bins:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| format!("expected auto|exact|bins:N, got `{s}`"))?;
                if n < 2 {
                    return Err(format!("bin count must be at least 2, got {n}"));
                }
                Ok(Self::QuantileBins(n))
            }
        }
    }
}

/// The conditioning actually applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ResolvedConditioning {
    Exact { strata: u32 },
    QuantileBins { requested: usize, effective: u32 },
}

/// Quantile bin codes for `values`. Edges sit at the order statistics
/// `sorted[j·N/bins]` for `j = 1..bins`; a value's bin is the number of
/// distinct edges not exceeding it, so equal values always share a bin and
/// heavy ties can leave fewer than `bins` bins.
pub fn quantile_bin_codes<T: PartialOrd + Copy>(values: &[T], bins: usize) -> (Vec<u32>, u32) {
    let n = values.len();
    if n == 0 {
        return (Vec::new(), 1);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("comparable values"));
    let mut edges: Vec<T> = Vec::new();
    for j in 1..bins {
        let e = sorted[(j * n) / bins];
        if edges.last().is_none_or(|last| *last < e) && sorted[0] < e {
            edges.push(e);
        }
    }
    let codes = values
        .iter()
        .map(|v| edges.partition_point(|e| e <= v) as u32)
        .collect();
    (codes, edges.len() as u32 + 1)
}

fn dense_codes(values: &[u32]) -> (Vec<u32>, u32) {
    let mut uniq = values.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let codes = values.iter().map(|v| uniq.binary_search(v).unwrap() as u32).collect();
    (codes, uniq.len().max(1) as u32)
}

impl LengthConditioning {
    /// Codes for a length column plus the conditioning that produced them.
    pub fn resolve(&self, lengths: &[u32]) -> Result<(Vec<u32>, u32, ResolvedConditioning)> {
        match *self {
            LengthConditioning::Exact => {
                let (codes, card) = dense_codes(lengths);
                Ok((codes, card, ResolvedConditioning::Exact { strata: card }))
            }
            LengthConditioning::QuantileBins(bins) => {
                if bins < 2 {
                    return Err(Error::Config(format!("bin count must be at least 2, got {bins}")));
                }
                let (codes, card) = quantile_bin_codes(lengths, bins);
                Ok((codes, card, ResolvedConditioning::QuantileBins { requested: bins, effective: card }))
            }
            LengthConditioning::Auto => {
                let (codes, card) = dense_codes(lengths);
                let mut counts = vec![0usize; card as usize];
                for &c in &codes {
                    counts[c as usize] += 1;
                }
                if counts.iter().all(|&c| c >= MIN_STRATUM_ROWS) {
                    Ok((codes, card, ResolvedConditioning::Exact { strata: card }))
                } else {
                    LengthConditioning::QuantileBins(AUTO_BINS).resolve(lengths)
                }
            }
        }
    }
}

/// Bias handling for discrete estimates; bootstrap seeds are derived
/// from the master seed of the calling operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasCorrection {
    PlugIn,
    Bootstrap { resamples: usize },
}

impl Default for BiasCorrection {
    fn default() -> Self {
        BiasCorrection::Bootstrap { resamples: DEFAULT_BOOTSTRAP }
    }
}

impl BiasCorrection {
    pub fn with_seed(self, seed: u64) -> Correction {
        match self {
            BiasCorrection::PlugIn => Correction::None,
            BiasCorrection::Bootstrap { resamples } => Correction::Bootstrap { replicates: resamples, seed },
        }
    }
}

/// Parameters shared by the stylistic statistics and their bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleParams {
    pub conditioning: LengthConditioning,
    pub correction: BiasCorrection,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub min_sample: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for StyleParams {
    fn default() -> Self {
        StyleParams {
            conditioning: LengthConditioning::Auto,
            correction: BiasCorrection::default(),
            replicates: DEFAULT_REPLICATES,
            alpha: DEFAULT_ALPHA,
            seed: 0,
            min_sample: DEFAULT_MIN_SAMPLE,
            execution: Execution::Parallel,
        }
    }
}

/// One marker's columns ready for estimation.
#[derive(Debug, Clone)]
pub struct MarkerColumns {
    pub originator: Vec<u32>,
    pub respondent: Vec<u32>,
    pub condition: Vec<u32>,
    pub condition_card: u32,
    pub resolved: ResolvedConditioning,
}

impl MarkerColumns {
    pub fn new(table: &ExchangeTable, marker: usize, cond: LengthConditioning) -> Result<Self> {
        if marker >= table.markers().len() {
            return Err(Error::Config(format!("marker index {marker} out of range")));
        }
        let (condition, condition_card, resolved) = cond.resolve(&table.len_r)?;
        Ok(MarkerColumns {
            originator: table.bits_o[marker].iter().map(|&b| b as u32).collect(),
            respondent: table.bits_r[marker].iter().map(|&b| b as u32).collect(),
            condition,
            condition_card,
            resolved,
        })
    }

    pub fn len(&self) -> usize {
        self.originator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.originator.is_empty()
    }

    /// `I(F_O : F_R | Z)` on these columns.
    pub fn cmi(&self, correction: Correction) -> Result<f64> {
        cmi_with(&self.originator, &self.respondent, &self.condition, self.condition_card, correction)
    }

    /// Copy in which row `i` takes respondent bit and condition code from
    /// row `source[i]`.
    pub fn with_respondents_from(&self, source: &[usize]) -> MarkerColumns {
        MarkerColumns {
            originator: self.originator.clone(),
            respondent: source.iter().map(|&j| self.respondent[j]).collect(),
            condition: source.iter().map(|&j| self.condition[j]).collect(),
            condition_card: self.condition_card,
            resolved: self.resolved,
        }
    }
}

pub(crate) fn cmi_with(x: &[u32], y: &[u32], z: &[u32], zcard: u32, correction: Correction) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    let cols = [Col::with_card(x, 2), Col::with_card(y, 2), Col::with_card(z, zcard)];
    corrected(&cols, correction, |c| cmi_cols(&c[0..1], &c[1..2], &c[2..3]))
}

fn check_sample(table: &ExchangeTable, params: &StyleParams) -> Result<()> {
    if table.len() < params.min_sample.max(1) {
        return Err(Error::InsufficientData(format!(
            "{} exchanges is below the minimum of {}; aggregate more dialogues or speakers \
             (for example by role) before estimating",
            table.len(),
            params.min_sample
        )));
    }
    Ok(())
}

fn check_band(params: &StyleParams) -> Result<()> {
    if params.replicates < 2 {
        return Err(Error::Config(format!(
            "a band needs at least 2 replicates, got {}",
            params.replicates
        )));
    }
    if !(params.alpha > 0.0 && params.alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", params.alpha)));
    }
    Ok(())
}

fn random_permutation(n: usize, master: u64, stream: Stream, index: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng_for(master, stream, index));
    p
}

/// Bootstrap seed for replicate `i` of a band drawn from `stream`.
fn replicate_correction_seed(master: u64, stream: Stream, i: usize) -> u64 {
    derive_seed(derive_seed(master, stream, i as u64), Stream::Bootstrap, 0)
}

/// OSC for one marker.
pub fn stylistic_cmi(table: &ExchangeTable, marker: usize, params: &StyleParams) -> Result<f64> {
    check_sample(table, params)?;
    let cols = MarkerColumns::new(table, marker, params.conditioning)?;
    osc_of(&cols, params)
}

pub(crate) fn osc_of(cols: &MarkerColumns, params: &StyleParams) -> Result<f64> {
    cols.cmi(params.correction.with_seed(derive_seed(params.seed, Stream::Bootstrap, 0)))
}

/// MI band: the CMI estimator with the conditioning column permuted.
pub fn bias_matched_mi_band(table: &ExchangeTable, marker: usize, params: &StyleParams) -> Result<EstimateWithBand> {
    check_sample(table, params)?;
    check_band(params)?;
    let cols = MarkerColumns::new(table, marker, params.conditioning)?;
    mi_band_of(&cols, params)
}

pub(crate) fn mi_band_of(cols: &MarkerColumns, params: &StyleParams) -> Result<EstimateWithBand> {
    let n = cols.len();
    let values = map_indexed(params.replicates, params.execution, |i| {
        let perm = random_permutation(n, params.seed, Stream::ConditionPermutation, i as u64);
        let z: Vec<u32> = perm.iter().map(|&j| cols.condition[j]).collect();
        let seed = replicate_correction_seed(params.seed, Stream::ConditionPermutation, i);
        cmi_with(&cols.originator, &cols.respondent, &z, cols.condition_card, params.correction.with_seed(seed))
    });
    quantile_band(&values.into_iter().collect::<Result<Vec<_>>>()?, params.alpha)
}

/// Null band of OSC with whole respondent rows permuted across the table.
pub fn zero_information_band(table: &ExchangeTable, marker: usize, params: &StyleParams) -> Result<EstimateWithBand> {
    check_sample(table, params)?;
    check_band(params)?;
    let cols = MarkerColumns::new(table, marker, params.conditioning)?;
    zero_band_of(&cols, params)
}

pub(crate) fn zero_band_of(cols: &MarkerColumns, params: &StyleParams) -> Result<EstimateWithBand> {
    let n = cols.len();
    let values = map_indexed(params.replicates, params.execution, |i| {
        let perm = random_permutation(n, params.seed, Stream::RespondentPermutation, i as u64);
        let seed = replicate_correction_seed(params.seed, Stream::RespondentPermutation, i);
        cols.with_respondents_from(&perm).cmi(params.correction.with_seed(seed))
    });
    quantile_band(&values.into_iter().collect::<Result<Vec<_>>>()?, params.alpha)
}

/// Sampling band of OSC from row resampling with replacement.
pub(crate) fn osc_band_of(cols: &MarkerColumns, params: &StyleParams) -> Result<EstimateWithBand> {
    use rand::Rng as _;
    let n = cols.len();
    let values = map_indexed(params.replicates, params.execution, |i| {
        let mut rng = rng_for(params.seed, Stream::RowResample, i as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let x: Vec<u32> = idx.iter().map(|&j| cols.originator[j]).collect();
        let y: Vec<u32> = idx.iter().map(|&j| cols.respondent[j]).collect();
        let z: Vec<u32> = idx.iter().map(|&j| cols.condition[j]).collect();
        let seed = replicate_correction_seed(params.seed, Stream::RowResample, i);
        cmi_with(&x, &y, &z, cols.condition_card, params.correction.with_seed(seed))
    });
    quantile_band(&values.into_iter().collect::<Result<Vec<_>>>()?, params.alpha)
}

/// Overall length coordination `I(L_O : L_R)` by KSG, in bits.
pub fn olc(table: &ExchangeTable, k: usize, seed: u64) -> Result<f64> {
    olc_with(table, &KsgParams { k, seed, ..KsgParams::default() })
}

pub fn olc_with(table: &ExchangeTable, params: &KsgParams) -> Result<f64> {
    let sample = ContinuousPairSample::from_integers(&table.len_o, &table.len_r)?;
    mi_ksg(&sample, params)
}

/// Sample Pearson correlation of originator and respondent lengths.
pub fn length_pearson(table: &ExchangeTable) -> Result<f64> {
    let x: Vec<f64> = table.len_o.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = table.len_r.iter().map(|&v| v as f64).collect();
    pearson(&x, &y)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InsufficientData("Pearson correlation needs at least 2 pairs".into()));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InsufficientData("zero variance in a length column".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// How the direct TLC estimate is formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TlcMethod {
    /// Plug-in `I(B_O : B_R | C)` on quantile-binned lengths.
    Binned { bins: usize },
    /// `sum_c p(c) I_ksg(L_O : L_R | C = c)`, the dialogue-weighted KSG.
    Ksg { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlcOracleParams {
    pub method: TlcMethod,
    pub min_per_dialogue: usize,
    pub seed: u64,
}

impl Default for TlcOracleParams {
    fn default() -> Self {
        TlcOracleParams { method: TlcMethod::Ksg { k: 3 }, min_per_dialogue: 100, seed: 0 }
    }
}

/// Binned plug-in quantities of the length decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthDecomposition {
    pub olc: f64,
    pub tlc: f64,
    pub interaction: f64,
}

/// `OLC`, `TLC` and the interaction information `I(L_O:L_R:C)` on
/// quantile-binned lengths, all plug-in.
pub fn binned_length_decomposition<T: PartialOrd + Copy>(
    len_o: &[T],
    len_r: &[T],
    dialogue: &[u32],
    bins: usize,
) -> Result<LengthDecomposition> {
    if len_o.is_empty() {
        return Err(Error::EmptySample);
    }
    let (bo, co) = quantile_bin_codes(len_o, bins);
    let (br, cr) = quantile_bin_codes(len_r, bins);
    let (dc, dcard) = dense_codes(dialogue);
    let x = [Col::with_card(&bo, co)];
    let y = [Col::with_card(&br, cr)];
    let z = [Col::with_card(&dc, dcard)];
    let olc = mi_cols(&x, &y);
    let tlc = cmi_cols(&x, &y, &z);
    let h = |c: &[Col<'_>]| joint_entropy(c);
    let interaction = h(&x) + h(&y) + h(&z) - h(&[x[0], y[0]]) - h(&[x[0], z[0]]) - h(&[y[0], z[0]])
        + h(&[x[0], y[0], z[0]]);
    Ok(LengthDecomposition { olc, tlc, interaction })
}

/// Direct turn-by-turn length coordination `I(L_O : L_R | C)`, with the
/// dialogue as C. Only meaningful when every dialogue holds many exchanges,
/// as in synthetic corpora; real corpora should use the permutation test.
pub fn tlc_oracle_lengths(len_o: &[f64], len_r: &[f64], dialogue: &[u32], params: &TlcOracleParams) -> Result<f64> {
    if len_o.len() != len_r.len() || len_o.len() != dialogue.len() {
        return Err(Error::Config("length and dialogue columns differ in size".into()));
    }
    let (dc, dcard) = dense_codes(dialogue);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); dcard as usize];
    for (i, &d) in dc.iter().enumerate() {
        groups[d as usize].push(i);
    }
    if let Some(small) = groups.iter().map(Vec::len).filter(|&n| n < params.min_per_dialogue).min() {
        return Err(Error::InsufficientData(format!(
            "a dialogue has only {small} exchanges (minimum {}); direct TLC needs large \
             per-dialogue samples, use the turn-by-turn length coordination permutation test",
            params.min_per_dialogue
        )));
    }
    match params.method {
        TlcMethod::Binned { bins } => Ok(binned_length_decomposition(len_o, len_r, dialogue, bins)?.tlc),
        TlcMethod::Ksg { k } => {
            let n = len_o.len() as f64;
            let mut total = 0.0;
            for (g, rows) in groups.iter().enumerate() {
                let s = ContinuousPairSample::new(
                    rows.iter().map(|&i| len_o[i]).collect(),
                    rows.iter().map(|&i| len_r[i]).collect(),
                )?;
                let p = KsgParams { k, seed: derive_seed(params.seed, Stream::KsgJitter, g as u64), ..KsgParams::default() };
                total += rows.len() as f64 / n * mi_ksg(&s, &p)?;
            }
            Ok(total)
        }
    }
}

pub fn tlc_oracle(table: &ExchangeTable, params: &TlcOracleParams) -> Result<f64> {
    let lo: Vec<f64> = table.len_o.iter().map(|&v| v as f64).collect();
    let lr: Vec<f64> = table.len_r.iter().map(|&v| v as f64).collect();
    tlc_oracle_lengths(&lo, &lr, &table.dialogue, params)
}

/// Per-marker entry of a [`CoordinationReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerCoordination {
    pub marker: String,
    pub mi_band: EstimateWithBand,
    pub osc: f64,
    pub osc_band: EstimateWithBand,
    pub zero_band: EstimateWithBand,
    /// `mi_band.point / osc`, absent when OSC is not positive.
    pub reduction_factor: Option<f64>,
    pub mi_above_zero_band: bool,
    pub osc_within_zero_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub originator: String,
    pub respondent: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinationReport {
    pub direction: Direction,
    pub units: Units,
    pub exchanges: usize,
    pub dialogues: usize,
    pub conditioning: ResolvedConditioning,
    pub olc: Option<f64>,
    pub length_pearson: Option<f64>,
    pub markers: Vec<MarkerCoordination>,
    pub parameters: StyleParams,
    pub k: usize,
}

/// Full stylistic analysis of the table's markers for one direction.
pub fn style_report(
    table: &ExchangeTable,
    direction: Direction,
    params: &StyleParams,
    k: usize,
    units: Units,
) -> Result<CoordinationReport> {
    check_sample(table, params)?;
    check_band(params)?;
    if table.markers().is_empty() {
        return Err(Error::Config("no markers selected".into()));
    }
    let f = units.factor();
    let mut markers = Vec::with_capacity(table.markers().len());
    let mut resolved = None;
    for (m, name) in table.markers().iter().enumerate() {
        let cols = MarkerColumns::new(table, m, params.conditioning)?;
        resolved = Some(cols.resolved);
        let osc = osc_of(&cols, params)?;
        let mi_band = mi_band_of(&cols, params)?;
        let zero_band = zero_band_of(&cols, params)?;
        let osc_band = osc_band_of(&cols, params)?;
        markers.push(MarkerCoordination {
            marker: name.clone(),
            reduction_factor: (osc > 0.0).then(|| mi_band.point / osc),
            mi_above_zero_band: mi_band.lower > zero_band.upper,
            osc_within_zero_band: zero_band.contains(osc),
            mi_band: mi_band.scaled(f),
            osc: osc * f,
            osc_band: osc_band.scaled(f),
            zero_band: zero_band.scaled(f),
        });
    }
    Ok(CoordinationReport {
        direction,
        units,
        exchanges: table.len(),
        dialogues: table.dialogue_count(),
        conditioning: resolved.expect("at least one marker"),
        olc: olc(table, k, params.seed).ok().map(|v| v * f),
        length_pearson: length_pearson(table).ok(),
        markers,
        parameters: *params,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ExchangeRow;
    use rand::{Rng, SeedableRng};

    fn table_from(rows: &[(u32, u32, u8, u8)], dialogue_of: impl Fn(usize) -> String) -> ExchangeTable {
        let mut t = ExchangeTable::new(&["m"]);
        for (i, &(lo, lr, fo, fr)) in rows.iter().enumerate() {
            t.push(&ExchangeRow {
                dialogue: dialogue_of(i),
                originator: "o".into(),
                respondent: "r".into(),
                len_o: lo,
                len_r: lr,
                bits_o: vec![fo],
                bits_r: vec![fr],
            });
        }
        t
    }

    fn plug_in() -> StyleParams {
        StyleParams { correction: BiasCorrection::PlugIn, replicates: 100, ..Default::default() }
    }

    /// Lengths coupled, each bit a threshold of its own speaker's length.
    fn length_confounded(n: usize, seed: u64) -> ExchangeTable {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<_> = (0..n)
            .map(|_| {
                let lo: u32 = rng.random_range(1..=20);
                let lr = (lo as i64 + rng.random_range(-2..=2)).max(1) as u32;
                (lo, lr, (lo > 10) as u8, (lr > 10) as u8)
            })
            .collect();
        table_from(&rows, |i| format!("d{}", i % 10))
    }

    #[test]
    fn osc_removes_pure_length_confound() {
        let t = length_confounded(2000, 1);
        let p = StyleParams { conditioning: LengthConditioning::Exact, ..plug_in() };
        let osc = stylistic_cmi(&t, 0, &p).unwrap();
        let mi = mi_cols(
            &[Col::new(&t.bits_o[0].iter().map(|&b| b as u32).collect::<Vec<_>>())],
            &[Col::new(&t.bits_r[0].iter().map(|&b| b as u32).collect::<Vec<_>>())],
        );
        assert!(mi > 0.3, "{mi}");
        assert!(osc < 0.01, "{osc}");
    }

    #[test]
    fn copied_fair_bit_gives_one_bit() {
        let rows: Vec<_> = (0..200).map(|i| (5 + i % 7, 3 + i % 5, (i % 2) as u8, (i % 2) as u8)).collect();
        let t = table_from(&rows, |_| "d".into());
        let osc = stylistic_cmi(&t, 0, &plug_in()).unwrap();
        assert!((osc - 1.0).abs() < 1e-12, "{osc}");
    }

    #[test]
    fn constant_length_osc_equals_mi() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<_> = (0..300)
            .map(|_| {
                let a = rng.random_bool(0.5) as u8;
                let b = if rng.random_bool(0.7) { a } else { 1 - a };
                (rng.random_range(1..9), 4, a, b)
            })
            .collect();
        let t = table_from(&rows, |_| "d".into());
        let x: Vec<u32> = t.bits_o[0].iter().map(|&b| b as u32).collect();
        let y: Vec<u32> = t.bits_r[0].iter().map(|&b| b as u32).collect();
        let mi = mi_cols(&[Col::new(&x)], &[Col::new(&y)]);
        assert_eq!(stylistic_cmi(&t, 0, &plug_in()).unwrap(), mi);
    }

    #[test]
    fn small_sample_is_infeasible() {
        let t = table_from(&[(1, 1, 0, 1); 10], |_| "d".into());
        let err = stylistic_cmi(&t, 0, &plug_in()).unwrap_err();
        assert!(err.is_infeasible());
        assert!(err.to_string().contains("aggregate"));
    }

    #[test]
    fn mi_band_tracks_plug_in_mi() {
        for seed in 0..3 {
            let t = length_confounded(1500, 10 + seed);
            let p = StyleParams { seed, ..plug_in() };
            let band = bias_matched_mi_band(&t, 0, &p).unwrap();
            let x: Vec<u32> = t.bits_o[0].iter().map(|&b| b as u32).collect();
            let y: Vec<u32> = t.bits_r[0].iter().map(|&b| b as u32).collect();
            let mi = mi_cols(&[Col::new(&x)], &[Col::new(&y)]);
            // Permuted conditioning adds positive bias of order strata/(2N ln 2).
            assert!(band.point >= mi - 1e-9 && band.point - mi < 0.02, "{} vs {mi}", band.point);
        }
    }

    #[test]
    fn bands_for_independent_and_copied_bits() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<_> = (0..800)
            .map(|_| (rng.random_range(1..30), rng.random_range(1..30), rng.random_bool(0.5) as u8, rng.random_bool(0.5) as u8))
            .collect();
        let t = table_from(&rows, |i| format!("d{}", i % 8));
        let p = StyleParams::default();
        let mi = bias_matched_mi_band(&t, 0, &p).unwrap();
        assert!(mi.lower < 0.01, "{mi:?}");
        let zero = zero_information_band(&t, 0, &p).unwrap();
        assert!(zero.contains(stylistic_cmi(&t, 0, &p).unwrap()));

        let rows: Vec<_> = rows.iter().map(|&(a, b, f, _)| (a, b, f, f)).collect();
        let t = table_from(&rows, |i| format!("d{}", i % 8));
        let mi = bias_matched_mi_band(&t, 0, &p).unwrap();
        assert!(mi.lower > 0.9 && mi.upper < 1.1, "{mi:?}");
    }

    #[test]
    fn two_row_zero_band_is_degenerate() {
        let t = table_from(&[(1, 2, 0, 1), (3, 4, 1, 0)], |_| "d".into());
        let p = StyleParams { min_sample: 1, correction: BiasCorrection::PlugIn, replicates: 50, ..Default::default() };
        let band = zero_information_band(&t, 0, &p).unwrap();
        // Either permutation of two rows yields a fully determined table.
        assert!(band.lower.abs() < 1e-12 && band.upper.abs() < 1e-12, "{band:?}");
    }

    #[test]
    fn band_params_validated() {
        let t = length_confounded(200, 3);
        let p = StyleParams { replicates: 1, ..plug_in() };
        assert!(bias_matched_mi_band(&t, 0, &p).is_err());
        let p = StyleParams { alpha: 0.0, ..plug_in() };
        assert!(zero_information_band(&t, 0, &p).is_err());
    }

    #[test]
    fn bands_schedule_independent() {
        let t = length_confounded(600, 4);
        let par = StyleParams { replicates: 40, ..StyleParams::default() };
        let ser = StyleParams { execution: Execution::Serial, ..par };
        assert_eq!(bias_matched_mi_band(&t, 0, &par).unwrap(), bias_matched_mi_band(&t, 0, &ser).unwrap());
        assert_eq!(zero_information_band(&t, 0, &par).unwrap(), zero_information_band(&t, 0, &ser).unwrap());
    }

    #[test]
    fn conditioning_resolution() {
        let many: Vec<u32> = (0..100).map(|i| i % 4).collect();
        let (_, card, r) = LengthConditioning::Auto.resolve(&many).unwrap();
        assert_eq!((card, r), (4, ResolvedConditioning::Exact { strata: 4 }));
        let sparse: Vec<u32> = (0..100).collect();
        let (codes, card, r) = LengthConditioning::Auto.resolve(&sparse).unwrap();
        assert_eq!(r, ResolvedConditioning::QuantileBins { requested: 10, effective: 10 });
        assert_eq!(card, 10);
        assert_eq!(codes[0], 0);
        assert_eq!(codes[99], 9);
        assert!(LengthConditioning::QuantileBins(1).resolve(&sparse).is_err());
        assert_eq!("bins:4".parse::<LengthConditioning>().unwrap(), LengthConditioning::QuantileBins(4));
        assert!("bins:1".parse::<LengthConditioning>().is_err());
    }

    #[test]
    fn ties_share_a_bin() {
        let v = [1u32, 1, 1, 1, 1, 1, 1, 2, 3, 4];
        let (codes, card) = quantile_bin_codes(&v, 5);
        // Edges at sorted[2], [4], [6] are all 1 and collapse; only 3 survives.
        assert_eq!(codes, [0, 0, 0, 0, 0, 0, 0, 0, 1, 1]);
        assert_eq!(card, 2);
    }

    #[test]
    fn pearson_cases() {
        let rows: Vec<_> = (0..50).map(|i| (i, i, 0, 0)).collect();
        assert!((length_pearson(&table_from(&rows, |_| "d".into())).unwrap() - 1.0).abs() < 1e-12);
        let rows: Vec<_> = (0..50).map(|i| (i, 100 - i, 0, 0)).collect();
        assert!((length_pearson(&table_from(&rows, |_| "d".into())).unwrap() + 1.0).abs() < 1e-12);
        let rows: Vec<_> = (0..50).map(|i| (i, 7, 0, 0)).collect();
        assert!(length_pearson(&table_from(&rows, |_| "d".into())).is_err());

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<_> = (0..10_000).map(|_| (rng.random_range(0..60), rng.random_range(0..60), 0, 0)).collect();
        // sd of r under independence is 1/sqrt(N) = 0.01.
        assert!(length_pearson(&table_from(&rows, |_| "d".into())).unwrap().abs() < 0.05);
    }

    #[test]
    fn olc_extremes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<_> = (0..3000).map(|_| (rng.random_range(1..200), rng.random_range(1..200), 0, 0)).collect();
        let t = table_from(&rows, |_| "d".into());
        assert!(olc(&t, 3, 1).unwrap().abs() < 0.03);
        let rows: Vec<_> = (0..3000)
            .map(|_| {
                let l: u32 = rng.random_range(1..500);
                (l, l + rng.random_range(0..3), 0, 0)
            })
            .collect();
        assert!(olc(&table_from(&rows, |_| "d".into()), 3, 1).unwrap() > 3.0);
    }

    #[test]
    fn tlc_oracle_guards_and_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let lo: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
        let lr: Vec<f64> = lo.iter().map(|v| v + rng.random::<f64>()).collect();
        let one = vec![0u32; 400];
        let p = TlcOracleParams { method: TlcMethod::Binned { bins: 5 }, ..Default::default() };
        let tlc = tlc_oracle_lengths(&lo, &lr, &one, &p).unwrap();
        let d = binned_length_decomposition(&lo, &lr, &one, 5).unwrap();
        assert_eq!(tlc, d.olc);
        let many: Vec<u32> = (0..400).map(|i| i % 40).collect();
        assert!(tlc_oracle_lengths(&lo, &lr, &many, &p).unwrap_err().is_infeasible());
    }
}
