//! Within-dialogue shuffling tests.
//!
//! Both tests permute respondent tuples `(len(R), f_1(R), ..)` among the
//! exchanges of one (originator, respondent, dialogue) group. Under the null
//! of no turn-by-turn coordination the shuffled table has the same
//! distribution as the observed one, so the observed statistic is compared
//! with its shuffled replicates by a one-sided add-one p-value.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::coordination::{
    osc_of, zero_band_of, MarkerColumns, StyleParams, DEFAULT_ALPHA, DEFAULT_REPLICATES,
};
use crate::corpus::ExchangeTable;
use crate::error::{Error, Result};
use crate::estimators::{mi_ksg, quantile_band, ContinuousPairSample, EstimateWithBand, KsgParams};
use crate::replicate::{derive_seed, map_indexed, rng_for, Execution, Stream};

/// The smallest replicate count accepted by the tests (p resolution 0.05).
pub const MIN_REPLICATES: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    FailToReject,
}

/// Reading of the stylistic test against the zero-information band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TscVerdict {
    /// OSC_0 itself lies inside the zero band.
    NoStylisticCoordination,
    /// Shuffled OSC_1 falls inside the zero band while OSC_0 lies above it:
    /// no contextual coordination, so the remnant is turn-by-turn.
    TurnByTurn,
    /// Shuffled OSC_1 stays above the zero band: contextual coordination is
    /// present and the turn-by-turn question is left open.
    ContextualPresent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub observed: f64,
    pub null_replicates: Vec<f64>,
    pub p_value: f64,
    /// `1 / (M + 1)`, the smallest attainable p-value.
    pub min_p_value: f64,
    pub null_band: EstimateWithBand,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_band: Option<EstimateWithBand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<TscVerdict>,
    pub decision: Decision,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl TestResult {
    fn from_replicates(observed: f64, null: Vec<f64>, alpha: f64, seed: u64) -> Result<Self> {
        let m = null.len();
        let exceed = null.iter().filter(|&&v| v >= observed).count();
        let p_value = (1 + exceed) as f64 / (m + 1) as f64;
        Ok(TestResult {
            observed,
            null_band: quantile_band(&null, alpha)?,
            null_replicates: null,
            p_value,
            min_p_value: 1.0 / (m + 1) as f64,
            zero_band: None,
            verdict: None,
            decision: if p_value <= alpha { Decision::Reject } else { Decision::FailToReject },
            alpha,
            replicates: m,
            seed,
        })
    }

    /// Multiply every value by `factor` (unit conversion).
    pub fn scaled(mut self, factor: f64) -> Self {
        self.observed *= factor;
        self.null_replicates.iter_mut().for_each(|v| *v *= factor);
        self.null_band = self.null_band.scaled(factor);
        self.zero_band = self.zero_band.map(|b| b.scaled(factor));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthTestParams {
    pub replicates: usize,
    pub alpha: f64,
    pub k: usize,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for LengthTestParams {
    fn default() -> Self {
        LengthTestParams {
            replicates: DEFAULT_REPLICATES,
            alpha: DEFAULT_ALPHA,
            k: 3,
            seed: 0,
            execution: Execution::Parallel,
        }
    }
}

/// Source-row map for one within-group shuffle: row `i` receives the
/// respondent tuple of row `source[i]`.
pub fn within_group_permutation(groups: &[Vec<usize>], n: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut rng = rng_for(seed, Stream::WithinDialogueShuffle, index);
    let mut source: Vec<usize> = (0..n).collect();
    let mut scratch = Vec::new();
    for g in groups {
        if g.len() < 2 {
            continue;
        }
        scratch.clear();
        scratch.extend_from_slice(g);
        scratch.shuffle(&mut rng);
        for (&dst, &src) in g.iter().zip(&scratch) {
            source[dst] = src;
        }
    }
    source
}

/// Permute respondent tuples within every (originator, respondent,
/// dialogue) group.
pub fn shuffle_within_dialogue(table: &ExchangeTable, seed: u64) -> ExchangeTable {
    let groups = table.pair_dialogue_groups();
    table.with_respondents_from(&within_group_permutation(&groups, table.len(), seed, 0))
}

fn check_replicates(m: usize, alpha: f64) -> Result<()> {
    if m < MIN_REPLICATES {
        return Err(Error::Config(format!(
            "at least {MIN_REPLICATES} permutations are required, got {m}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Turn-by-turn length coordination test: OLC on the observed table against
/// OLC on within-dialogue shuffles. KSG jitter is seeded identically for
/// every replicate.
pub fn tlc_test(table: &ExchangeTable, params: &LengthTestParams) -> Result<TestResult> {
    check_replicates(params.replicates, params.alpha)?;
    if table.len() <= params.k {
        return Err(Error::InsufficientData(format!(
            "{} exchanges is too few for KSG with k={}",
            table.len(),
            params.k
        )));
    }
    let ksg = KsgParams {
        k: params.k,
        seed: params.seed,
        execution: Execution::Serial,
        ..KsgParams::default()
    };
    let lo: Vec<f64> = table.len_o.iter().map(|&v| v as f64).collect();
    let lr: Vec<f64> = table.len_r.iter().map(|&v| v as f64).collect();
    let observed = mi_ksg(
        &ContinuousPairSample::new(lo.clone(), lr.clone())?,
        &KsgParams { execution: params.execution, ..ksg },
    )?;
    let groups = table.pair_dialogue_groups();
    let n = table.len();
    let null = map_indexed(params.replicates, params.execution, |i| {
        let src = within_group_permutation(&groups, n, params.seed, i as u64);
        let shuffled: Vec<f64> = src.iter().map(|&j| lr[j]).collect();
        mi_ksg(&ContinuousPairSample::new(lo.clone(), shuffled)?, &ksg)
    });
    let null = null.into_iter().collect::<Result<Vec<_>>>()?;
    TestResult::from_replicates(observed, null, params.alpha, params.seed)
}

/// Turn-by-turn stylistic coordination test for one marker.
///
/// `OSC_0` is the observed OSC, the null replicates are OSC on
/// within-dialogue shuffles (`OSC_1`), and the zero-information band is
/// reported alongside so the verdict can compare `OSC_1` against it.
pub fn tsc_test(table: &ExchangeTable, marker: usize, params: &StyleParams) -> Result<TestResult> {
    check_replicates(params.replicates, params.alpha)?;
    if table.len() < params.min_sample.max(1) {
        return Err(Error::InsufficientData(format!(
            "{} exchanges is below the minimum of {}; aggregate more dialogues or speakers",
            table.len(),
            params.min_sample
        )));
    }
    let cols = MarkerColumns::new(table, marker, params.conditioning)?;
    let observed = osc_of(&cols, params)?;
    let groups = table.pair_dialogue_groups();
    let n = table.len();
    let null = map_indexed(params.replicates, params.execution, |i| {
        let src = within_group_permutation(&groups, n, params.seed, i as u64);
        let seed = derive_seed(derive_seed(params.seed, Stream::WithinDialogueShuffle, i as u64), Stream::Bootstrap, 0);
        cols.with_respondents_from(&src).cmi(params.correction.with_seed(seed))
    });
    let null = null.into_iter().collect::<Result<Vec<_>>>()?;
    let zero = zero_band_of(&cols, params)?;
    let mut result = TestResult::from_replicates(observed, null, params.alpha, params.seed)?;
    result.verdict = Some(if observed <= zero.upper {
        TscVerdict::NoStylisticCoordination
    } else if result.null_band.point > zero.upper {
        TscVerdict::ContextualPresent
    } else {
        TscVerdict::TurnByTurn
    });
    result.zero_band = Some(zero);
    Ok(result)
}
