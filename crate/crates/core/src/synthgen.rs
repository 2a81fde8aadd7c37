//! Synthetic corpora from the length and style networks, with analytic
//! ground truth for the Gaussian length layer.
//!
//! Per dialogue a latent context `C ~ N(0, s)` is drawn once. Every exchange
//! then draws
//!
//! ```text
//! L_O = a C + e_O                 e_O ~ N(0, v_O)
//! L_R = alpha C + beta L_O + e_R  e_R ~ N(0, v_R)
//! F_O ~ Bernoulli(sigmoid(w_L l_O + w_C C + b))
//! F_R ~ Bernoulli(sigmoid(w_L l_R + w_C C + gamma F_O + b))
//! ```
//!
//! In continuous mode `l = L`. In integerized mode the word count is
//! `round(softplus(offset + scale L))` and `l = (count - offset) / scale`.
//! A count smaller than the number of markers present is raised to that
//! number so every present marker gets a word.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dialogue, ExchangeTable, Utterance};
use crate::error::{Error, Result};
use crate::estimators::gaussian_mi_bits;
use crate::markers::MarkerDictionary;
use crate::replicate::{map_indexed, rng_for, Execution, Stream};

const FILLERS: &[&str] = &[
    "blick", "dax", "fep", "glorp", "kiki", "lum", "mib", "norf", "plind", "quor", "rask", "snib",
    "tove", "vorn", "wug", "zib",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExchangeCount {
    Fixed(usize),
    /// Uniform on `min..=max`.
    Uniform { min: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LengthMode {
    Continuous,
    #[default]
    Integerized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthModel {
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub noise_o: f64,
    pub noise_r: f64,
    #[serde(default)]
    pub mode: LengthMode,
    #[serde(default = "default_offset")]
    pub offset: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_offset() -> f64 {
    30.0
}

fn default_scale() -> f64 {
    8.0
}

impl Default for LengthModel {
    fn default() -> Self {
        LengthModel {
            a: 1.0,
            alpha: 1.0,
            beta: 0.0,
            noise_o: 1.0,
            noise_r: 1.0,
            mode: LengthMode::Integerized,
            offset: default_offset(),
            scale: default_scale(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleMarker {
    pub name: String,
    #[serde(default)]
    pub w_length: f64,
    #[serde(default)]
    pub w_context: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub bias: f64,
}

impl StyleMarker {
    pub fn new(name: &str) -> Self {
        StyleMarker { name: name.into(), w_length: 0.0, w_context: 0.0, gamma: 0.0, bias: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub dialogues: usize,
    pub exchanges: ExchangeCount,
    pub context_variance: f64,
    #[serde(default)]
    pub length: LengthModel,
    #[serde(default)]
    pub markers: Vec<StyleMarker>,
    #[serde(default = "default_originator")]
    pub originator_role: String,
    #[serde(default = "default_respondent")]
    pub respondent_role: String,
    #[serde(default)]
    pub seed: u64,
}

fn default_originator() -> String {
    "originator".into()
}

fn default_respondent() -> String {
    "respondent".into()
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            dialogues: 30,
            exchanges: ExchangeCount::Fixed(30),
            context_variance: 1.0,
            length: LengthModel::default(),
            markers: Vec::new(),
            originator_role: default_originator(),
            respondent_role: default_respondent(),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dialogues == 0 {
            return bad("dialogues must be at least 1".into());
        }
        match self.exchanges {
            ExchangeCount::Fixed(0) => return bad("exchanges must be at least 1".into()),
            ExchangeCount::Uniform { min, max } if min == 0 || max < min => {
                return bad(format!("exchange range {min}..={max} must satisfy 1 <= min <= max"))
            }
            _ => {}
        }
        let l = &self.length;
        for (name, v) in [
            ("context_variance", self.context_variance),
            ("length.noise_o", l.noise_o),
            ("length.noise_r", l.noise_r),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a positive variance, got {v}"));
            }
        }
        for (name, v) in [("length.a", l.a), ("length.alpha", l.alpha), ("length.beta", l.beta), ("length.offset", l.offset)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if !(l.scale > 0.0 && l.scale.is_finite()) {
            return bad(format!("length.scale must be positive, got {}", l.scale));
        }
        for (i, m) in self.markers.iter().enumerate() {
            if ![m.w_length, m.w_context, m.gamma, m.bias].iter().all(|v| v.is_finite()) {
                return bad(format!("marker `{}` has a non-finite weight", m.name));
            }
            if self.markers[..i].iter().any(|p| p.name == m.name) {
                return bad(format!("marker `{}` listed twice", m.name));
            }
        }
        if self.originator_role == self.respondent_role {
            return bad("originator and respondent roles must differ".into());
        }
        Ok(())
    }

    pub fn marker_names(&self) -> Vec<&str> {
        self.markers.iter().map(|m| m.name.as_str()).collect()
    }
}

/// One drawn exchange. In continuous mode `words_*` are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticExchange {
    pub len_o: f64,
    pub len_r: f64,
    pub words_o: u32,
    pub words_r: u32,
    pub bits_o: Vec<u8>,
    pub bits_r: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDialogue {
    pub id: String,
    pub context: f64,
    pub exchanges: Vec<SyntheticExchange>,
}

/// Everything drawn for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDraw {
    pub config: GeneratorConfig,
    pub dialogues: Vec<SyntheticDialogue>,
}

/// True per-dialogue context, kept apart from the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextValue {
    pub dialogue: String,
    pub context: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn dialogue_id(index: usize) -> String {
    format!("syn{index:05}")
}

fn normal(rng: &mut crate::replicate::Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn draw_dialogue(cfg: &GeneratorConfig, index: usize) -> SyntheticDialogue {
    let mut rng = rng_for(cfg.seed, Stream::Generator, index as u64);
    let l = &cfg.length;
    let context = cfg.context_variance.sqrt() * normal(&mut rng);
    let n = match cfg.exchanges {
        ExchangeCount::Fixed(n) => n,
        ExchangeCount::Uniform { min, max } => rng.random_range(min..=max),
    };
    let (so, sr) = (l.noise_o.sqrt(), l.noise_r.sqrt());
    let mut exchanges = Vec::with_capacity(n);
    for _ in 0..n {
        let len_o = l.a * context + so * normal(&mut rng);
        let len_r = l.alpha * context + l.beta * len_o + sr * normal(&mut rng);
        let (words_o, words_r, lo, lr) = match l.mode {
            LengthMode::Continuous => (0, 0, len_o, len_r),
            LengthMode::Integerized => {
                let w = |v: f64| softplus(l.offset + l.scale * v).round() as u32;
                let (wo, wr) = (w(len_o), w(len_r));
                let z = |c: u32| (c as f64 - l.offset) / l.scale;
                (wo, wr, z(wo), z(wr))
            }
        };
        let mut bits_o = Vec::with_capacity(cfg.markers.len());
        let mut bits_r = Vec::with_capacity(cfg.markers.len());
        for m in &cfg.markers {
            let po = sigmoid(m.w_length * lo + m.w_context * context + m.bias);
            let fo = rng.random_bool(po) as u8;
            let pr = sigmoid(m.w_length * lr + m.w_context * context + m.gamma * fo as f64 + m.bias);
            let fr = rng.random_bool(pr) as u8;
            bits_o.push(fo);
            bits_r.push(fr);
        }
        let (words_o, words_r) = match l.mode {
            LengthMode::Continuous => (words_o, words_r),
            LengthMode::Integerized => (
                words_o.max(bits_o.iter().map(|&b| b as u32).sum()),
                words_r.max(bits_r.iter().map(|&b| b as u32).sum()),
            ),
        };
        exchanges.push(SyntheticExchange { len_o, len_r, words_o, words_r, bits_o, bits_r });
    }
    SyntheticDialogue { id: dialogue_id(index), context, exchanges }
}

/// Ancestral sampling of every dialogue; dialogue `d` uses its own derived
/// seed, so the draw is the same under any execution.
pub fn generate(cfg: &GeneratorConfig) -> Result<SyntheticDraw> {
    generate_with(cfg, Execution::Parallel)
}

pub fn generate_with(cfg: &GeneratorConfig, execution: Execution) -> Result<SyntheticDraw> {
    cfg.validate()?;
    let dialogues = map_indexed(cfg.dialogues, execution, |d| draw_dialogue(cfg, d));
    Ok(SyntheticDraw { config: cfg.clone(), dialogues })
}

fn realize(words: u32, bits: &[u8], witnesses: &[String], fillers: &[&str], out: &mut String) {
    out.clear();
    let mut count = 0u32;
    for (b, w) in bits.iter().zip(witnesses) {
        if *b == 1 {
            if count > 0 {
                out.push(' ');
            }
            out.push_str(w);
            count += 1;
        }
    }
    while count < words {
        if count > 0 {
            out.push(' ');
        }
        out.push_str(fillers[count as usize % fillers.len()]);
        count += 1;
    }
}

impl SyntheticDraw {
    pub fn exchange_count(&self) -> usize {
        self.dialogues.iter().map(|d| d.exchanges.len()).sum()
    }

    pub fn contexts(&self) -> Vec<ContextValue> {
        self.dialogues.iter().map(|d| ContextValue { dialogue: d.id.clone(), context: d.context }).collect()
    }

    fn require_integerized(&self, what: &str) -> Result<()> {
        if self.config.length.mode != LengthMode::Integerized {
            return Err(Error::Config(format!("{what} needs integerized length mode")));
        }
        Ok(())
    }

    /// Realize the draw as text. Originators speak at even turns and
    /// respondents at the following odd turn; each dialogue has one speaker
    /// per role.
    pub fn to_corpus(&self, dict: &MarkerDictionary) -> Result<Corpus> {
        self.require_integerized("text realization")?;
        let witnesses = self
            .config
            .markers
            .iter()
            .map(|m| {
                let c = dict
                    .category_index(&m.name)
                    .ok_or_else(|| Error::Config(format!("marker `{}` is not in the dictionary", m.name)))?;
                dict.witness_token(c).ok_or_else(|| {
                    Error::Dictionary(format!("category `{}` has no word unique to it", m.name))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let fillers: Vec<&str> = FILLERS.iter().copied().filter(|f| dict.is_filler(f)).collect();
        if fillers.is_empty() {
            return Err(Error::Dictionary("every filler word matches the dictionary".into()));
        }
        let mut text = String::new();
        let dialogues = self
            .dialogues
            .iter()
            .map(|d| {
                let speaker_o = format!("{}-o", d.id);
                let speaker_r = format!("{}-r", d.id);
                let mut utterances = Vec::with_capacity(2 * d.exchanges.len());
                for (k, e) in d.exchanges.iter().enumerate() {
                    for (speaker, role, words, bits, turn) in [
                        (&speaker_o, &self.config.originator_role, e.words_o, &e.bits_o, 2 * k),
                        (&speaker_r, &self.config.respondent_role, e.words_r, &e.bits_r, 2 * k + 1),
                    ] {
                        realize(words, bits, &witnesses, &fillers, &mut text);
                        utterances.push(Utterance {
                            dialogue_id: d.id.clone(),
                            speaker_id: speaker.clone(),
                            role: Some(role.clone()),
                            turn_index: turn as u64,
                            text: text.clone(),
                        });
                    }
                }
                Dialogue { id: d.id.clone(), utterances }
            })
            .collect();
        Ok(Corpus { dialogues })
    }

    /// The exchange table the corpus realizes, built without text.
    pub fn to_table(&self) -> Result<ExchangeTable> {
        self.require_integerized("an exchange table")?;
        let mut table = ExchangeTable::new(&self.config.marker_names());
        for d in &self.dialogues {
            let (o, r) = (format!("{}-o", d.id), format!("{}-r", d.id));
            for e in &d.exchanges {
                table.push_parts(&d.id, &o, &r, e.words_o, e.words_r, &e.bits_o, &e.bits_r);
            }
        }
        Ok(table)
    }

    /// Latent continuous lengths with dialogue codes, row-aligned with
    /// [`SyntheticDraw::to_table`].
    pub fn latent_lengths(&self) -> (Vec<f64>, Vec<f64>, Vec<u32>) {
        let n = self.exchange_count();
        let (mut lo, mut lr, mut d) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for (i, dl) in self.dialogues.iter().enumerate() {
            for e in &dl.exchanges {
                lo.push(e.len_o);
                lr.push(e.len_r);
                d.push(i as u32);
            }
        }
        (lo, lr, d)
    }
}

/// Analytic coordination values and qualitative flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub olc: f64,
    pub tlc: f64,
    /// `olc - tlc`, the interaction information `I(L_O : L_R : C)`.
    pub interaction: f64,
    pub flags: TruthFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthFlags {
    pub length_turn_by_turn: bool,
    pub style_turn_by_turn: bool,
    pub style_contextual: bool,
}

impl TruthFlags {
    pub fn of(cfg: &GeneratorConfig) -> Self {
        TruthFlags {
            length_turn_by_turn: cfg.length.beta != 0.0,
            style_turn_by_turn: cfg.markers.iter().any(|m| m.gamma != 0.0),
            style_contextual: cfg.markers.iter().any(|m| m.w_context != 0.0),
        }
    }
}

/// Joint moments of `(L_O, L_R)` marginally and given `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthMoments {
    pub var_o: f64,
    pub var_r: f64,
    pub cov: f64,
    pub rho: f64,
    pub partial_rho: f64,
}

pub fn length_moments(l: &LengthModel, context_variance: f64) -> LengthMoments {
    let s = context_variance;
    let var_o = l.a * l.a * s + l.noise_o;
    let cov = l.alpha * l.a * s + l.beta * var_o;
    let var_r = l.alpha * l.alpha * s + l.beta * l.beta * var_o + 2.0 * l.alpha * l.beta * l.a * s + l.noise_r;
    // Given C: Var L_O = v_O, Cov = beta v_O, Var L_R = beta^2 v_O + v_R.
    let cvar_r = l.beta * l.beta * l.noise_o + l.noise_r;
    LengthMoments {
        var_o,
        var_r,
        cov,
        rho: cov / (var_o * var_r).sqrt(),
        partial_rho: l.beta * l.noise_o / (l.noise_o * cvar_r).sqrt(),
    }
}

/// Closed-form OLC and TLC of the Gaussian length layer. Integerized
/// configurations have no closed form and are rejected.
pub fn analytic_info(cfg: &GeneratorConfig) -> Result<GroundTruth> {
    if cfg.length.mode != LengthMode::Continuous {
        return Err(Error::Config("analytic values exist only in continuous length mode".into()));
    }
    latent_analytic_info(cfg)
}

/// [`analytic_info`] for the latent Gaussian lengths, whatever the mode.
pub fn latent_analytic_info(cfg: &GeneratorConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let m = length_moments(&cfg.length, cfg.context_variance);
    let olc = gaussian_mi_bits(m.rho);
    let tlc = gaussian_mi_bits(m.partial_rho);
    Ok(GroundTruth { olc, tlc, interaction: olc - tlc, flags: TruthFlags::of(cfg) })
}
