//! Run configuration, command execution and report serialization for the
//! `accommodate` binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use accommodate::coordination::{
    length_pearson, style_report, BiasCorrection, CoordinationReport, Direction, LengthConditioning,
    ResolvedConditioning, StyleParams,
};
use accommodate::corpus::{extract_exchanges, Corpus, ExchangeTable, Selector};
use accommodate::estimators::Units;
use accommodate::markers::MarkerDictionary;
use accommodate::permtests::{tlc_test, tsc_test, LengthTestParams, TestResult, MIN_REPLICATES};
use accommodate::replicate::Execution;
use accommodate::synthgen::{
    analytic_info, generate_with, latent_analytic_info, ContextValue, GeneratorConfig, GroundTruth, LengthMode,
    TruthFlags,
};
use serde::{Deserialize, Serialize};

pub const TOOL: &str = "accommodate";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: accommodate::Error },
    #[error(transparent)]
    Analysis(#[from] accommodate::Error),
}

impl CliError {
    /// 1 for infeasible analyses, 2 for usage, I/O and configuration errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Analysis(e) if e.is_infeasible() => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Style,
    Length,
    Tsc,
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected json|csv)")),
        }
    }
}

/// Everything that determines a run's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    pub dict: Option<PathBuf>,
    pub from_role: Option<String>,
    pub to_role: Option<String>,
    pub markers: Option<Vec<String>>,
    pub permutations: usize,
    pub alpha: f64,
    pub k: usize,
    pub bootstrap_b: usize,
    pub cond: LengthConditioning,
    pub units: Units,
    pub seed: u64,
    pub min_exchanges: usize,
    pub merge_turns: bool,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn new(command: Command, input: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            input: input.into(),
            dict: None,
            from_role: None,
            to_role: None,
            markers: None,
            permutations: 400,
            alpha: 0.01,
            k: 3,
            bootstrap_b: 20,
            cond: LengthConditioning::Auto,
            units: Units::Bits,
            seed: 0,
            min_exchanges: 2,
            merge_turns: true,
            output: None,
            format: Format::Json,
        }
    }

    /// Checks that need no input data.
    pub fn validate(&self) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return usage(format!("--alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.k == 0 {
            return usage("--k must be at least 1".into());
        }
        if self.bootstrap_b == 1 {
            return usage("--bootstrap-B must be 0 (plug-in) or at least 2".into());
        }
        if let Some(m) = &self.markers {
            if m.is_empty() {
                return usage("--markers selects no markers".into());
            }
        }
        match self.command {
            Command::Simulate => {
                if self.format == Format::Csv {
                    return usage("simulate writes JSON Lines and JSON only".into());
                }
                if self.output.is_none() {
                    return usage("simulate needs --output for the corpus file".into());
                }
            }
            Command::Style | Command::Length | Command::Tsc => {
                let (Some(from), Some(to)) = (&self.from_role, &self.to_role) else {
                    return usage("--from-role and --to-role are both required".into());
                };
                if from == to {
                    return usage("--from-role and --to-role must differ".into());
                }
                let floor = if self.command == Command::Style { 2 } else { MIN_REPLICATES };
                if self.permutations < floor {
                    return usage(format!("--permutations must be at least {floor}, got {}", self.permutations));
                }
            }
        }
        Ok(())
    }

    fn correction(&self) -> BiasCorrection {
        if self.bootstrap_b == 0 {
            BiasCorrection::PlugIn
        } else {
            BiasCorrection::Bootstrap { resamples: self.bootstrap_b }
        }
    }

    fn style_params(&self, execution: Execution) -> StyleParams {
        StyleParams {
            conditioning: self.cond,
            correction: self.correction(),
            replicates: self.permutations,
            alpha: self.alpha,
            seed: self.seed,
            execution,
            ..StyleParams::default()
        }
    }

    fn direction(&self) -> Direction {
        Direction {
            originator: self.from_role.clone().unwrap_or_default(),
            respondent: self.to_role.clone().unwrap_or_default(),
        }
    }
}

/// Files produced by one run, in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub files: Vec<(Option<PathBuf>, String)>,
}

impl Outputs {
    fn single(path: Option<PathBuf>, body: String) -> Self {
        Outputs { files: vec![(path, body)] }
    }

    /// Write every file; a missing path means standard output.
    pub fn write(&self) -> CliResult<()> {
        for (path, body) in &self.files {
            match path {
                Some(p) => fs::write(p, body).map_err(|source| CliError::Io { path: p.clone(), source })?,
                None => print!("{body}"),
            }
        }
        Ok(())
    }
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    generated_unix: u64,
    seed: u64,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn envelope_json<T: Serialize>(config: &RunConfig, body: T) -> String {
    let env = Envelope { tool: TOOL, version: VERSION, generated_unix: now_unix(), seed: config.seed, config, body };
    let mut s = serde_json::to_string_pretty(&env).expect("report serializes");
    s.push('\n');
    s
}

fn csv_preamble(config: &RunConfig) -> String {
    format!(
        "# tool: {TOOL} {VERSION}\n# generated_unix: {}\n# seed: {}\n# config: {}\n",
        now_unix(),
        config.seed,
        serde_json::to_string(config).expect("config serializes")
    )
}

fn csv_rows(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load_dictionary(config: &RunConfig) -> CliResult<MarkerDictionary> {
    let dict = match &config.dict {
        Some(p) => MarkerDictionary::parse(&read_text(p)?).map_err(|source| CliError::Input { path: p.clone(), source })?,
        None => MarkerDictionary::bundled(),
    };
    match &config.markers {
        Some(names) => Ok(dict.subset(names).map_err(|e| CliError::Usage(e.to_string()))?),
        None => Ok(dict),
    }
}

fn load_table(config: &RunConfig) -> CliResult<ExchangeTable> {
    let dict = load_dictionary(config)?;
    let file = fs::File::open(&config.input).map_err(|source| CliError::Io { path: config.input.clone(), source })?;
    let mut corpus = Corpus::parse(BufReader::new(file)).map_err(|source| CliError::Input { path: config.input.clone(), source })?;
    if config.merge_turns {
        corpus = corpus.merge_consecutive_turns();
    }
    let corpus = corpus.filter_min_exchanges(config.min_exchanges);
    let from = Selector::Role(config.from_role.clone().unwrap_or_default());
    let to = Selector::Role(config.to_role.clone().unwrap_or_default());
    let exchanges = extract_exchanges(&corpus, &from, &to)?;
    Ok(ExchangeTable::build(&exchanges, &dict))
}

#[derive(Serialize)]
struct StyleBody {
    report: CoordinationReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LengthReport {
    pub direction: Direction,
    pub units: Units,
    pub exchanges: usize,
    pub dialogues: usize,
    pub olc: f64,
    pub length_pearson: Option<f64>,
    pub tlc_test: TestResult,
}

#[derive(Serialize)]
struct LengthBody {
    report: LengthReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TscReport {
    pub direction: Direction,
    pub units: Units,
    pub exchanges: usize,
    pub dialogues: usize,
    pub conditioning: Option<ResolvedConditioning>,
    pub tsc_test: BTreeMap<String, TestResult>,
}

#[derive(Serialize)]
struct TscBody {
    report: TscReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub generator: GeneratorConfig,
    pub flags: TruthFlags,
    /// Closed form of the continuous lengths behind the word counts.
    pub latent_gaussian: GroundTruth,
    /// Present only in continuous length mode.
    pub analytic: Option<GroundTruth>,
    pub exchanges: usize,
    pub contexts: Vec<ContextValue>,
}

#[derive(Serialize)]
struct SimulateBody {
    corpus: PathBuf,
    ground_truth: SimulationTruth,
}

fn run_style(config: &RunConfig, execution: Execution) -> CliResult<Outputs> {
    let table = load_table(config)?;
    let params = config.style_params(execution);
    let report = style_report(&table, config.direction(), &params, config.k, config.units)?;
    let body = match config.format {
        Format::Json => envelope_json(config, StyleBody { report }),
        Format::Csv => {
            let rows = report.markers.iter().map(|m| {
                vec![
                    m.marker.clone(),
                    num(m.mi_band.point),
                    num(m.mi_band.lower),
                    num(m.mi_band.upper),
                    num(m.osc),
                    num(m.osc_band.lower),
                    num(m.osc_band.upper),
                    num(m.zero_band.point),
                    num(m.zero_band.lower),
                    num(m.zero_band.upper),
                    opt(m.reduction_factor),
                    m.mi_above_zero_band.to_string(),
                    m.osc_within_zero_band.to_string(),
                ]
            });
            csv_preamble(config)
                + &csv_rows(
                    &[
                        "marker", "mi", "mi_lower", "mi_upper", "osc", "osc_lower", "osc_upper", "zero", "zero_lower",
                        "zero_upper", "reduction_factor", "mi_above_zero_band", "osc_within_zero_band",
                    ],
                    rows,
                )
        }
    };
    Ok(Outputs::single(config.output.clone(), body))
}

fn decision_label(r: &TestResult) -> String {
    serde_json::to_value(r.decision).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn run_length(config: &RunConfig, execution: Execution) -> CliResult<Outputs> {
    let table = load_table(config)?;
    let params = LengthTestParams {
        replicates: config.permutations,
        alpha: config.alpha,
        k: config.k,
        seed: config.seed,
        execution,
    };
    let f = config.units.factor();
    let test = tlc_test(&table, &params)?.scaled(f);
    let report = LengthReport {
        direction: config.direction(),
        units: config.units,
        exchanges: table.len(),
        dialogues: table.dialogue_count(),
        olc: test.observed,
        length_pearson: length_pearson(&table).ok(),
        tlc_test: test,
    };
    let body = match config.format {
        Format::Json => envelope_json(config, LengthBody { report }),
        Format::Csv => {
            let t = &report.tlc_test;
            let row = vec![
                num(report.olc),
                opt(report.length_pearson),
                num(t.p_value),
                num(t.min_p_value),
                num(t.null_band.point),
                num(t.null_band.lower),
                num(t.null_band.upper),
                decision_label(t),
                report.exchanges.to_string(),
                report.dialogues.to_string(),
            ];
            csv_preamble(config)
                + &csv_rows(
                    &[
                        "olc", "length_pearson", "p_value", "min_p_value", "null", "null_lower", "null_upper",
                        "decision", "exchanges", "dialogues",
                    ],
                    [row],
                )
        }
    };
    Ok(Outputs::single(config.output.clone(), body))
}

fn run_tsc(config: &RunConfig, execution: Execution) -> CliResult<Outputs> {
    let table = load_table(config)?;
    if table.markers().is_empty() {
        return Err(CliError::Usage("the dictionary has no markers".into()));
    }
    let params = config.style_params(execution);
    let f = config.units.factor();
    let mut tests = BTreeMap::new();
    for (m, name) in table.markers().iter().enumerate() {
        tests.insert(name.clone(), tsc_test(&table, m, &params)?.scaled(f));
    }
    let conditioning = config.cond.resolve(&table.len_r).ok().map(|(_, _, r)| r);
    let report = TscReport {
        direction: config.direction(),
        units: config.units,
        exchanges: table.len(),
        dialogues: table.dialogue_count(),
        conditioning,
        tsc_test: tests,
    };
    let body = match config.format {
        Format::Json => envelope_json(config, TscBody { report }),
        Format::Csv => {
            let rows = report.tsc_test.iter().map(|(name, t)| {
                let z = t.zero_band.expect("tsc reports a zero band");
                vec![
                    name.clone(),
                    num(t.observed),
                    num(t.p_value),
                    num(t.null_band.point),
                    num(t.null_band.lower),
                    num(t.null_band.upper),
                    num(z.point),
                    num(z.lower),
                    num(z.upper),
                    decision_label(t),
                    t.verdict
                        .and_then(|v| serde_json::to_value(v).ok())
                        .and_then(|v| v.as_str().map(String::from))
                        .unwrap_or_default(),
                ]
            });
            csv_preamble(config)
                + &csv_rows(
                    &[
                        "marker", "osc0", "p_value", "osc1", "osc1_lower", "osc1_upper", "zero", "zero_lower",
                        "zero_upper", "decision", "verdict",
                    ],
                    rows,
                )
        }
    };
    Ok(Outputs::single(config.output.clone(), body))
}

/// Path of the ground-truth file written next to a simulated corpus.
pub fn truth_path(corpus: &Path) -> PathBuf {
    corpus.with_extension("truth.json")
}

fn run_simulate(config: &RunConfig, execution: Execution) -> CliResult<Outputs> {
    let text = read_text(&config.input)?;
    let mut gen: GeneratorConfig = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {}", config.input.display(), e.message())))?;
    gen.seed = config.seed;
    gen.validate()?;
    if gen.length.mode == LengthMode::Continuous {
        return Err(CliError::Usage(
            "continuous length mode has no text realization; use mode = \"integerized\"".into(),
        ));
    }
    let dict = load_dictionary(config)?;
    let draw = generate_with(&gen, execution)?;
    let corpus = draw.to_corpus(&dict)?;
    let corpus_path = config.output.clone().expect("validated");
    let truth = SimulationTruth {
        flags: TruthFlags::of(&gen),
        latent_gaussian: latent_analytic_info(&gen)?,
        analytic: analytic_info(&gen).ok(),
        exchanges: draw.exchange_count(),
        contexts: draw.contexts(),
        generator: gen,
    };
    let truth_body = envelope_json(config, SimulateBody { corpus: corpus_path.clone(), ground_truth: truth });
    Ok(Outputs { files: vec![(Some(corpus_path.clone()), corpus.to_jsonl()), (Some(truth_path(&corpus_path)), truth_body)] })
}

/// Seed recorded in a generator config file, if it can be read.
pub fn generator_seed(path: &Path) -> Option<u64> {
    let text = fs::read_to_string(path).ok()?;
    toml::from_str::<GeneratorConfig>(&text).ok().map(|g| g.seed)
}

/// Execute a validated configuration.
pub fn run(config: &RunConfig, execution: Execution) -> CliResult<Outputs> {
    config.validate()?;
    match config.command {
        Command::Style => run_style(config, execution),
        Command::Length => run_length(config, execution),
        Command::Tsc => run_tsc(config, execution),
        Command::Simulate => run_simulate(config, execution),
    }
}

/// Recover the configuration embedded in a report (JSON, or the
/// `# config:` line of CSV).
pub fn embedded_config(report: &str) -> CliResult<RunConfig> {
    let bad = |m: String| CliError::Usage(format!("no embedded run configuration: {m}"));
    if report.starts_with('#') {
        let line = report
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix("# config: "))
            .ok_or_else(|| bad("missing `# config:` line".into()))?;
        return serde_json::from_str(line).map_err(|e| bad(e.to_string()));
    }
    let v: serde_json::Value = serde_json::from_str(report).map_err(|e| bad(e.to_string()))?;
    let c = v.get("config").cloned().ok_or_else(|| bad("missing `config` field".into()))?;
    serde_json::from_value(c).map_err(|e| bad(e.to_string()))
}

/// Re-run the configuration embedded in `report`. With `output` set the
/// result goes there instead of the recorded path; the embedded
/// configuration is left untouched.
pub fn replay(report: &Path, output: Option<&Path>, execution: Execution) -> CliResult<Outputs> {
    let config = embedded_config(&read_text(report)?)?;
    let mut out = run(&config, execution)?;
    if let Some(target) = output {
        match config.command {
            Command::Simulate => {
                out.files[0].0 = Some(target.to_path_buf());
                out.files[1].0 = Some(truth_path(target));
            }
            _ => out.files[0].0 = Some(target.to_path_buf()),
        }
    }
    Ok(out)
}

/// Drop the timestamp so two reports can be compared byte for byte.
pub fn without_timestamp(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"generated_unix\"") && !l.starts_with("# generated_unix:"))
        .collect::<Vec<_>>()
        .join("\n")
}
