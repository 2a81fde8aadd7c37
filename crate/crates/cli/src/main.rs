use std::path::PathBuf;
use std::process::ExitCode;

use accommodate::coordination::LengthConditioning;
use accommodate::estimators::Units;
use accommodate::replicate::Execution;
use accommodate_cli::{generator_seed, replay, run, CliError, Command, Format, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "accommodate", version, about = "Stylistic and length coordination in dialogues")]
struct Cli {
    /// Worker threads; 1 runs everything serially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-marker MI band, OSC and zero-information band.
    Style(Common),
    /// OLC and the turn-by-turn length coordination test.
    Length(Common),
    /// Turn-by-turn stylistic coordination test per marker.
    Tsc(Common),
    /// Sample a synthetic corpus from a generator config (TOML).
    Simulate(Common),
    /// Re-run the configuration embedded in a report.
    Replay {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    input: PathBuf,
    /// Marker dictionary (.dic or category<TAB>word); bundled list if absent.
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long)]
    from_role: Option<String>,
    #[arg(long)]
    to_role: Option<String>,
    /// Comma-separated marker categories.
    #[arg(long, value_delimiter = ',')]
    markers: Option<Vec<String>>,
    #[arg(long, default_value_t = 400)]
    permutations: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Bootstrap resamples for bias correction; 0 reports plug-in values.
    #[arg(long = "bootstrap-B", default_value_t = 20)]
    bootstrap_b: usize,
    /// auto | exact | bins:N
    #[arg(long, default_value = "auto")]
    cond: LengthConditioning,
    #[arg(long, default_value = "bits")]
    units: Units,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 2)]
    min_exchanges: usize,
    /// Keep consecutive turns by one speaker as separate utterances.
    #[arg(long)]
    no_merge_turns: bool,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
}

impl Common {
    fn into_config(self, command: Command) -> RunConfig {
        let seed = match (self.seed, command) {
            (Some(s), _) => s,
            (None, Command::Simulate) => generator_seed(&self.input).unwrap_or(0),
            (None, _) => 0,
        };
        RunConfig {
            command,
            input: self.input,
            dict: self.dict,
            from_role: self.from_role,
            to_role: self.to_role,
            markers: self.markers.map(|m| m.into_iter().filter(|s| !s.is_empty()).collect()),
            permutations: self.permutations,
            alpha: self.alpha,
            k: self.k,
            bootstrap_b: self.bootstrap_b,
            cond: self.cond,
            units: self.units,
            seed,
            min_exchanges: self.min_exchanges,
            merge_turns: !self.no_merge_turns,
            output: self.output,
            format: self.format,
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let execution = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(1) => Execution::Serial,
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let outputs = match cli.command {
        Cmd::Style(c) => run(&c.into_config(Command::Style), execution)?,
        Cmd::Length(c) => run(&c.into_config(Command::Length), execution)?,
        Cmd::Tsc(c) => run(&c.into_config(Command::Tsc), execution)?,
        Cmd::Simulate(c) => run(&c.into_config(Command::Simulate), execution)?,
        Cmd::Replay { input, output } => replay(&input, output.as_deref(), execution)?,
    };
    outputs.write()
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
