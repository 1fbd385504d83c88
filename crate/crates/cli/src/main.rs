//! `starnoma`: outage sweeps, surface partitioning and fixture generation.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use starnoma::channel::{write_elements_csv, ChannelSampler};
use starnoma::cli::{
    self as cmd, AllocationSettings, Baselines, CliError, Mode, OutputFormat, PartitionSource,
    PartitionSpec, RunSpec, ScenarioSource, ScenarioSpec, Sweep,
};
use starnoma::model::preset;
use starnoma::partition::{DEFAULT_EPSILON, DEFAULT_P_REF_DBM, DEFAULT_REALIZATIONS, DEFAULT_SEED};
use starnoma::specfun::RandomStream;

#[derive(Parser)]
#[command(
    name = "starnoma",
    version,
    about = "STAR-RIS NOMA outage and partitioning toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the transmit power and tabulate outage and sum rate.
    Run(RunArgs),
    /// Allocate surface elements to users.
    Partition(PartitionArgs),
    /// Regenerate the calibrated allocation fixtures.
    Fixtures {
        /// Directory for the fixture files.
        #[arg(long, default_value = "fixtures")]
        dir: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print a preset as a scenario file.
    Preset { id: u8 },
    /// Write the per-element channel of one trial as CSV.
    Dump(DumpArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in deployment (1, 2 or 3).
    #[arg(
        long,
        conflicts_with = "scenario",
        required_unless_present = "scenario"
    )]
    preset: Option<u8>,
    /// Scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Total number of surface elements.
    #[arg(long = "n")]
    n_total: Option<usize>,
    /// Von Mises concentration of the phase errors; `inf` for none.
    #[arg(long)]
    kappa: Option<f64>,
    /// Element spacing in wavelengths; enables spatially correlated channels.
    #[arg(long)]
    spacing: Option<f64>,
}

impl ScenarioArgs {
    fn spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            source: match (&self.scenario, self.preset) {
                (Some(path), _) => ScenarioSource::File(path.clone()),
                (None, Some(id)) => ScenarioSource::Preset(id),
                (None, None) => unreachable!("clap requires one source"),
            },
            n_total: self.n_total,
            kappa: self.kappa,
            spacing_wavelengths: self.spacing,
        }
    }
}

#[derive(Args)]
struct AllocationArgs {
    /// Ceiling on every user's outage floor.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Power at which ergodic rates are evaluated, dBm.
    #[arg(long, default_value_t = DEFAULT_P_REF_DBM, allow_hyphen_values = true)]
    p_ref: f64,
    #[arg(long, default_value_t = DEFAULT_REALIZATIONS)]
    realizations: u64,
    /// Comma-separated rate targets in bits/s/Hz.
    #[arg(long, value_delimiter = ',')]
    r_min: Option<Vec<f64>>,
}

impl AllocationArgs {
    fn settings(&self) -> AllocationSettings {
        AllocationSettings {
            epsilon: self.epsilon,
            p_ref_dbm: self.p_ref,
            realizations: self.realizations,
            r_min: self.r_min.clone(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Mc,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineArg {
    Noma,
    Oma,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    start: f64,
    #[arg(long, default_value_t = 40.0, allow_hyphen_values = true)]
    stop: f64,
    #[arg(long, default_value_t = 2.0)]
    step: f64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    workers: Option<usize>,
    /// `two-stage`, `uniform`, `fixture`, a scenario file with a
    /// `[partition]` table, or comma-separated counts.
    #[arg(long, default_value = "two-stage")]
    partition: String,
    #[command(flatten)]
    allocation: AllocationArgs,
    /// Reference systems to add.
    #[arg(long, value_enum, value_delimiter = ',')]
    baselines: Vec<BaselineArg>,
    /// Count no rate for a user in outage.
    #[arg(long)]
    strict_sumrate: bool,
    /// Output file; relative paths go under $STARNOMA_OUTPUT_DIR when set.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Omit the generation-time line.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    allocation: AllocationArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Scenario file to write, with the partition appended.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated counts; the fixture row when omitted.
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn partition_source(text: &str) -> anyhow::Result<PartitionSource> {
    Ok(match text {
        "two-stage" => PartitionSource::TwoStage,
        "uniform" => PartitionSource::Uniform,
        "fixture" => PartitionSource::Fixture,
        t if t.chars().all(|c| c.is_ascii_digit() || c == ',') => PartitionSource::Counts(
            t.split(',')
                .map(str::parse)
                .collect::<Result<_, _>>()
                .with_context(|| format!("bad counts {t:?}"))?,
        ),
        path => PartitionSource::File(PathBuf::from(path)),
    })
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let p = cmd::resolve_output(p);
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
            }
            Box::new(BufWriter::new(
                File::create(&p).with_context(|| format!("creating {}", p.display()))?,
            ))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let spec = RunSpec {
        scenario: args.scenario.spec(),
        mode: match args.mode {
            ModeArg::Analytic => Mode::Analytic,
            ModeArg::Mc => Mode::MonteCarlo,
            ModeArg::Both => Mode::Both,
        },
        sweep: Sweep {
            start: args.start,
            stop: args.stop,
            step: args.step,
        },
        trials: args.trials,
        seed: args.seed,
        workers: args.workers,
        partition: partition_source(&args.partition)
            .map_err(|e| CliError::Config(e.to_string()))?,
        allocation: args.allocation.settings(),
        baselines: Baselines {
            noma: args.baselines.contains(&BaselineArg::Noma),
            oma: args.baselines.contains(&BaselineArg::Oma),
        },
        strict_sumrate: args.strict_sumrate,
    };
    let report = cmd::run(&spec)?;
    let format = match args.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    };
    let mut out = open_output(args.output.as_deref())?;
    cmd::write_report(&mut out, &report, format, (!args.no_timestamp).then(now))?;
    out.flush()?;
    Ok(())
}

fn partition(args: PartitionArgs) -> anyhow::Result<()> {
    let report = cmd::partition_cmd(&PartitionSpec {
        scenario: args.scenario.spec(),
        allocation: args.allocation.settings(),
        seed: args.seed,
        workers: args.workers,
    })?;
    print!("{}", report.summary());
    if let Some(path) = args.output {
        let mut out = open_output(Some(&path))?;
        out.write_all(report.document.to_toml()?.as_bytes())?;
        out.flush()?;
    }
    Ok(())
}

fn dump(args: DumpArgs) -> anyhow::Result<()> {
    let spec = args.scenario.spec();
    let (scenario, _) = cmd::load_scenario(&spec)?;
    let source = match args.counts {
        Some(c) => PartitionSource::Counts(c),
        None => PartitionSource::Fixture,
    };
    let part = cmd::resolve_partition(
        &scenario,
        &spec,
        None,
        &source,
        &AllocationSettings::default(),
        args.seed,
    )?;
    let records = ChannelSampler::new(&scenario, &part)
        .draw_elements(&RandomStream::new(args.seed, args.trial));
    let mut out = open_output(args.output.as_deref())?;
    write_elements_csv(&mut out, &records)?;
    out.flush()?;
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(a) => run(a),
        Command::Partition(a) => partition(a),
        Command::Fixtures { dir, workers } => {
            for p in cmd::fixtures(&cmd::resolve_output(&dir), workers)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Preset { id } => {
            print!(
                "{}",
                preset(id)
                    .map_err(CliError::from)?
                    .to_toml()
                    .map_err(CliError::from)?
            );
            Ok(())
        }
        Command::Dump(a) => dump(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
