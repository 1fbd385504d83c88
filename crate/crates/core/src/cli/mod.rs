//! Command implementations behind the `starnoma` binary: power sweeps,
//! partitioning runs and fixture regeneration.

mod output;

pub use output::{write_csv, write_json, OutputFormat, Row, CSV_COLUMNS};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::{op_asymptotic, op_exact, AnalysisError};
use crate::model::{
    preset, CorrelationSpec, FeasibilityViolation, ModelError, Partition, PartitionRecord,
    Scenario, ScenarioDocument,
};
use crate::partition::{
    calibrate_table, fixture, published_tables, two_stage_partition, uniform_partition,
    PartitionError, PartitionOutcome, PartitionRequest, DEFAULT_EPSILON, DEFAULT_P_REF_DBM,
    DEFAULT_REALIZATIONS,
};
use crate::sim::{mc_sweep, noma_op_exact, oma_op_exact, with_workers, McConfig, SimError};

/// Environment variable naming the directory for relative output paths.
pub const OUTPUT_DIR_ENV: &str = "STARNOMA_OUTPUT_DIR";
/// Carrier frequency used when the correlation toggle gives only a spacing.
pub const DEFAULT_CARRIER_HZ: f64 = 1.8e9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Infeasible(#[from] FeasibilityViolation),
    #[error(transparent)]
    Partition(PartitionError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::Infeasible(v) => Self::Infeasible(v),
            PartitionError::InvalidRequest(m) => Self::Config(m),
            PartitionError::Model(m) => Self::Model(m),
            other => Self::Partition(other),
        }
    }
}

impl CliError {
    /// 2 for configuration errors, 3 for an infeasible power split, 4 for a
    /// failed partitioning and 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Model(_) => 2,
            Self::Sim(SimError::TooFewTrials(_)) | Self::Sim(SimError::Channel(_)) => 2,
            Self::Infeasible(_) => 3,
            Self::Partition(_) => 4,
            _ => 1,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Preset(u8),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    MonteCarlo,
    Both,
}

impl Mode {
    fn analytic(self) -> bool {
        matches!(self, Self::Analytic | Self::Both)
    }

    fn monte_carlo(self) -> bool {
        matches!(self, Self::MonteCarlo | Self::Both)
    }
}

/// Inclusive power grid in dBm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Config(format!(
                "sweep step must be positive, got {}",
                self.step
            )));
        }
        if self.stop < self.start {
            return Err(CliError::Config(format!(
                "sweep stop {} is below start {}",
                self.stop, self.start
            )));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionSource {
    /// Both allocation stages with the scenario's rate targets.
    TwoStage,
    Uniform,
    /// The shipped fixture row with the scenario's element count.
    Fixture,
    /// The `[partition]` table of a scenario file.
    File(PathBuf),
    Counts(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Baselines {
    pub noma: bool,
    pub oma: bool,
}

/// Allocation settings shared by the commands.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationSettings {
    pub epsilon: f64,
    pub p_ref_dbm: f64,
    pub realizations: u64,
    /// Overrides the scenario's rate targets.
    pub r_min: Option<Vec<f64>>,
}

impl Default for AllocationSettings {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            p_ref_dbm: DEFAULT_P_REF_DBM,
            realizations: DEFAULT_REALIZATIONS,
            r_min: None,
        }
    }
}

/// Scenario selection and overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub source: ScenarioSource,
    pub n_total: Option<usize>,
    /// Phase-error concentration; infinite means perfect alignment.
    pub kappa: Option<f64>,
    /// Element spacing in wavelengths; enables spatial correlation.
    pub spacing_wavelengths: Option<f64>,
}

impl ScenarioSpec {
    pub fn preset(id: u8) -> Self {
        Self {
            source: ScenarioSource::Preset(id),
            n_total: None,
            kappa: None,
            spacing_wavelengths: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub scenario: ScenarioSpec,
    pub mode: Mode,
    pub sweep: Sweep,
    pub trials: u64,
    pub seed: u64,
    pub workers: Option<usize>,
    pub partition: PartitionSource,
    pub allocation: AllocationSettings,
    pub baselines: Baselines,
    pub strict_sumrate: bool,
}

/// Sweep table with the inputs needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: Scenario,
    pub partition: Partition,
    pub rows: Vec<Row>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Loads a scenario and applies the overrides. Returns the partition stored
/// with a scenario file, if any.
pub fn load_scenario(spec: &ScenarioSpec) -> Result<(Scenario, Option<PartitionRecord>), CliError> {
    let (mut scenario, stored) = match &spec.source {
        ScenarioSource::Preset(id) => (preset(*id)?, None),
        ScenarioSource::File(path) => {
            let doc = ScenarioDocument::from_toml(&read(path)?)?;
            (doc.scenario, doc.partition)
        }
    };
    if let Some(n) = spec.n_total {
        scenario.n_total = n;
    }
    if let Some(kappa) = spec.kappa {
        scenario.phase_error_kappa = kappa.is_finite().then_some(kappa);
    }
    if let Some(d) = spec.spacing_wavelengths {
        scenario.correlation = Some(CorrelationSpec::from_carrier(d, DEFAULT_CARRIER_HZ));
    }
    scenario.validate()?;
    Ok((scenario, stored))
}

fn request(scenario: &Scenario, alloc: &AllocationSettings, seed: u64) -> PartitionRequest {
    let mut req = PartitionRequest::from_scenario(scenario, alloc.epsilon);
    if let Some(r) = &alloc.r_min {
        req.r_min = r.clone();
    }
    req.p_ref_dbm = alloc.p_ref_dbm;
    req.realizations = alloc.realizations;
    req.seed = seed;
    req
}

fn fixture_partition(scenario: &Scenario, source: &ScenarioSource) -> Result<Partition, CliError> {
    let ScenarioSource::Preset(id) = source else {
        return Err(CliError::Config(
            "fixture partitions need a preset scenario".into(),
        ));
    };
    let table = crate::partition::FIXTURE_NAMES
        .iter()
        .find(|(_, case)| case == id)
        .and_then(|(name, _)| fixture(name))
        .ok_or_else(|| CliError::Config(format!("no fixture for preset {id}")))??;
    let row = table
        .rows
        .iter()
        .find(|r| r.n_total == scenario.n_total)
        .ok_or_else(|| {
            CliError::Config(format!(
                "preset {id} has no fixture row with {} elements",
                scenario.n_total
            ))
        })?;
    Ok(Partition::new(scenario, row.counts.clone())?)
}

/// Resolves the partition of a run.
pub fn resolve_partition(
    scenario: &Scenario,
    spec: &ScenarioSpec,
    stored: Option<&PartitionRecord>,
    source: &PartitionSource,
    alloc: &AllocationSettings,
    seed: u64,
) -> Result<Partition, CliError> {
    Ok(match source {
        PartitionSource::TwoStage => {
            two_stage_partition(scenario, &request(scenario, alloc, seed))?.partition
        }
        PartitionSource::Uniform => uniform_partition(scenario)?,
        PartitionSource::Fixture => fixture_partition(scenario, &spec.source)?,
        PartitionSource::Counts(c) => Partition::new(scenario, c.clone())?,
        PartitionSource::File(path) => {
            let record = if stored.is_some() && spec.source == ScenarioSource::File(path.clone()) {
                stored.cloned()
            } else {
                ScenarioDocument::from_toml(&read(path)?)?.partition
            };
            record
                .ok_or_else(|| {
                    CliError::Config(format!("{} has no [partition] table", path.display()))
                })?
                .to_partition(scenario)?
        }
    })
}

fn opt(v: f64) -> Option<f64> {
    Some(v)
}

/// Runs a power sweep.
pub fn run(spec: &RunSpec) -> Result<RunReport, CliError> {
    let points = spec.sweep.points()?;
    let (scenario, stored) = load_scenario(&spec.scenario)?;
    scenario.feasibility_check()?;
    let workers = spec.workers;
    let partition = with_workers(workers, || {
        resolve_partition(
            &scenario,
            &spec.scenario,
            stored.as_ref(),
            &spec.partition,
            &spec.allocation,
            spec.seed,
        )
    })??;
    let want_baselines = spec.baselines.noma || spec.baselines.oma;
    let mc = if spec.mode.monte_carlo() {
        let cfg = McConfig {
            trials: spec.trials,
            seed: spec.seed,
            strict_sumrate: spec.strict_sumrate,
            baselines: want_baselines,
        };
        Some(with_workers(workers, || {
            mc_sweep(&scenario, &partition, &points, &cfg)
        })??)
    } else {
        None
    };
    let k_users = scenario.num_users();
    let mut rows = Vec::with_capacity(points.len() * k_users);
    for (i, &p) in points.iter().enumerate() {
        let point = mc.as_ref().map(|m| &m.points[i]);
        for k in 0..k_users {
            let mut row = Row {
                p_dbm: p,
                user: k + 1,
                trials: mc.as_ref().map(|m| m.trials),
                seed: spec.seed,
                ..Row::default()
            };
            if spec.mode.analytic() {
                row.op_exact = opt(op_exact(&scenario, &partition, k, p)?);
                row.op_asym = opt(op_asymptotic(&scenario, &partition, k));
            }
            if let Some(pt) = point {
                row.op_mc = opt(pt.proposed.op[k].mean);
                row.op_se = opt(pt.proposed.op[k].se);
                row.sumrate = opt(pt.proposed.sumrate.mean);
                row.sumrate_se = opt(pt.proposed.sumrate.se);
                if spec.baselines.noma {
                    let b = pt.noma.as_ref().expect("baselines simulated");
                    row.noma_op = opt(b.op[k].mean);
                    row.noma_sumrate = opt(b.sumrate.mean);
                }
                if spec.baselines.oma {
                    let b = pt.oma.as_ref().expect("baselines simulated");
                    row.oma_op = opt(b.op[k].mean);
                    row.oma_sumrate = opt(b.sumrate.mean);
                }
            } else if spec.mode.analytic() {
                if spec.baselines.noma {
                    row.noma_op = opt(noma_op_exact(&scenario, k, p));
                }
                if spec.baselines.oma {
                    row.oma_op = opt(oma_op_exact(&scenario, k, p));
                }
            }
            rows.push(row);
        }
    }
    Ok(RunReport {
        scenario,
        partition,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    pub scenario: ScenarioSpec,
    pub allocation: AllocationSettings,
    pub seed: u64,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionReport {
    pub outcome: PartitionOutcome,
    /// Scenario with the targets used and the partition, ready to be reused.
    pub document: ScenarioDocument,
}

impl PartitionReport {
    pub fn summary(&self) -> String {
        let p = &self.outcome.partition;
        let s = &self.document.scenario;
        let mut out = String::new();
        match self.outcome.n_thr {
            Some(n) => out.push_str(&format!("N_thr = {n}\n")),
            None => out.push_str("N_thr = - (two-user search)\n"),
        }
        for (k, u) in s.users.iter().enumerate() {
            let rate = match self.outcome.rates.get(k).copied().flatten() {
                Some(r) => format!("{r:.4}"),
                None => "-".into(),
            };
            out.push_str(&format!(
                "U{} ({}): N = {}  searched = {}  rate = {}  target = {}\n",
                k + 1,
                u.side.symbol(),
                p.count(k),
                self.outcome.searched[k],
                rate,
                u.r_min
            ));
        }
        out.push_str(&format!(
            "N_t = {}  N_r = {}  N = {}\n",
            p.n_t(),
            p.n_r(),
            p.total()
        ));
        out
    }
}

/// Runs both allocation stages.
pub fn partition_cmd(spec: &PartitionSpec) -> Result<PartitionReport, CliError> {
    let (mut scenario, _) = load_scenario(&spec.scenario)?;
    scenario.feasibility_check()?;
    let req = request(&scenario, &spec.allocation, spec.seed);
    req.validate(&scenario)?;
    for (u, r) in scenario.users.iter_mut().zip(&req.r_min) {
        u.r_min = *r;
    }
    let outcome = with_workers(spec.workers, || two_stage_partition(&scenario, &req))??;
    let record = PartitionRecord::from_partition(&outcome.partition, outcome.n_thr);
    Ok(PartitionReport {
        document: ScenarioDocument::new(scenario, Some(record)),
        outcome,
    })
}

/// Recalibrates the shipped fixture tables and writes them into `dir`.
pub fn fixtures(dir: &Path, workers: Option<usize>) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for table in published_tables() {
        let fitted = with_workers(workers, || calibrate_table(&table))??;
        let path = dir.join(format!("{}.toml", table.name));
        std::fs::write(&path, fitted.to_toml()?).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Relative paths are placed under `$STARNOMA_OUTPUT_DIR` when it is set.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes a report in the requested format; `timestamp` adds a first line
/// (CSV) or field (JSON) with the generation time.
pub fn write_report<W: std::io::Write>(
    out: &mut W,
    report: &RunReport,
    format: OutputFormat,
    timestamp: Option<u64>,
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(out, &report.rows, timestamp),
        OutputFormat::Json => write_json(out, report, timestamp),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: u8) -> RunSpec {
        RunSpec {
            scenario: ScenarioSpec::preset(id),
            mode: Mode::Analytic,
            sweep: Sweep {
                start: 0.0,
                stop: 10.0,
                step: 5.0,
            },
            trials: 1000,
            seed: 1,
            workers: None,
            partition: PartitionSource::Fixture,
            allocation: AllocationSettings::default(),
            baselines: Baselines::default(),
            strict_sumrate: false,
        }
    }

    #[test]
    fn sweep_grid() {
        let s = Sweep {
            start: -10.0,
            stop: 40.0,
            step: 2.5,
        };
        let p = s.points().unwrap();
        assert_eq!(p.len(), 21);
        assert_eq!(*p.last().unwrap(), 40.0);
        assert!(Sweep { step: 0.0, ..s }.points().is_err());
    }

    #[test]
    fn analytic_run_shape() {
        let r = run(&spec(2)).unwrap();
        assert_eq!(r.rows.len(), 9);
        assert!(r
            .rows
            .iter()
            .all(|row| row.op_mc.is_none() && row.op_exact.is_some()));
        assert_eq!(r.partition.counts(), &[16, 20, 24]);
    }

    #[test]
    fn exit_codes() {
        let mut s = spec(2);
        s.sweep.step = -1.0;
        assert_eq!(run(&s).unwrap_err().exit_code(), 2);

        let mut s = spec(2);
        s.scenario.n_total = Some(61);
        assert_eq!(run(&s).unwrap_err().exit_code(), 2);

        let mut s = spec(2);
        s.mode = Mode::MonteCarlo;
        s.trials = 10;
        assert_eq!(run(&s).unwrap_err().exit_code(), 2);

        let mut s = spec(2);
        s.partition = PartitionSource::TwoStage;
        s.allocation.r_min = Some(vec![0.0, 0.0, 40.0]);
        s.allocation.realizations = 1000;
        assert_eq!(run(&s).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn relative_output_goes_under_env_dir() {
        // the variable is not set by the test harness
        if std::env::var_os(OUTPUT_DIR_ENV).is_none() {
            assert_eq!(resolve_output(Path::new("a.csv")), PathBuf::from("a.csv"));
        }
        assert_eq!(
            resolve_output(Path::new("/x/a.csv")),
            PathBuf::from("/x/a.csv")
        );
    }
}
