//! Rate targets that make the allocation search land on given counts.
//!
//! The published allocation tables do not come with the rate targets,
//! outage ceiling or reference power behind them. For each table row the
//! search is replayed with a fixed `(epsilon, p_ref, realizations, seed)` and
//! every user's target is placed between the rates at the published count
//! and one element below it. The resulting fixture files are regression
//! data for this implementation, not published inputs.

use serde::{Deserialize, Serialize};

use super::search::RateSearch;
use super::{
    algorithm1_nthr, is_two_user, two_stage_partition, PartitionError, PartitionRequest,
    DEFAULT_P_REF_DBM, DEFAULT_REALIZATIONS, DEFAULT_SEED,
};
use crate::model::{preset, ModelError, Partition, Scenario};

/// Fixture file names and the preset each one belongs to.
pub const FIXTURE_NAMES: [(&str, u8); 3] = [("case1", 1), ("table2", 2), ("table3", 3)];

const FIXTURE_HEADER: &str = "\
# Calibration artifact. The rate targets below were fitted so that the
# allocation search reproduces the listed counts; they are not published
# inputs. Regenerate with `starnoma fixtures`.
";

const CASE1: &str = include_str!("../../fixtures/case1.toml");
const TABLE2: &str = include_str!("../../fixtures/table2.toml");
const TABLE3: &str = include_str!("../../fixtures/table3.toml");

/// Published counts of one table row, final remainder included.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub n_total: usize,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    pub name: &'static str,
    pub case: u8,
    pub epsilon: f64,
    pub p_ref_dbm: f64,
    pub realizations: u64,
    pub seed: u64,
    pub rows: Vec<CalibrationRow>,
}

fn rows(list: &[(usize, &[usize])]) -> Vec<CalibrationRow> {
    list.iter()
        .map(|&(n_total, counts)| CalibrationRow {
            n_total,
            counts: counts.to_vec(),
        })
        .collect()
}

/// The published allocations with the calibration settings used for them.
pub fn published_tables() -> Vec<CalibrationTable> {
    let table = |name, case, list: &[(usize, &[usize])]| CalibrationTable {
        name,
        case,
        epsilon: 0.6,
        p_ref_dbm: DEFAULT_P_REF_DBM,
        realizations: DEFAULT_REALIZATIONS,
        seed: DEFAULT_SEED,
        rows: rows(list),
    };
    vec![
        table(
            "case1",
            1,
            &[(64, &[26, 38]), (128, &[51, 77]), (256, &[102, 154])],
        ),
        table(
            "table2",
            2,
            &[
                (60, &[16, 20, 24]),
                (90, &[24, 30, 36]),
                (120, &[32, 40, 48]),
                (150, &[36, 50, 64]),
            ],
        ),
        table(
            "table3",
            3,
            &[
                (60, &[16, 20, 24]),
                (90, &[19, 30, 41]),
                (120, &[22, 40, 58]),
                (180, &[35, 60, 85]),
                (390, &[52, 130, 208]),
            ],
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRow {
    pub n_total: usize,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_thr: Option<usize>,
    pub r_min: Vec<f64>,
    /// Expected final counts.
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureTable {
    pub case: u8,
    pub p_ref_dbm: f64,
    pub realizations: u64,
    pub seed: u64,
    #[serde(default)]
    pub rows: Vec<FixtureRow>,
}

impl FixtureTable {
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, ModelError> {
        Ok(format!("{FIXTURE_HEADER}\n{}", toml::to_string(self)?))
    }

    /// Preset of this table resized to the row, carrying the row's targets.
    pub fn scenario(&self, row: &FixtureRow) -> Result<Scenario, ModelError> {
        let mut s = preset(self.case)?.with_n_total(row.n_total);
        for (u, r) in s.users.iter_mut().zip(&row.r_min) {
            u.r_min = *r;
        }
        Ok(s)
    }

    pub fn request(&self, row: &FixtureRow) -> PartitionRequest {
        PartitionRequest {
            epsilon: row.epsilon,
            r_min: row.r_min.clone(),
            p_ref_dbm: self.p_ref_dbm,
            realizations: self.realizations,
            seed: self.seed,
        }
    }
}

/// Shipped fixture by name.
pub fn fixture(name: &str) -> Option<Result<FixtureTable, ModelError>> {
    let text = match name {
        "case1" => CASE1,
        "table2" => TABLE2,
        "table3" => TABLE3,
        _ => return None,
    };
    Some(FixtureTable::from_toml(text))
}

/// Shortest decimal in `(lo, hi]`, preferring values near `target`.
fn round_within(lo: f64, hi: f64, target: f64) -> f64 {
    for digits in 1..=15 {
        let scale = 10f64.powi(digits);
        let v = (target * scale).round() / scale;
        if v > lo && v <= hi {
            return v;
        }
    }
    target
}

/// Target for user `k` growing from `start` to `target` under `working`.
fn fit_target(
    scenario: &Scenario,
    working: &[usize],
    k: usize,
    target: usize,
    table: &CalibrationTable,
) -> Result<f64, PartitionError> {
    let start = working[k];
    let part = Partition::new(scenario, working.to_vec())?;
    let mut search = RateSearch::new(
        scenario,
        &part,
        k,
        table.p_ref_dbm,
        table.realizations,
        table.seed,
    );
    let mut below = f64::NEG_INFINITY;
    let mut rate = search.rate()?;
    for _ in start..target {
        below = below.max(rate);
        search.grow();
        rate = search.rate()?;
    }
    if target == start {
        return Ok(round_within(0.8 * rate, rate, 0.9 * rate));
    }
    if !(rate > below) {
        return Err(PartitionError::Calibration(format!(
            "rate of U{} does not grow past {below} before {target} elements",
            k + 1
        )));
    }
    Ok(round_within(below, rate, rate - 0.25 * (rate - below)))
}

/// Fits the rate targets of one row and checks that the search reproduces it.
pub fn calibrate_row(
    table: &CalibrationTable,
    row: &CalibrationRow,
) -> Result<FixtureRow, PartitionError> {
    let scenario = preset(table.case)?.with_n_total(row.n_total);
    let k_users = scenario.num_users();
    if row.counts.len() != k_users || row.counts.iter().sum::<usize>() != row.n_total {
        return Err(PartitionError::Calibration(format!(
            "row {:?} does not match a {k_users}-user surface of {} elements",
            row.counts, row.n_total
        )));
    }
    let mut r_min = vec![0.0; k_users];
    let n_thr = if is_two_user(&scenario) {
        r_min[0] = fit_target(&scenario, &vec![1; k_users], 0, row.counts[0], table)?;
        None
    } else {
        let n_thr = algorithm1_nthr(&scenario, table.epsilon)?;
        if n_thr > row.counts[0] {
            return Err(PartitionError::Calibration(format!(
                "N_thr = {n_thr} exceeds the first count {}",
                row.counts[0]
            )));
        }
        let mut working = vec![n_thr; k_users];
        for k in 0..k_users {
            working[k] = if k == 0 { n_thr } else { working[k - 1] };
            r_min[k] = fit_target(&scenario, &working, k, row.counts[k], table)?;
            working[k] = row.counts[k];
        }
        Some(n_thr)
    };
    let fitted = FixtureRow {
        n_total: row.n_total,
        epsilon: table.epsilon,
        n_thr,
        r_min,
        counts: row.counts.clone(),
    };
    let check = FixtureTable {
        case: table.case,
        p_ref_dbm: table.p_ref_dbm,
        realizations: table.realizations,
        seed: table.seed,
        rows: vec![],
    };
    let out = two_stage_partition(&check.scenario(&fitted)?, &check.request(&fitted))?;
    if out.partition.counts() != row.counts.as_slice() || out.n_thr != n_thr {
        return Err(PartitionError::Calibration(format!(
            "fitted targets give {:?}, expected {:?}",
            out.partition.counts(),
            row.counts
        )));
    }
    Ok(fitted)
}

pub fn calibrate_table(table: &CalibrationTable) -> Result<FixtureTable, PartitionError> {
    Ok(FixtureTable {
        case: table.case,
        p_ref_dbm: table.p_ref_dbm,
        realizations: table.realizations,
        seed: table.seed,
        rows: table
            .rows
            .iter()
            .map(|r| calibrate_row(table, r))
            .collect::<Result<_, _>>()?,
    })
}
