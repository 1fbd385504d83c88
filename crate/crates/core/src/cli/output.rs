//! CSV and JSON writers for sweep tables.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::json;

use super::RunReport;
use crate::model::PartitionRecord;

/// Fixed leading columns; baseline columns follow when present.
pub const CSV_COLUMNS: [&str; 10] = [
    "p_dbm",
    "user",
    "op_exact",
    "op_asym",
    "op_mc",
    "op_se",
    "sumrate",
    "sumrate_se",
    "trials",
    "seed",
];
const BASELINE_COLUMNS: [&str; 4] = ["noma_op", "noma_sumrate", "oma_op", "oma_sumrate"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// One user at one power. Missing values are empty in CSV and null in JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Row {
    pub p_dbm: f64,
    /// One-based user index.
    pub user: usize,
    pub op_exact: Option<f64>,
    pub op_asym: Option<f64>,
    pub op_mc: Option<f64>,
    pub op_se: Option<f64>,
    pub sumrate: Option<f64>,
    pub sumrate_se: Option<f64>,
    pub trials: Option<u64>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noma_op: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noma_sumrate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oma_op: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oma_sumrate: Option<f64>,
}

impl Row {
    fn baselines(&self) -> [Option<f64>; 4] {
        [
            self.noma_op,
            self.noma_sumrate,
            self.oma_op,
            self.oma_sumrate,
        ]
    }
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(out: &mut W, rows: &[Row], timestamp: Option<u64>) -> io::Result<()> {
    if let Some(t) = timestamp {
        writeln!(out, "# generated at unix time {t}")?;
    }
    // a baseline column is kept when any row carries it
    let keep: Vec<bool> = (0..4)
        .map(|i| rows.iter().any(|r| r.baselines()[i].is_some()))
        .collect();
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    header.extend(
        BASELINE_COLUMNS
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(c, _)| *c),
    );
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        let mut cells = vec![
            r.p_dbm.to_string(),
            r.user.to_string(),
            cell(r.op_exact),
            cell(r.op_asym),
            cell(r.op_mc),
            cell(r.op_se),
            cell(r.sumrate),
            cell(r.sumrate_se),
            cell(r.trials),
            r.seed.to_string(),
        ];
        cells.extend(
            r.baselines()
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(v, _)| cell(*v)),
        );
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_json<W: Write>(
    out: &mut W,
    report: &RunReport,
    timestamp: Option<u64>,
) -> io::Result<()> {
    let mut doc = json!({
        "scenario": report.scenario,
        "partition": PartitionRecord::from_partition(&report.partition, None),
        "rows": report.rows,
    });
    if let Some(t) = timestamp {
        doc["generated_unix"] = json!(t);
    }
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)
}
