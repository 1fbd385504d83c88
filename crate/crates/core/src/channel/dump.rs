//! Per-element debug records.

use std::io::{self, Write};

use crate::model::Side;

pub const ELEMENT_CSV_HEADER: &str = "side,owner,element,user,zeta,eta,phase,re,im";

/// One element's contribution to one user, before path gain. `phase` is the
/// phase error for the owner and the residual phase for other users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementRecord {
    pub side: Side,
    pub owner: usize,
    pub element: usize,
    pub user: usize,
    pub zeta: f64,
    pub eta: f64,
    pub phase: f64,
    pub re: f64,
    pub im: f64,
}

/// Writes records as CSV with one-based user indices.
pub fn write_elements_csv<W: Write>(out: &mut W, records: &[ElementRecord]) -> io::Result<()> {
    writeln!(out, "{ELEMENT_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e}",
            r.side.symbol(),
            r.owner + 1,
            r.element,
            r.user + 1,
            r.zeta,
            r.eta,
            r.phase,
            r.re,
            r.im
        )?;
    }
    Ok(())
}
