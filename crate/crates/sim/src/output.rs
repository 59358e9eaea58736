//! CSV emission and parse-back of result rows.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{SimError, SimResult};
use crate::experiment::ResultRow;

pub const HEADER: [&str; 8] = [
    "scheme",
    "n_urllc",
    "epsilon",
    "seed",
    "embb_rate_bps",
    "bs_profit",
    "urllc_utility",
    "drops",
];

/// Writes the header and one line per row; rows must be non-empty, finite and
/// unique by key.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> SimResult<()> {
    if rows.is_empty() {
        return Err(SimError::EmptyRows);
    }
    let mut seen = BTreeSet::new();
    for r in rows {
        if !(r.epsilon.is_finite() && r.embb_rate_bps.is_finite() && r.bs_profit.is_finite() && r.urllc_utility.is_finite()) {
            return Err(SimError::config("rows", format!("non-finite value in row {}", r.key_string())));
        }
        if !seen.insert((r.scheme, r.n_urllc, r.epsilon.to_bits(), r.seed)) {
            return Err(SimError::DuplicateRow(r.key_string()));
        }
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(true)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> SimResult<()> {
    let file = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub fn read_csv<R: Read>(input: R) -> SimResult<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(SimError::config("csv header", format!("unexpected header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(SimError::from)).collect()
}

pub fn parse_csv(path: &Path) -> SimResult<Vec<ResultRow>> {
    read_csv(std::fs::File::open(path)?)
}
