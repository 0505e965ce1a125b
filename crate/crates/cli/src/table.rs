//! CSV output with a schema comment line and fixed numeric formatting.

use std::path::Path;

use crate::error::{CliError, CliResult};

pub const RUN_HISTORY_SCHEMA: &str = "almab run-history v1";

pub const RUN_HISTORY_COLUMNS: [&str; 11] = [
    "round",
    "arm",
    "reward_realized",
    "reward_mean_agents",
    "regret_pseudo_increment",
    "regret_pseudo_cum",
    "regret_realized_cum",
    "comm_cost_cum",
    "issue_round",
    "apply_round",
    "wall_ms",
];

/// Formats `v` with 6 significant digits, plain notation for moderate
/// magnitudes and exponent notation otherwise.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// Rows of string cells under a header, written as one CSV document.
#[derive(Debug, Clone)]
pub struct Table {
    schema: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &str, header: &[&str]) -> Self {
        Self { schema: schema.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut out = format!("# {}\n", self.schema).into_bytes();
        let mut writer = csv::Writer::from_writer(&mut out);
        writer.write_record(&self.header).map_err(|e| CliError::Io(e.to_string()))?;
        for row in &self.rows {
            writer.write_record(row).map_err(|e| CliError::Io(e.to_string()))?;
        }
        writer.flush().map_err(|e| CliError::Io(e.to_string()))?;
        drop(writer);
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| CliError::io(path, e))
    }
}

/// Reads a CSV written by [`Table`], skipping comment lines. Returns the
/// header and the rows.
pub fn read_table(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let header = reader.headers().map_err(|e| CliError::io(path, e))?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()).map_err(|e| CliError::io(path, e)))
        .collect::<CliResult<Vec<Vec<String>>>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(75.8304), "75.8304");
        assert_eq!(sig6(0.123456789), "0.123457");
        assert_eq!(sig6(-2.5e-7), "-2.5e-7");
        assert_eq!(sig6(123456789.0), "1.23457e8");
        assert_eq!(sig6(999999.4), "999999");
        assert_eq!(sig6(-1e-12), "-1e-12");
    }

    #[test]
    fn round_trips_through_reader() {
        let mut t = Table::new("test v1", &["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        t.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# test v1\na,b\n"));
        let (header, rows) = read_table(&path).unwrap();
        assert_eq!(header, vec!["a", "b"]);
        assert_eq!(rows, vec![vec!["1".to_string(), "x,y".to_string()]]);
    }
}
