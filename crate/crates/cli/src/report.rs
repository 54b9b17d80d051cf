//! Preset output: a CSV table, `key = value` summary lines and extra files.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Formats a float with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Everything a preset produces.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub preset: String,
    pub table: Table,
    pub summary: Vec<(String, String)>,
    /// Invariant violations; any entry makes the run fail.
    pub violations: Vec<String>,
    /// Extra files `(name, contents)` written next to the CSV.
    pub artifacts: Vec<(String, String)>,
}

impl Report {
    pub fn new(preset: &str, table: Table) -> Self {
        Self {
            preset: preset.to_string(),
            table,
            ..Default::default()
        }
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Display) {
        self.summary.push((key.into(), value.to_string()));
    }

    /// Records a float, in scientific notation when very small or large.
    pub fn metric(&mut self, key: impl Into<String>, v: f64) {
        let a = v.abs();
        if a == 0.0 || (1e-3..1e6).contains(&a) {
            self.note(key, v);
        } else {
            self.note(key, format!("{v:e}"));
        }
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.summary {
            s.push_str(&format!("{k} = {v}\n"));
        }
        for v in &self.violations {
            s.push_str(&format!("violation = {v}\n"));
        }
        s
    }

    /// Writes the CSV and artifacts into `dir`, returning the CSV path.
    pub fn write_files(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let csv_path = dir.join(format!("{}.csv", self.preset));
        let file = std::fs::File::create(&csv_path)
            .with_context(|| format!("cannot write {}", csv_path.display()))?;
        self.table.write_csv(std::io::BufWriter::new(file))?;
        for (name, contents) in &self.artifacts {
            let p = dir.join(name);
            std::fs::write(&p, contents).with_context(|| format!("cannot write {}", p.display()))?;
        }
        Ok(csv_path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-45.84096), "-4.5840960000000003e1");
        let back: f64 = num(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["x".into(), num(1.0)]);
        assert_eq!(t.to_csv_string(), "a,b\nx,1.0000000000000000e0\n");
    }
}
