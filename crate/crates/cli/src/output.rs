//! Artifact writers: JSON records, CSV series, aligned text tables.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use nmk_core::measures::write_series_csv;
use serde::Serialize;

use crate::analysis::{Series, WitnessTable};

pub const SCHEMA: &str = "nmk/1";

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let mut w = create(dir, name)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn write_series(dir: &Path, name: &str, series: &Series) -> Result<()> {
    let w = create(dir, name)?;
    write_series_csv(w, series)?;
    Ok(())
}

pub fn table_csv(table: &WitnessTable) -> Result<String> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["state_a", "state_b", "class", "value", "violated"])?;
    for r in &table.rows {
        wr.write_record([
            r.state_a.as_str(),
            r.state_b.as_str(),
            r.class.as_str(),
            &format!("{:.6}", r.value),
            if r.violated { "true" } else { "false" },
        ])?;
    }
    Ok(String::from_utf8(wr.into_inner()?)?)
}

/// Classes whose rows agree within this tolerance are reported as degenerate.
const CLASS_TOL: f64 = 1e-6;

pub fn table_text(model: &str, table: &WitnessTable) -> String {
    let mut out = format!(
        "witness table, model {model}, t1 = {}, t2 = {}\n",
        table.t1, table.t2
    );
    let width = table
        .rows
        .iter()
        .map(|r| r.state_a.len() + r.state_b.len() + 2)
        .max()
        .unwrap_or(10)
        .max(10);
    out += &format!("{:<width$}  {:<18}  {:>10}  {}\n", "pair", "class", "W", "violated");
    for r in &table.rows {
        let pair = format!("{}, {}", r.state_a, r.state_b);
        out += &format!(
            "{pair:<width$}  {:<18}  {:>10.6}  {}\n",
            r.class,
            r.value,
            if r.violated { "yes" } else { "no" }
        );
    }
    out += "\nclasses\n";
    let mut classes: Vec<&str> = table.rows.iter().map(|r| r.class.as_str()).collect();
    classes.sort_unstable();
    classes.dedup();
    for c in classes {
        let vals: Vec<f64> = table.rows.iter().filter(|r| r.class == c).map(|r| r.value).collect();
        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
        let verdict = if hi - lo <= CLASS_TOL { "degenerate" } else { "split" };
        out += &format!(
            "  {c:<18} n = {:<2}  {lo:.6} .. {hi:.6}  {verdict}\n",
            vals.len()
        );
    }
    out
}
