//! Report writers: CSV tables, a JSON summary and P5 graymaps with JSON sidecars.

use anyhow::{Context, Result};
use clap::ValueEnum;
use csorbit::experiments::{Heatmap, Report, Table};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Pgm,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s.trim(), true)
    }
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&x| num(x)))?;
    }
    w.flush()?;
    Ok(())
}

fn write_checks(path: &Path, report: &Report) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["name", "value", "requirement", "passed"])?;
    for c in &report.checks {
        w.write_record([
            c.name.clone(),
            num(c.value),
            c.requirement.clone(),
            c.passed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Unmasked cells as x, y, Q rows, x fastest.
fn write_field_csv(path: &Path, map: &Heatmap) -> Result<()> {
    let field = &map.field;
    let (xs, ys) = (field.grid.xs(), field.grid.ys());
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "q"])?;
    for (iy, &y) in ys.iter().enumerate() {
        for (ix, &x) in xs.iter().enumerate() {
            if let Some(v) = field.get(ix, iy) {
                w.write_record([num(x), num(y), num(v)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    image: String,
    width: usize,
    height: usize,
    chart: csorbit::qscope::Chart,
    convention: csorbit::qscope::QConvention,
    x_range: (f64, f64),
    y_range: (f64, f64),
    /// Gray level g maps back to min + g / 255 * (max - min).
    min: f64,
    max: f64,
    row_order: &'a str,
    masked_level: u8,
}

fn write_pgm(dir: &Path, map: &Heatmap) -> Result<Vec<PathBuf>> {
    let field = &map.field;
    let (nx, ny) = field.grid.shape();
    let (lo, hi) = field.range();
    let span = hi - lo;
    let mut bytes = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let level = match field.get(ix, iy) {
                Some(v) if span > 0.0 => (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8,
                _ => 0,
            };
            bytes.push(level);
        }
    }
    let image = dir.join(format!("{}.pgm", map.name));
    fs::write(&image, bytes)?;
    let sidecar = Sidecar {
        image: format!("{}.pgm", map.name),
        width: nx,
        height: ny,
        chart: field.grid.chart(),
        convention: field.convention,
        x_range: field.grid.x_range(),
        y_range: field.grid.y_range(),
        min: lo,
        max: hi,
        row_order: "first row is the largest y",
        masked_level: 0,
    };
    let meta = dir.join(format!("{}.json", map.name));
    fs::write(&meta, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(vec![image, meta])
}

/// Writes `<out>/<command>/<name>.<ext>` for each requested format and returns the paths.
pub fn write_report(report: &Report, out: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let dir = out.join(&report.command);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            Format::Csv => {
                for t in &report.tables {
                    let path = dir.join(format!("{}.csv", t.name));
                    write_table(&path, t)?;
                    written.push(path);
                }
                for h in &report.heatmaps {
                    let path = dir.join(format!("{}.csv", h.name));
                    write_field_csv(&path, h)?;
                    written.push(path);
                }
                let path = dir.join("checks.csv");
                write_checks(&path, report)?;
                written.push(path);
            }
            Format::Json => {
                let path = dir.join("report.json");
                fs::write(&path, serde_json::to_string_pretty(report)? + "\n")?;
                written.push(path);
            }
            Format::Pgm => {
                for h in &report.heatmaps {
                    written.extend(write_pgm(&dir, h)?);
                }
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn format_names_parse() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!(" PGM".parse::<Format>().unwrap(), Format::Pgm);
        assert!("png".parse::<Format>().is_err());
    }
}
