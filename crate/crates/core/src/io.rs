//! Comma-delimited data files with a header row.
//!
//! Floats are written in Rust's shortest round-trip form, so a value read
//! back is bit-identical to the one written.

use std::path::Path;

use num_complex::Complex64;

use crate::echo::EchoSpectrum;
use crate::error::{Error, Result};
use crate::scene::BandPlan;

pub const SPECTRUM_HEADER: [&str; 6] = ["m", "frequency_hz", "re", "im", "power", "phase_rad"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Writes a header and numeric rows.
pub fn write_table(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Parse(format!(
                "row of {} values for {} columns in {}",
                row.len(),
                header.len(),
                path.display()
            )));
        }
        w.write_record(row.iter().map(|x| fmt_f64(*x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a header and already formatted rows.
pub fn write_records(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum(path: &Path, spectrum: &EchoSpectrum) -> Result<()> {
    let rows = spectrum.values.iter().enumerate().map(|(m, y)| {
        vec![
            m as f64,
            spectrum.plan.frequency(m),
            y.re,
            y.im,
            y.norm(),
            y.arg(),
        ]
    });
    write_table(path, &SPECTRUM_HEADER, rows)
}

/// Reads a spectrum written by [`write_spectrum`] for the given plan. Only
/// the `m`, `re` and `im` columns are used.
pub fn read_spectrum(path: &Path, plan: BandPlan) -> Result<EchoSpectrum> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("{}: missing column '{name}'", path.display())))
    };
    let (cm, cre, cim) = (col("m")?, col("re")?, col("im")?);
    let mut values = Vec::with_capacity(plan.len());
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| -> Result<&str> {
            rec.get(c)
                .ok_or_else(|| Error::Parse(format!("{}: short row {}", path.display(), row + 2)))
        };
        let num = |c: usize| -> Result<f64> {
            field(c)?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{}: row {}: {e}", path.display(), row + 2)))
        };
        let m: usize = field(cm)?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("{}: row {}: {e}", path.display(), row + 2)))?;
        if m != row {
            return Err(Error::Parse(format!(
                "{}: expected subcarrier {row}, found {m}",
                path.display()
            )));
        }
        values.push(Complex64::new(num(cre)?, num(cim)?));
    }
    if values.len() != plan.len() {
        return Err(Error::Parse(format!(
            "{}: {} subcarriers, band plan has {}",
            path.display(),
            values.len(),
            plan.len()
        )));
    }
    Ok(EchoSpectrum { plan, values })
}

/// File name of the spectrum of one group and sweep.
pub fn spectrum_file_name(group: usize, sweep: usize) -> String {
    format!("spectrum_g{group}_s{sweep}.csv")
}
