//! File emission: CSV tables (17 significant digits, LF line endings) and
//! JSON mirrors of the same payloads.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{ensure, Context, Result};
use serde::Serialize;

use eprtel_core::phasespace::Histogram1D;
use eprtel_core::teleport::{DensityPair, SweepRow};

/// Scientific notation with 17 significant digits: enough to round-trip any
/// f64 bit pattern, so regression files are byte-stable.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_lines(path: &Path, lines: Vec<String>) -> Result<()> {
    let mut file =
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    for line in lines {
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

fn ensure_finite(path: &Path, v: f64) -> Result<()> {
    ensure!(v.is_finite(), "non-finite value in {}", path.display());
    Ok(())
}

pub fn write_histogram_csv(path: &Path, hist: &Histogram1D, unit: &str) -> Result<()> {
    let mut lines = vec![format!("bin_left_{unit},bin_right_{unit},count")];
    for (i, count) in hist.counts.iter().enumerate() {
        let (l, r) = (hist.bin_edges[i], hist.bin_edges[i + 1]);
        ensure_finite(path, l)?;
        ensure_finite(path, r)?;
        lines.push(format!("{},{},{count}", fmt_f64(l), fmt_f64(r)));
    }
    write_lines(path, lines)
}

/// Two histograms over identical bins, one count column each.
pub fn write_histogram_pair_csv(
    path: &Path,
    unit: &str,
    series: [(&str, &Histogram1D); 2],
) -> Result<()> {
    let [(name_a, a), (name_b, b)] = series;
    ensure!(a.bin_edges == b.bin_edges, "histogram bin layouts differ");
    let mut lines = vec![format!(
        "bin_left_{unit},bin_right_{unit},{name_a}_count,{name_b}_count"
    )];
    for i in 0..a.counts.len() {
        let (l, r) = (a.bin_edges[i], a.bin_edges[i + 1]);
        ensure_finite(path, l)?;
        ensure_finite(path, r)?;
        lines.push(format!(
            "{},{},{},{}",
            fmt_f64(l),
            fmt_f64(r),
            a.counts[i],
            b.counts[i]
        ));
    }
    write_lines(path, lines)
}

pub fn write_density_csv(path: &Path, pair: &DensityPair, unit: &str) -> Result<()> {
    let mut lines = vec![format!(
        "{unit},input_density_per_{unit},output_density_per_{unit}"
    )];
    for i in 0..pair.input.axis.len() {
        let (x, a, b) = (pair.input.axis[i], pair.input.values[i], pair.output.values[i]);
        ensure_finite(path, x)?;
        ensure_finite(path, a)?;
        ensure_finite(path, b)?;
        lines.push(format!("{},{},{}", fmt_f64(x), fmt_f64(a), fmt_f64(b)));
    }
    write_lines(path, lines)
}

pub fn write_sweep_csv(path: &Path, parameter: &str, rows: &[SweepRow]) -> Result<()> {
    let mut lines = vec![format!(
        "{parameter},product_over_hbar,f_max,fidelity_estimate,note"
    )];
    let opt = |v: Option<f64>| -> Result<String> {
        match v {
            Some(v) => {
                ensure!(v.is_finite(), "non-finite value in sweep row");
                Ok(fmt_f64(v))
            }
            None => Ok(String::new()),
        }
    };
    for row in rows {
        let note = row.note.as_deref().unwrap_or("").replace(',', ";");
        lines.push(format!(
            "{},{},{},{},{}",
            fmt_f64(row.value),
            opt(row.product_over_hbar)?,
            opt(row.f_max)?,
            opt(row.fidelity_estimate)?,
            note
        ));
    }
    write_lines(path, lines)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, payload: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(payload)?;
    write_lines(path, vec![text])
}
