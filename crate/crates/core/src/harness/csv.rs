//! Fixed-format CSV time series.

use std::fs;
use std::io;
use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;

/// Header names for a run in dimension `n`.
pub fn diagnostics_header(n: usize) -> Vec<String> {
    let mut cols: Vec<String> = [
        "t",
        "mass",
        "grad_norm",
        "lr_norm_2s2",
        "natural_energy",
        "shifted_energy",
        "pc_quantity",
        "je_norm",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend((1..=n).map(|a| format!("momentum_invariant_{a}")));
    cols.push("boundary_mass".into());
    cols.push("spectral_tail".into());
    cols.extend((1..=n).map(|a| format!("peak_location_{a}")));
    cols
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        first = false;
        out.push_str(&format_value(v));
    }
    out.push('\n');
}

/// Renders records as CSV text with a header row.
pub fn diagnostics_csv(n: usize, records: &[DiagnosticsRecord]) -> String {
    let mut out = diagnostics_header(n).join(",");
    out.push('\n');
    for r in records {
        let row = [
            r.t,
            r.mass,
            r.grad_norm,
            r.lr_norm_2s2,
            r.natural_energy,
            r.shifted_energy,
            r.pc_quantity,
            r.je_norm,
        ]
        .into_iter()
        .chain(r.momentum_invariant.iter().copied())
        .chain([r.boundary_mass, r.spectral_tail])
        .chain(r.peak_location.iter().copied());
        push_row(&mut out, row);
    }
    out
}

/// Renders named columns of equal length.
pub fn columns_csv(names: &[&str], columns: &[&[f64]]) -> String {
    let mut out = names.join(",");
    out.push('\n');
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    for i in 0..rows {
        push_row(&mut out, columns.iter().map(|c| c[i]));
    }
    out
}

pub fn write_diagnostics_csv(
    path: &Path,
    n: usize,
    records: &[DiagnosticsRecord],
) -> io::Result<()> {
    fs::write(path, diagnostics_csv(n, records))
}
