//! CSV writers. Every file starts with a `#`-prefixed metadata block followed
//! by one header row; numbers are written in a fixed scientific format so that
//! repeated runs produce byte-identical files.

use crate::fractional::{FracGrid, KernelProfile};
use crate::grid::{Field, RadialGrid};
use crate::grid_solver::MassLedger;
use crate::limits::{ScanFlag, ScanRow};
use std::fmt::Write;

/// Ordered `key: value` lines of the metadata block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    /// Starts a block with the crate version.
    pub fn new() -> Self {
        Metadata { entries: vec![("version".into(), crate::VERSION.into())] }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    fn write(&self, out: &mut String) {
        for (k, v) in &self.entries {
            for line in v.lines() {
                let _ = writeln!(out, "# {k}: {line}");
            }
        }
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.12e}")
    }
}

fn table(meta: &Metadata, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    meta.write(&mut out);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Columns `t, mass, outflux_cum, sup_u, l1_to_reference`.
pub fn ledger_csv(ledger: &MassLedger, meta: &Metadata) -> String {
    table(
        meta,
        &["t", "mass", "outflux_cum", "sup_u", "l1_to_reference"],
        (0..ledger.len()).map(|i| {
            vec![
                num(ledger.times[i]),
                num(ledger.masses[i]),
                num(ledger.boundary_outflux[i]),
                num(ledger.sup_u[i]),
                num(ledger.l1_to_reference[i]),
            ]
        }),
    )
}

/// Columns `r, u` at the cell centres.
pub fn profile_csv(grid: &RadialGrid, field: &Field, meta: &Metadata) -> String {
    let meta = meta.clone().with("t", num(field.time));
    table(&meta, &["r", "u"], grid.centers().into_iter().zip(&field.values).map(|(r, u)| vec![num(r), num(*u)]))
}

/// Columns `x, u` (1D) or `x, y, u` (2D) on a fractional grid.
pub fn frac_profile_csv(grid: &FracGrid, values: &[f64], time: f64, meta: &Metadata) -> String {
    let meta = meta.clone().with("t", num(time));
    let header: &[&str] = if grid.dim == 1 { &["x", "u"] } else { &["x", "y", "u"] };
    table(
        &meta,
        header,
        grid.points().into_iter().zip(values).map(|(p, u)| {
            let mut row: Vec<String> = p.iter().map(|c| num(*c)).collect();
            row.push(num(*u));
            row
        }),
    )
}

/// Columns `x, F` of a computed kernel at `t = 1`, radial coordinate.
pub fn kernel_csv(kernel: &KernelProfile, meta: &Metadata) -> String {
    let meta = meta.clone().with("s", kernel.s).with("N", kernel.n).with("mass", num(kernel.mass));
    table(&meta, &["x", "F"], kernel.r.iter().zip(&kernel.f).map(|(x, f)| vec![num(*x), num(*f)]))
}

fn flag_text(flags: &[ScanFlag]) -> String {
    flags
        .iter()
        .map(|f| match f {
            ScanFlag::Failed(msg) => format!("failed({})", msg.replace([',', '\n'], ";")),
            other => format!("{other:?}"),
        })
        .collect::<Vec<_>>()
        .join("|")
}

/// Columns `eps, C, K, d, outer_mass_frac, ln_C, ln_K, flags`.
pub fn scan_csv(rows: &[ScanRow], meta: &Metadata) -> String {
    table(
        meta,
        &["eps", "C", "K", "d", "outer_mass_frac", "ln_C", "ln_K", "flags"],
        rows.iter().map(|r| {
            vec![
                num(r.eps),
                num(r.c),
                num(r.k_peak),
                num(r.d),
                num(r.outer_mass_frac),
                num(r.ln_c),
                num(r.ln_k),
                flag_text(&r.flags),
            ]
        }),
    )
}

/// Generic numeric table.
pub fn numeric_csv(header: &[&str], rows: &[Vec<f64>], meta: &Metadata) -> String {
    table(meta, header, rows.iter().map(|r| r.iter().map(|x| num(*x)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_layout() {
        let mut l = MassLedger::start(0.0, 1.0, 2.0);
        l.push(0.5, 0.9, 0.1, 1.5, 0.0);
        let csv = ledger_csv(&l, &Metadata::new().with("config_hash", "abc"));
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# version: "));
        assert_eq!(lines[1], "# config_hash: abc");
        assert_eq!(lines[2], "t,mass,outflux_cum,sup_u,l1_to_reference");
        assert_eq!(lines.len(), 5);
        assert!(lines[4].ends_with(",nan"));
    }
}
