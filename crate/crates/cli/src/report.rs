//! Human-readable summaries and gnuplot-ready data files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::config::Method;
use crate::runner::{format_sig, ResultRow};

/// Per-sweep summary: minimum average power and its location per method,
/// plus how often the burst constraint sits on its bound.
pub fn report(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    if rows.is_empty() {
        return "no rows\n".to_string();
    }
    if rows.iter().all(|r| !r.feasible) {
        let _ = writeln!(out, "all rows infeasible");
        return out;
    }
    let sweep_var = &rows[0].sweep_var;
    for method in [
        Method::ClosedForm,
        Method::Sa,
        Method::Oracle,
        Method::Simulate,
    ] {
        let of_method: Vec<&ResultRow> = rows.iter().filter(|r| r.method == method).collect();
        if of_method.is_empty() {
            continue;
        }
        let feasible: Vec<&&ResultRow> = of_method.iter().filter(|r| r.feasible).collect();
        if feasible.is_empty() {
            let _ = writeln!(out, "{method}: all {} points infeasible", of_method.len());
            continue;
        }
        let best = feasible
            .iter()
            .min_by(|a, b| a.p_avg_w.partial_cmp(&b.p_avg_w).unwrap())
            .unwrap();
        let active = of_method.iter().filter(|r| r.eps_n_active).count();
        let _ = writeln!(
            out,
            "{method}: min P_a = {} W ({} dBW) at {sweep_var} = {}; \
             {}/{} points feasible, eps_N on its bound at {active}",
            format_sig(best.p_avg_w, 9),
            format_sig(best.p_avg_dbw, 12),
            format_sig(best.value, 9),
            feasible.len(),
            of_method.len(),
        );
        if method == Method::Sa && sweep_var == "eps_out" {
            let _ = writeln!(
                out,
                "located eps_out* (argmin of sa column): {}",
                format_sig(best.value, 9)
            );
        }
    }
    out
}

/// Emit two-column (value, P_a) files per method next to the CSV, for
/// plotting. Infeasible points are skipped in the plot data.
pub fn write_plot_data(rows: &[ResultRow], csv_path: &Path) -> Result<Vec<PathBuf>> {
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    let dir = csv_path.parent().unwrap_or_else(|| Path::new("."));
    let mut written = Vec::new();
    for method in [
        Method::ClosedForm,
        Method::Sa,
        Method::Oracle,
        Method::Simulate,
    ] {
        let of_method: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.method == method && r.feasible)
            .collect();
        if of_method.is_empty() {
            continue;
        }
        let path = dir.join(format!("{stem}_{method}.dat"));
        let mut body = String::new();
        for row in of_method {
            let _ = writeln!(
                body,
                "{} {}",
                format_sig(row.value, 9),
                format_sig(row.p_avg_w, 9)
            );
        }
        std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
