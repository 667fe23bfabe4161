//! CSV and manifest emission.
//!
//! Every artifact is deterministic: fixed column order, shortest
//! round-trip float formatting, no timestamps. Identical runs produce
//! byte-identical files.

use crate::error::{Error, Result};
use crate::experiments::{EstimatedConstants, ExperimentReport, Prop3Row, SolveSummary};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Strip CSV-hostile characters out of a free-text cell.
fn sanitize(cell: &str) -> String {
    cell.replace([',', '\n', '\r'], ";")
}

pub fn constants_csv(c: &EstimatedConstants) -> String {
    format!("m,L,d,C_tilde\n{},{},{},{}\n", c.m, c.l, c.d, c.c_tilde)
}

pub fn prop3_csv(rows: &[Prop3Row]) -> String {
    let mut out =
        String::from("n,r_n,input_dist,output_dist,flow_sep,sep_bound,disjoint_flag,verdict\n");
    for row in rows {
        let verdict = if row.note.is_empty() { "ok".to_string() } else { sanitize(&row.note) };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.n,
            row.r_n,
            row.input_dist,
            row.output_dist,
            row.flow_sep,
            row.sep_bound,
            row.disjoint,
            verdict
        );
    }
    out
}

pub fn diagnostics_csv(solves: &[SolveSummary]) -> String {
    let mut out = String::from("label,steps,initial_hs,final_hs,mean_drift,l2_drift\n");
    for s in solves {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            sanitize(&s.label),
            s.steps,
            s.initial_hs,
            s.final_hs,
            s.mean_drift,
            s.l2_drift
        );
    }
    out
}

/// Write `constants.csv`, `prop3.csv` and `diagnostics.csv` into `dir`,
/// creating it if needed. These are derived artifacts, so existing files
/// are replaced.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    write_text(&dir.join("constants.csv"), &constants_csv(&report.constants))?;
    write_text(&dir.join("prop3.csv"), &prop3_csv(&report.rows))?;
    write_text(&dir.join("diagnostics.csv"), &diagnostics_csv(&report.solves))?;
    Ok(())
}

/// Record what ran: tool version, the subcommand, and the full canonical
/// configuration echo.
pub fn write_manifest(dir: &Path, command: &str, config_echo: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let content = format!(
        "tool = ipm {}\ncommand = {}\n\n{config_echo}",
        env!("CARGO_PKG_VERSION"),
        command
    );
    write_text(&dir.join("manifest.txt"), &content)
}
