//! Output formats: CSV grids, versioned text reports and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use kinscape::critana::{CriticalPointRecord, SearchOutcome, VerifyReport};
use serde::Serialize;

use crate::CliError;

pub const REPORT_HEADER: &str = "REPORT v1";

/// 17 significant digits: enough to round-trip every `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>().join(",")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), fmt_float)
}

/// Header naming the coordinates then `value`, and one row per lattice point.
pub fn grid_csv(names: &[String], rows: &[(Vec<f64>, f64)]) -> String {
    let mut out = String::new();
    out.push_str(&names.join(","));
    out.push_str(",value\n");
    for (x, v) in rows {
        for c in x {
            out.push_str(&fmt_float(*c));
            out.push(',');
        }
        out.push_str(&fmt_float(*v));
        out.push('\n');
    }
    out
}

pub fn antizeno_csv(rows: &[(u64, f64)]) -> String {
    let mut out = String::from("n,pmax\n");
    for (n, p) in rows {
        out.push_str(&format!("{n},{}\n", fmt_float(*p)));
    }
    out
}

fn record_block(out: &mut String, index: usize, r: &CriticalPointRecord) {
    out.push_str(&format!("\nrecord {index}\n"));
    out.push_str(&format!("chart {}\n", r.chart));
    out.push_str(&format!("names {}\n", r.names.join(",")));
    out.push_str(&format!("coords {}\n", fmt_list(&r.coords)));
    out.push_str(&format!("value {}\n", fmt_float(r.value)));
    out.push_str(&format!("grad_norm {}\n", fmt_float(r.grad_norm)));
    out.push_str(&format!("eigs {}\n", fmt_list(&r.hessian_eigs)));
    out.push_str(&format!("class {}\n", r.classification));
    if let Some(p) = r.probe_growth_order {
        out.push_str(&format!("probe_order {p}\n"));
    }
    if let Some(f) = &r.family {
        out.push_str(&format!("family {f}\n"));
    }
}

/// Search report: header, summary counts, then records by value descending.
pub fn critical_report(descriptor: &str, outcome: &SearchOutcome) -> String {
    let mut out = format!("{REPORT_HEADER}\ncommand critical\nlandscape {descriptor}\n");
    out.push_str(&format!("converged {}\n", outcome.converged));
    out.push_str(&format!("boundary {}\n", outcome.boundary));
    out.push_str(&format!("failed {}\n", outcome.failures.len()));
    out.push_str(&format!("records {}\n", outcome.records.len()));
    for (i, r) in outcome.records.iter().enumerate() {
        record_block(&mut out, i + 1, r);
    }
    out
}

pub fn verify_report(report: &VerifyReport) -> String {
    let passed = report.rows.iter().filter(|r| r.passed).count();
    let mut out = format!("{REPORT_HEADER}\ncommand verify\nrows {}\npassed {passed}\n", report.rows.len());
    for r in &report.rows {
        out.push_str(&format!("\nrow {}.{}\n", r.table, r.row));
        out.push_str(&format!("label {}\n", r.label));
        out.push_str(&format!("chart {}\n", r.chart));
        out.push_str(&format!("expected_value {}\n", fmt_float(r.expected_value)));
        out.push_str(&format!("expected_class {}\n", r.expected_class));
        out.push_str(&format!("samples {}\n", r.samples));
        out.push_str(&format!("max_value_error {}\n", fmt_float(r.max_value_error)));
        out.push_str(&format!("max_grad_norm {}\n", fmt_float(r.max_grad_norm)));
        out.push_str(&format!("max_hessian_error {}\n", fmt_opt(r.max_hessian_error)));
        out.push_str(&format!("max_spectrum_error {}\n", fmt_opt(r.max_spectrum_error)));
        let classes: Vec<&str> = r.classes.iter().map(|c| c.name()).collect();
        out.push_str(&format!("classes {}\n", classes.join(",")));
        out.push_str(&format!("status {}\n", if r.passed { "PASS" } else { "FAIL" }));
        for d in &r.diagnostics {
            out.push_str(&format!("diagnostic {d}\n"));
        }
    }
    out
}

/// Report of key-value pairs for the dynamics checks.
pub fn kv_report(command: &str, pairs: &[(&str, String)]) -> String {
    let mut out = format!("{REPORT_HEADER}\ncommand {command}\n");
    for (k, v) in pairs {
        out.push_str(&format!("{k} {v}\n"));
    }
    out
}

/// Everything needed to reproduce an output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub threads: usize,
    pub version: &'static str,
    pub wall_time_s: f64,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(contents.as_bytes()).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::Io(format!("{}: {e}", path.display())));
    }
    Ok(())
}

/// Writes `body` to `path` with its manifest, or to `stdout` without one.
pub fn emit(path: Option<&Path>, body: &str, manifest: &RunManifest, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => {
            write_atomic(p, body)?;
            let json = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Io(e.to_string()))?;
            write_atomic(&manifest_path(p), &(json + "\n"))
        }
        None => stdout.write_all(body.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_at_seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, -2.5e-300, 0.0, 0.06 * (9.0 + 6f64.sqrt())] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn grid_csv_layout() {
        let csv = grid_csv(&["b1".into(), "b2".into()], &[(vec![0.5, 1.0], 0.25), (vec![0.5, 2.0], 0.0)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "b1,b2,value");
        assert_eq!(lines.len(), 3);
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }

    #[test]
    fn atomic_write_leaves_no_partial_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, "a\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a\n");
        assert!(write_atomic(&dir.path().join("missing/out.csv"), "a").is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert_eq!(manifest_path(&p), dir.path().join("out.csv.manifest.json"));
    }
}
