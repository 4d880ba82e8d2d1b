//! CSV and file output.
//!
//! All numeric fields go through one fixed formatter so reruns of the same
//! batch produce byte-identical files on any platform, and every file is
//! written through a temp-plus-rename so a crash never leaves a truncated
//! artifact behind.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::eval::{served_load_cdf, BatchResult, Cdf, CdfFilter, EvalError, ScenarioRecord};

/// Formats with six significant digits and a '.' separator. Zero prints as
/// "0"; integers above 10^6 keep all their digits.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Writes `bytes` to a same-directory temp file and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(format!(".{}", std::process::id()));
    tmp_name.push(".tmp.");
    tmp_name.push(file_name);
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => PathBuf::from(&tmp_name),
    };
    fs::write(&tmp, bytes)?;
    match fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn push_record_row(out: &mut String, r: &ScenarioRecord) {
    let alpha = r
        .result
        .alpha
        .map(format_sig6)
        .unwrap_or_default();
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{}",
        r.master_seed,
        r.scenario_index,
        r.scenario_seed,
        r.n_aps,
        format_sig6(r.area_km),
        r.result.topology,
        r.result.feasible,
        alpha,
        format_sig6(r.result.total_demand_mbps),
        format_sig6(r.result.served_mbps),
    );
}

/// One row per (scenario, topology) record.
pub fn results_csv(records: &[ScenarioRecord]) -> String {
    let mut out = String::from(
        "master_seed,scenario_index,scenario_seed,n_aps,area_km,topology,feasible,alpha,total_demand_mbps,served_mbps\n",
    );
    for r in records {
        push_record_row(&mut out, r);
    }
    out
}

/// One row per (topology, n_aps, area) group.
pub fn summary_csv(result: &BatchResult) -> String {
    let mut out = String::from(
        "topology,n_aps,area_km,scenarios,feasible_count,feasibility_pct,mean_served_mbps,served_samples,mean_demand_mbps\n",
    );
    for s in &result.summaries {
        let mean_served = s.mean_served_mbps.map(format_sig6).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.topology,
            s.n_aps,
            format_sig6(s.area_km),
            s.scenarios,
            s.feasible_count,
            format_sig6(s.feasibility_pct),
            mean_served,
            s.served_samples,
            format_sig6(s.mean_demand_mbps),
        );
    }
    out
}

/// One row per sample: the served load and its empirical CDF value.
pub fn cdf_csv(cdf: &Cdf) -> String {
    let mut out = String::from("served_mbps,cdf\n");
    for &(x, f) in &cdf.points {
        let _ = writeln!(out, "{},{}", format_sig6(x), format_sig6(f));
    }
    out
}

/// Writes results.csv, summary.csv, and one cdf_<topology>.csv per
/// topology in the batch into `dir`, creating it if needed. Topologies
/// whose filtered sample set is empty get no CDF file. Returns the paths
/// written.
pub fn write_batch_outputs(
    dir: &Path,
    result: &BatchResult,
    filter: CdfFilter,
) -> Result<Vec<PathBuf>, EvalError> {
    fs::create_dir_all(dir).map_err(io_eval)?;
    let mut written = Vec::new();

    let results_path = dir.join("results.csv");
    atomic_write(&results_path, results_csv(&result.records).as_bytes()).map_err(io_eval)?;
    written.push(results_path);

    let summary_path = dir.join("summary.csv");
    atomic_write(&summary_path, summary_csv(result).as_bytes()).map_err(io_eval)?;
    written.push(summary_path);

    let mut topologies: Vec<_> = result.records.iter().map(|r| r.result.topology).collect();
    topologies.sort();
    topologies.dedup();
    for t in topologies {
        let cdf = match served_load_cdf(&result.records, t, filter) {
            Ok(cdf) => cdf,
            Err(EvalError::EmptySelection) => continue,
            Err(e) => return Err(e),
        };
        let path = dir.join(format!("cdf_{t}.csv"));
        atomic_write(&path, cdf_csv(&cdf).as_bytes()).map_err(io_eval)?;
        written.push(path);
    }
    Ok(written)
}

fn io_eval(e: io::Error) -> EvalError {
    EvalError::InvalidConfig(format!("output: {e}"))
}
