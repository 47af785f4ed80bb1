//! Deterministic artifact writers.
//!
//! CSV bodies carry no timestamps and print every number with 17
//! significant digits, so identical configurations produce byte-identical
//! files. Wall-clock measurements only ever appear in JSON metadata.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::solver::{RunRecord, Snapshot};

/// 17 significant digits: enough to reproduce the exact f64 bit pattern.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `t,h,dt` series of a run.
pub fn series_csv(record: &RunRecord) -> String {
    let mut out = String::with_capacity(64 * record.series.len() + 16);
    out.push_str("t,h,dt\n");
    for p in &record.series {
        out.push_str(&fmt_num(p.t));
        out.push(',');
        out.push_str(&fmt_num(p.h));
        out.push(',');
        out.push_str(&fmt_num(p.dt));
        out.push('\n');
    }
    out
}

/// `x,u` profile of one snapshot, mapped back to physical coordinates.
pub fn snapshot_csv(snap: &Snapshot) -> String {
    let n = snap.v.len();
    let dx = 1.0 / (n - 1) as f64;
    let mut out = String::with_capacity(40 * n + 8);
    out.push_str("x,u\n");
    for (i, &u) in snap.v.iter().enumerate() {
        let x = i as f64 * dx * snap.h;
        out.push_str(&fmt_num(x));
        out.push(',');
        out.push_str(&fmt_num(u));
        out.push('\n');
    }
    out
}

/// Run summary as a JSON value.
pub fn summary_json(record: &RunRecord) -> serde_json::Value {
    json!({
        "params": record.params,
        "h_final": record.h_final(),
        "h_s": record.h_s,
        "steady_error": record.diag.final_h_gap,
        "profile_error": record.diag.final_profile_gap,
        "steps": record.diag.steps,
        "converged_at": record.diag.converged_at,
        "monotone_front": record.diag.monotone_front,
        "clamped_steps": record.diag.clamp_count,
        "wall_time": record.diag.wall_seconds,
    })
}

/// SHA-256 hash of the canonical (key-sorted) JSON encoding of a config.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let canonical = serde_json::to_string(&serde_json::to_value(config).expect("serializable"))
        .expect("serializable");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write `manifest.json`: resolved config, its hash, tool version, and the
/// artifact listing for the directory.
pub fn write_manifest<T: Serialize>(dir: &Path, config: &T, artifacts: &[String]) -> Result<()> {
    let manifest = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_hash": config_hash(config),
        "config": serde_json::to_value(config).expect("serializable"),
        "artifacts": artifacts,
    });
    fs::write(dir.join("manifest.json"), pretty(&manifest))?;
    Ok(())
}

/// Snapshot file name label: the sample time at micro resolution.
fn snapshot_label(t: f64) -> String {
    format!("{t:.6}")
}

/// Write `series.csv`, per-snapshot CSVs, and `summary.json` for one run.
/// Returns the artifact file names, manifest excluded.
pub fn write_run_artifacts(dir: &Path, record: &RunRecord) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut artifacts = Vec::new();

    fs::write(dir.join("series.csv"), series_csv(record))?;
    artifacts.push("series.csv".to_string());

    let mut used = BTreeSet::new();
    for snap in &record.snapshots {
        let mut name = format!("snapshot_{}.csv", snapshot_label(snap.t));
        let mut suffix = 1;
        while !used.insert(name.clone()) {
            suffix += 1;
            name = format!("snapshot_{}_{suffix}.csv", snapshot_label(snap.t));
        }
        fs::write(dir.join(&name), snapshot_csv(snap))?;
        artifacts.push(name);
    }

    fs::write(dir.join("summary.json"), pretty(&summary_json(record)))?;
    artifacts.push("summary.json".to_string());
    Ok(artifacts)
}

pub fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}
