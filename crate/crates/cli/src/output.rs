//! Result rows, CSV emission and the run manifest. All numeric fields use
//! Rust's shortest-roundtrip formatting ('.' decimals, no separators), so
//! identical inputs produce byte-identical files.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

/// One sweep result: a single (trial, architecture, direction, SNR) cell.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub trial: u32,
    pub architecture: &'static str,
    pub direction: &'static str,
    pub snr_db: f64,
    pub sum_rate_bps_hz: f64,
    pub per_user_sinr: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub const SWEEP_HEADER: &str =
    "trial,architecture,direction,snr_db,sum_rate_bps_hz,per_user_sinr,iterations,converged";

pub fn write_sweep_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        let sinrs = r
            .per_user_sinr
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.trial,
            r.architecture,
            r.direction,
            r.snr_db,
            r.sum_rate_bps_hz,
            sinrs,
            r.iterations,
            r.converged
        )?;
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Convergence-trace CSV: `iter,sum_rate_bps_hz,p_change_l1`.
pub fn write_convergence_csv(
    trace: &[f64],
    p_change: &[f64],
    path: &Path,
) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "iter,sum_rate_bps_hz,p_change_l1")?;
    for (i, change) in p_change.iter().enumerate() {
        writeln!(out, "{},{},{}", i + 1, trace[i + 1], change)?;
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Run provenance written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub config_sha256: String,
    pub wall_time_ms: u128,
    pub outputs: Vec<String>,
    /// Combined digest of every ray set consumed (present for sweeps); both
    /// architectures draw from the same sets by construction and the runner
    /// asserts it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_sha256: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn write_manifest(manifest: &RunManifest, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("run-manifest.json");
    let mut bytes = serde_json::to_vec_pretty(manifest)?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
