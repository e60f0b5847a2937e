//! Report manifests and artifact writers.
//!
//! Every JSON artifact embeds a `RunManifest` so a report is traceable to
//! the exact configuration that produced it; reruns with identical
//! manifests are bit-identical apart from the timestamp.  Files are
//! written atomically (temp file in the target directory, then rename).

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use nwl_core::{Error, PeriodicGrid, Result, SpectralField, SymbolConfig, WaveProfile};

use crate::config::{RunConfig, Tolerances};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub symbol: SymbolConfig,
    pub n: usize,
    pub m_trunc: u64,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub threads: usize,
    /// Wall-clock seconds since the Unix epoch; the only field allowed to
    /// differ between reruns of the same manifest.
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig, threads: usize) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            symbol: cfg.symbol.clone(),
            n: cfg.n,
            m_trunc: cfg.m_trunc,
            tolerances: cfg.tolerances.clone(),
            seed: cfg.seed,
            threads,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// Output directory resolution: `NWL_OUT` env var beats the `--out` flag
/// beats `./out`.
pub fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    if let Ok(env) = std::env::var("NWL_OUT") {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    flag.map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("artifact")
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

/// Profile CSV: header `x,phi`, one row per grid point.
pub fn write_profile_csv(path: &Path, field: &SpectralField) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["x", "phi"]).map_err(csv_err)?;
        for (j, v) in field.values().iter().enumerate() {
            w.write_record([
                format!("{:.17e}", field.grid().point(j)),
                format!("{v:.17e}"),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
    }
    atomic_write(path, &buf)
}

pub fn read_profile_csv(path: &Path) -> Result<SpectralField> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let v: f64 = rec
            .get(1)
            .ok_or_else(|| Error::InvalidInput("profile CSV needs two columns".into()))?
            .parse()
            .map_err(|e| Error::InvalidInput(format!("bad profile value: {e}")))?;
        values.push(v);
    }
    let grid = PeriodicGrid::new(values.len())?;
    SpectralField::from_values(grid, values)
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

/// Companion JSON for a profile CSV: the scalars that make the samples a
/// traveling wave.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub manifest: RunManifest,
    pub c: f64,
    pub b: f64,
    pub residual_norm: f64,
    pub crest_height: f64,
}

impl ProfileMeta {
    pub fn new(manifest: RunManifest, p: &WaveProfile) -> Self {
        Self {
            manifest,
            c: p.c,
            b: p.b,
            residual_norm: p.residual_norm,
            crest_height: p.crest_height(),
        }
    }
}

/// Reassembles a `WaveProfile` from a profile CSV and its companion JSON.
pub fn load_profile(csv_path: &Path, meta_path: &Path) -> Result<(WaveProfile, ProfileMeta)> {
    let field = read_profile_csv(csv_path)?;
    let text = std::fs::read_to_string(meta_path)?;
    let meta: ProfileMeta = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", meta_path.display())))?;
    let symbol = meta.manifest.symbol.build()?;
    let p = WaveProfile::from_parts(field, meta.c, meta.b, symbol)?;
    Ok((p, meta))
}
