//! Report-bundle assembly: every artifact is rendered to a string first,
//! hashed, and only then written, so the manifest can vouch for exactly the
//! bytes on disk. Nothing here depends on the wall clock; identical runs
//! produce identical bundles.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};
use strmom_core::backtester::ExecutionEvent;
use strmom_core::engine::RunOutput;
use strmom_core::error::{Error, Result};
use strmom_core::market_data::{spread_histogram, StreamSource, TickStream};
use strmom_core::report;

use crate::config::FileConfig;

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Rendered artifacts in write order; the manifest is appended last.
pub struct Bundle {
    pub dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Bundle {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    /// Writes everything plus a manifest carrying `extra` and per-file
    /// SHA-256 checksums. Returns the number of files written.
    pub fn write(self, manifest_extra: serde_json::Value) -> Result<usize> {
        fs::create_dir_all(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        let mut checksums = serde_json::Map::new();
        for (name, contents) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
            checksums.insert(
                name.clone(),
                json!({ "bytes": contents.len(), "sha256": sha256_hex(contents.as_bytes()) }),
            );
        }
        let mut manifest = manifest_extra;
        manifest["tool"] = json!({ "name": "strmom", "version": env!("CARGO_PKG_VERSION") });
        manifest["files"] = serde_json::Value::Object(checksums);
        let text = format!("{:#}\n", manifest);
        let path = self.dir.join("manifest.json");
        fs::write(&path, &text).map_err(|e| io_err(&path, e))?;
        Ok(self.files.len() + 1)
    }
}

fn stream_summary(stream: &TickStream) -> serde_json::Value {
    let quotes = stream.quotes();
    json!({
        "instrument": stream.instrument,
        "source": match stream.source {
            StreamSource::File => "file",
            StreamSource::Synthetic => "synthetic",
        },
        "ticks": quotes.len(),
        "first": report::timestamp_str(&quotes[0].timestamp),
        "last": report::timestamp_str(&quotes[quotes.len() - 1].timestamp),
    })
}

/// Assembles and writes the full single-run bundle. Returns the number of
/// files written.
pub fn write_run_bundle(
    dir: &Path,
    config: &FileConfig,
    stream: &TickStream,
    out: &RunOutput,
) -> Result<usize> {
    let mut bundle = Bundle::new(dir);
    bundle.push("nav.csv", report::nav_csv(&out.nav));
    bundle.push("executions.csv", report::executions_csv(&out.reports));
    bundle.push("scores.csv", report::scores_csv(&out.scores, &out.sets));
    bundle.push(
        "momentum_incoming.csv",
        report::momentum_histogram_csv(&out.momentum_incoming),
    );
    bundle.push(
        "momentum_outgoing.csv",
        report::momentum_histogram_csv(&out.momentum_outgoing),
    );
    let spreads = spread_histogram(stream, config.report.spread_bin_width)?;
    bundle.push("spread.csv", report::spread_histogram_csv(&spreads));
    bundle.push(
        "spin.csv",
        report::spin_histogram_csv(&out.spin_plus, &out.spin_minus),
    );

    let mut per_day: BTreeMap<chrono::NaiveDate, u64> = BTreeMap::new();
    let mut opens = 0u64;
    let mut closes = 0u64;
    let mut rate_limited = 0u64;
    for r in &out.reports {
        match r.event {
            ExecutionEvent::Open => {
                opens += 1;
                *per_day.entry(r.timestamp.date_naive()).or_default() += 1;
            }
            ExecutionEvent::Close => closes += 1,
            ExecutionEvent::RateLimited => rate_limited += 1,
        }
    }
    // Fill calendar gaps so day counts plot as a contiguous series.
    if let (Some(&first), Some(&last)) = (per_day.keys().next(), per_day.keys().next_back()) {
        let mut day = first;
        while day < last {
            day = day.succ_opt().expect("calendar overflow");
            per_day.entry(day).or_default();
        }
    }
    bundle.push("trades_per_day.csv", report::trades_per_day_csv(&per_day));

    let mut fuzzy = String::from("tau,fuzzy_spin\n");
    for (tau, s) in &out.fuzzy_spins {
        fuzzy.push_str(&format!("{tau},{s}\n"));
    }
    bundle.push("fuzzy_spins.csv", fuzzy);

    let manifest = json!({
        "command": "run",
        "config": config,
        "stream": stream_summary(stream),
        "results": {
            "final_nav": out.final_nav(),
            "nav_pct": out.nav_pct(),
            "optimal_set": out.optimal_set,
            "opens": opens,
            "closes": closes,
            "rate_limited": rate_limited,
            "momentum_skewness": out.momentum_skewness,
            "sigma_r_fallbacks": out.sigma_r_fallbacks,
            "fuzzy_spin_votes": out.fuzzy_spins.len(),
        },
    });
    bundle.write(manifest)
}

/// Writes the sweep table plus a manifest echoing the axis request.
pub fn write_sweep_bundle(
    dir: &Path,
    config: &FileConfig,
    axis: &str,
    rows: &[report::SweepRow],
) -> Result<usize> {
    let mut bundle = Bundle::new(dir);
    bundle.push("sweep.csv", report::sweep_csv(rows));
    let manifest = json!({
        "command": "sweep",
        "axis": axis,
        "values": rows.iter().map(|r| r.axis_value.clone()).collect::<Vec<_>>(),
        "config": config,
    });
    bundle.write(manifest)
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}
