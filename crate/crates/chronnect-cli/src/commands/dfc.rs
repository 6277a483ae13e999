//! `chronnect dfc`: extract windowed-correlation sequences for every scan.
//!
//! Scans are processed independently: a bad scan is reported and skipped,
//! the rest of the corpus still gets its outputs, and the run exits with
//! the data-error code so callers notice the partial failure.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use chronnect::chronnectome::{compute_dfc, read_scan_csv, write_dfc_csv, WindowSpec};
use chronnect::datagen::{CorpusManifest, SYNTH_TR_SECONDS};

use crate::commands::{corpus_dir, ensure_dir, positive_flag, to_pretty_json, write_output};
use crate::failure::Failure;
use crate::manifest::{sha256_file, RunManifest};

pub const SUMMARY_FILE: &str = "dfc_summary.json";

#[derive(Args, Debug)]
pub struct DfcArgs {
    /// Corpus manifest (or its directory)
    #[arg(long)]
    pub manifest: PathBuf,
    /// Window length in volumes
    #[arg(long, default_value = "30")]
    pub window: String,
    /// Window stride in volumes
    #[arg(long, default_value = "2")]
    pub stride: String,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

/// One extracted sequence: `num_windows` is T, `link_dim` is D.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanEntry {
    pub subject: String,
    pub scan: String,
    pub path: String,
    pub num_windows: usize,
    pub link_dim: usize,
    pub degenerate_windows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanFailure {
    pub subject: String,
    pub scan: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DfcSummary {
    pub window: usize,
    pub stride: usize,
    pub scans: Vec<ScanEntry>,
    pub errors: Vec<ScanFailure>,
}

/// Scan id = file stem of the manifest's relative scan path.
pub fn scan_id_of(rel: &str) -> String {
    Path::new(rel)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scan")
        .to_string()
}

/// Relative path of the extracted sequence for a scan's relative path.
pub fn dfc_rel_path(subject: &str, rel: &str) -> String {
    format!("{subject}/{}.dfc.csv", scan_id_of(rel))
}

pub fn run(args: &DfcArgs) -> Result<(), Failure> {
    let window_len = positive_flag("--window", &args.window)?;
    let stride = positive_flag("--stride", &args.stride)?;
    let window = WindowSpec::new(window_len, stride).map_err(|e| Failure::Usage(e.to_string()))?;

    let dir = corpus_dir(&args.manifest)?;
    let manifest_path = dir.join("manifest.json");
    let bytes = std::fs::read(&manifest_path)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", manifest_path.display())))?;
    let corpus: CorpusManifest = serde_json::from_slice(&bytes).map_err(chronnect::Error::from)?;

    let mut run = RunManifest::new("dfc", 0);
    run.echo("manifest", args.manifest.display().to_string());
    run.echo("window", args.window.clone());
    run.echo("stride", args.stride.clone());
    run.echo("out", args.out.display().to_string());
    run.input_hashes
        .insert("manifest.json".to_string(), sha256_file(&manifest_path)?);

    ensure_dir(&args.out)?;
    let mut summary = DfcSummary {
        window: window_len,
        stride,
        scans: Vec::new(),
        errors: Vec::new(),
    };
    for subject in &corpus.subjects {
        for rel in &subject.scans {
            let scan_path = dir.join(rel);
            run.input_hashes
                .insert(rel.clone(), sha256_file(&scan_path)?);
            let scan_id = scan_id_of(rel);
            let result = read_scan_csv(&scan_path, &subject.id, &scan_id, SYNTH_TR_SECONDS)
                .and_then(|ts| compute_dfc(&ts, &window));
            match result {
                Ok((dfc, degeneracies)) => {
                    let out_rel = dfc_rel_path(&subject.id, rel);
                    let out_path = args.out.join(&out_rel);
                    if let Some(parent) = out_path.parent() {
                        ensure_dir(parent)?;
                    }
                    write_dfc_csv(&out_path, &dfc)?;
                    run.record_output(out_rel.clone());
                    summary.scans.push(ScanEntry {
                        subject: subject.id.clone(),
                        scan: scan_id,
                        path: out_rel,
                        num_windows: dfc.num_windows,
                        link_dim: dfc.link_dim,
                        degenerate_windows: degeneracies.len(),
                    });
                }
                Err(err) => {
                    eprintln!("scan {}/{scan_id}: {err}", subject.id);
                    summary.errors.push(ScanFailure {
                        subject: subject.id.clone(),
                        scan: scan_id,
                        error: err.to_string(),
                    });
                }
            }
        }
    }

    write_output(&mut run, &args.out, SUMMARY_FILE, &to_pretty_json(&summary)?)?;
    run.write(&args.out)?;
    println!(
        "extracted {} dFC sequences to {} ({} failed)",
        summary.scans.len(),
        args.out.display(),
        summary.errors.len()
    );
    if !summary.errors.is_empty() {
        return Err(Failure::Data(format!(
            "{} of {} scans failed; see {SUMMARY_FILE}",
            summary.errors.len(),
            summary.errors.len() + summary.scans.len()
        )));
    }
    Ok(())
}
