//! Subcommand definitions, dispatch, and flag plumbing shared between
//! commands.
//!
//! Flag values whose exact spelling matters downstream (everything echoed
//! into a run manifest) are kept as the raw strings clap captured and parsed
//! separately, so `--decay 1e-6` is echoed as `1e-6`, not `0.000001`.

pub mod compare;
pub mod dfc;
pub mod gradcheck;
pub mod synth;
pub mod train;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Subcommand};

use chronnect::datagen::{read_corpus, CorpusManifest, LoadedSubject};
use chronnect::evaluation::SubjectRecord;
use chronnect::training::TrainConfig;

use crate::failure::Failure;
use crate::manifest::{sha256_file, RunManifest};

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic two-class corpus
    Synth(synth::SynthArgs),
    /// Extract windowed-correlation sequences for every scan in a corpus
    Dfc(dfc::DfcArgs),
    /// Train one recurrent model on one cross-validation fold
    Train(train::TrainArgs),
    /// Cross-validate methods on one corpus and tabulate the results
    Compare(compare::CompareArgs),
    /// Compare analytic gradients against finite differences
    Gradcheck(gradcheck::GradcheckArgs),
}

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Synth(args) => synth::run(&args),
        Command::Dfc(args) => dfc::run(&args),
        Command::Train(args) => train::run(&args),
        Command::Compare(args) => compare::run(&args),
        Command::Gradcheck(args) => gradcheck::run(&args),
    }
}

/// Parses a raw flag string, mapping failure to a usage error naming the
/// flag.
pub fn parse_flag<T>(flag: &str, raw: &str) -> Result<T, Failure>
where
    T: FromStr,
    T::Err: Display,
{
    raw.parse::<T>()
        .map_err(|e| Failure::Usage(format!("invalid value '{raw}' for {flag}: {e}")))
}

/// `parse_flag` for counts that must be at least 1.
pub fn positive_flag(flag: &str, raw: &str) -> Result<usize, Failure> {
    let value: usize = parse_flag(flag, raw)?;
    if value == 0 {
        return Err(Failure::Usage(format!("{flag} must be at least 1")));
    }
    Ok(value)
}

/// Optimization recipe flags, shared by `train` and `compare`.
#[derive(Args, Clone, Debug)]
pub struct RecipeArgs {
    /// Initial learning rate
    #[arg(long, default_value = "0.001")]
    pub lr: String,
    /// Learning-rate decay per parameter update
    #[arg(long, default_value = "1e-6")]
    pub decay: String,
    /// Minibatch size
    #[arg(long, default_value = "32")]
    pub batch: String,
    /// Epoch cap
    #[arg(long, default_value = "200")]
    pub epochs: String,
    /// Early-stopping patience in epochs
    #[arg(long, default_value = "20")]
    pub patience: String,
    /// Dropout rate on the pooled feature vector
    #[arg(long, default_value = "0.5")]
    pub dropout: String,
    /// L1 penalty on weight matrices
    #[arg(long, default_value = "0.0005")]
    pub l1: String,
    /// Hidden units per direction
    #[arg(long, default_value = "32")]
    pub hidden: String,
    /// Independent training runs per fold; lowest validation loss wins
    #[arg(long, default_value = "1")]
    pub restarts: String,
    /// Start-offset stride between training crops (validation and test
    /// always use every crop)
    #[arg(long = "train-stride", default_value = "1")]
    pub train_stride: String,
}

impl RecipeArgs {
    /// Copies every recipe flag, exactly as supplied, into a manifest echo.
    pub fn echo_into(&self, echo: &mut BTreeMap<String, String>) {
        echo.insert("lr0".to_string(), self.lr.clone());
        echo.insert("decay".to_string(), self.decay.clone());
        echo.insert("batch".to_string(), self.batch.clone());
        echo.insert("max_epochs".to_string(), self.epochs.clone());
        echo.insert("patience".to_string(), self.patience.clone());
        echo.insert("dropout".to_string(), self.dropout.clone());
        echo.insert("l1".to_string(), self.l1.clone());
        echo.insert("hidden".to_string(), self.hidden.clone());
        echo.insert("restarts".to_string(), self.restarts.clone());
        echo.insert("train_stride".to_string(), self.train_stride.clone());
    }

    pub fn hidden_dim(&self) -> Result<usize, Failure> {
        positive_flag("--hidden", &self.hidden)
    }

    pub fn train_stride(&self) -> Result<usize, Failure> {
        positive_flag("--train-stride", &self.train_stride)
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig, Failure> {
        let config = TrainConfig {
            lr0: parse_flag("--lr", &self.lr)?,
            decay_rate: parse_flag("--decay", &self.decay)?,
            batch_size: parse_flag("--batch", &self.batch)?,
            max_epochs: parse_flag("--epochs", &self.epochs)?,
            patience_epochs: parse_flag("--patience", &self.patience)?,
            dropout_rate: parse_flag("--dropout", &self.dropout)?,
            l1_coeff: parse_flag("--l1", &self.l1)?,
            restarts: positive_flag("--restarts", &self.restarts)?,
            seed,
            ..TrainConfig::default()
        };
        config
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(config)
    }
}

/// Cross-validation layout flags, shared by `train` and `compare`.
#[derive(Args, Clone, Debug)]
pub struct FoldArgs {
    /// Cross-validation folds
    #[arg(long, default_value = "5")]
    pub folds: String,
    /// Fraction of each fold's non-test subjects held out for validation
    #[arg(long = "val-fraction", default_value = "0.1")]
    pub val_fraction: String,
}

impl FoldArgs {
    pub fn echo_into(&self, echo: &mut BTreeMap<String, String>) {
        echo.insert("folds".to_string(), self.folds.clone());
        echo.insert("val_fraction".to_string(), self.val_fraction.clone());
    }

    pub fn num_folds(&self) -> Result<usize, Failure> {
        positive_flag("--folds", &self.folds)
    }

    pub fn fraction(&self) -> Result<f64, Failure> {
        parse_flag("--val-fraction", &self.val_fraction)
    }
}

/// A corpus on disk: its root directory, manifest, and loaded scans.
pub struct Corpus {
    pub dir: PathBuf,
    pub manifest_path: PathBuf,
    pub manifest: CorpusManifest,
    pub subjects: Vec<LoadedSubject>,
}

/// Resolves `--manifest` (either the manifest file or the corpus directory)
/// and loads every scan it lists.
pub fn load_corpus(manifest_flag: &Path) -> Result<Corpus, Failure> {
    let dir = corpus_dir(manifest_flag)?;
    let (manifest, subjects) = read_corpus(&dir)?;
    Ok(Corpus {
        manifest_path: dir.join("manifest.json"),
        dir,
        manifest,
        subjects,
    })
}

/// Accepts the corpus directory or its `manifest.json` path.
pub fn corpus_dir(manifest_flag: &Path) -> Result<PathBuf, Failure> {
    if manifest_flag.is_dir() {
        return Ok(manifest_flag.to_path_buf());
    }
    match manifest_flag.file_name().and_then(|n| n.to_str()) {
        Some("manifest.json") => {
            let parent = manifest_flag.parent().unwrap_or(Path::new("."));
            Ok(if parent.as_os_str().is_empty() {
                PathBuf::from(".")
            } else {
                parent.to_path_buf()
            })
        }
        _ => Err(Failure::Data(format!(
            "--manifest must point at a corpus directory or its manifest.json, got {}",
            manifest_flag.display()
        ))),
    }
}

pub fn records_from(subjects: Vec<LoadedSubject>) -> Vec<SubjectRecord> {
    subjects
        .into_iter()
        .map(|s| SubjectRecord {
            subject_id: s.id,
            label: s.label,
            scans: s.scans,
        })
        .collect()
}

/// Hashes the corpus manifest plus every scan file it lists into
/// `input_hashes`.
pub fn hash_corpus(run: &mut RunManifest, corpus: &Corpus) -> Result<(), Failure> {
    run.input_hashes.insert(
        "manifest.json".to_string(),
        sha256_file(&corpus.manifest_path)?,
    );
    for subject in &corpus.manifest.subjects {
        for rel in &subject.scans {
            run.input_hashes
                .insert(rel.clone(), sha256_file(&corpus.dir.join(rel))?);
        }
    }
    Ok(())
}

/// Creates `dir` (and parents) if needed.
pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Data(format!("cannot create {}: {e}", dir.display())))
}

/// Writes `bytes` atomically under `dir`, records the relative path in the
/// run manifest, and returns nothing on success.
pub fn write_output(
    run: &mut RunManifest,
    dir: &Path,
    rel: &str,
    bytes: &[u8],
) -> Result<(), Failure> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    chronnect::chronnectome::write_atomic(&path, bytes)
        .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))?;
    run.record_output(rel);
    Ok(())
}

pub fn to_pretty_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(chronnect::Error::from)?;
    bytes.push(b'\n');
    Ok(bytes)
}
