//! `chronnect train`: train one recurrent model on one cross-validation
//! fold of a corpus whose sequences were extracted by `chronnect dfc`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;

use chronnect::chronnectome::read_dfc_csv;
use chronnect::datagen::CorpusManifest;
use chronnect::evaluation::{
    augment, confusion_metrics, fold_seed, majority_vote, make_folds, roc_auc, Fold, FoldMetrics,
    Sample,
};
use chronnect::recurrent::{checkpoint_to_json, model_forward, ModelConfig, Variant};
use chronnect::training::{train, TrainSample};

use crate::commands::{
    corpus_dir, ensure_dir, parse_flag, positive_flag, to_pretty_json, write_output, FoldArgs,
    RecipeArgs,
};
use crate::failure::Failure;
use crate::manifest::{sha256_file, RunManifest};
use crate::commands::dfc::dfc_rel_path;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Corpus manifest (or its directory); provides labels and fold identity
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory of extracted sequences (output of `chronnect dfc`)
    #[arg(long)]
    pub dfc: PathBuf,
    /// Model variant
    #[arg(long, default_value = "full-bilstm")]
    pub model: String,
    #[command(flatten)]
    pub recipe: RecipeArgs,
    /// Crop length in windows
    #[arg(long, default_value = "30")]
    pub crop: String,
    #[command(flatten)]
    pub layout: FoldArgs,
    /// Which fold to train, 0-based
    #[arg(long, default_value = "0")]
    pub fold: String,
    /// Base seed for fold assignment; the fold's training seed derives from it
    #[arg(long, default_value = "0")]
    pub seed: String,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

/// Labels keyed by subject id, plus each subject's scan paths.
struct CorpusIndex {
    labeled: Vec<(String, usize)>,
    scans: BTreeMap<String, Vec<String>>,
}

fn load_index(manifest_flag: &Path) -> Result<(PathBuf, PathBuf, CorpusIndex), Failure> {
    let dir = corpus_dir(manifest_flag)?;
    let manifest_path = dir.join("manifest.json");
    let bytes = std::fs::read(&manifest_path)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", manifest_path.display())))?;
    let corpus: CorpusManifest = serde_json::from_slice(&bytes).map_err(chronnect::Error::from)?;
    let labeled = corpus
        .subjects
        .iter()
        .map(|s| (s.id.clone(), s.label))
        .collect();
    let scans = corpus
        .subjects
        .into_iter()
        .map(|s| (s.id, s.scans))
        .collect();
    Ok((dir, manifest_path, CorpusIndex { labeled, scans }))
}

/// Loads and crops every sequence of every subject in `ids`.
fn crops_for(
    ids: impl Iterator<Item = String>,
    index: &CorpusIndex,
    dfc_dir: &Path,
    crop_len: usize,
    stride: usize,
    run: &mut RunManifest,
) -> Result<Vec<Sample>, Failure> {
    let labels: BTreeMap<&str, usize> = index
        .labeled
        .iter()
        .map(|(id, label)| (id.as_str(), *label))
        .collect();
    let mut samples = Vec::new();
    for id in ids {
        let label = labels[id.as_str()];
        let scans = &index.scans[&id];
        for rel in scans {
            let dfc_rel = dfc_rel_path(&id, rel);
            let path = dfc_dir.join(&dfc_rel);
            if !path.is_file() {
                return Err(Failure::Data(format!(
                    "missing {}; run `chronnect dfc` first",
                    path.display()
                )));
            }
            run.input_hashes
                .insert(dfc_rel.clone(), sha256_file(&path)?);
            let scan_id = crate::commands::dfc::scan_id_of(rel);
            let dfc = read_dfc_csv(&path, &id, &scan_id)?;
            samples.extend(augment(&dfc, label, crop_len, stride)?);
        }
    }
    Ok(samples)
}

fn as_train_samples(samples: &[Sample]) -> Vec<TrainSample<'_>> {
    samples
        .iter()
        .map(|s| TrainSample {
            data: &s.data,
            label: s.label,
        })
        .collect()
}

pub fn run(args: &TrainArgs) -> Result<(), Failure> {
    let variant = Variant::from_str(&args.model).map_err(|e| Failure::Usage(e.to_string()))?;
    let crop_len = positive_flag("--crop", &args.crop)?;
    let fold_index: usize = parse_flag("--fold", &args.fold)?;
    let base_seed: u64 = parse_flag("--seed", &args.seed)?;
    let num_folds = args.layout.num_folds()?;
    if num_folds < 2 {
        return Err(Failure::Usage("--folds must be at least 2".to_string()));
    }
    let val_fraction = args.layout.fraction()?;
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Failure::Usage(
            "--val-fraction must lie strictly between 0 and 1".to_string(),
        ));
    }
    if fold_index >= num_folds {
        return Err(Failure::Usage(format!(
            "--fold {fold_index} out of range for {num_folds} folds"
        )));
    }
    let hidden_dim = args.recipe.hidden_dim()?;
    let train_stride = args.recipe.train_stride()?;
    let train_config = args
        .recipe
        .train_config(fold_seed(base_seed, fold_index, 0))?;

    let mut run = RunManifest::new("train", base_seed);
    run.echo("manifest", args.manifest.display().to_string());
    run.echo("dfc", args.dfc.display().to_string());
    run.echo("model", args.model.clone());
    run.echo("crop", args.crop.clone());
    run.echo("fold", args.fold.clone());
    run.echo("seed", args.seed.clone());
    run.echo("out", args.out.display().to_string());
    args.recipe.echo_into(&mut run.config_echo);
    args.layout.echo_into(&mut run.config_echo);

    let (_corpus_root, manifest_path, index) = load_index(&args.manifest)?;
    run.input_hashes
        .insert("manifest.json".to_string(), sha256_file(&manifest_path)?);
    let plan = make_folds(&index.labeled, num_folds, val_fraction, base_seed)?;
    let fold: &Fold = &plan.folds[fold_index];

    let train_crops = crops_for(
        fold.train_subjects.iter().cloned(),
        &index,
        &args.dfc,
        crop_len,
        train_stride,
        &mut run,
    )?;
    let val_crops = crops_for(
        fold.val_subjects.iter().cloned(),
        &index,
        &args.dfc,
        crop_len,
        1,
        &mut run,
    )?;
    let input_dim = train_crops
        .first()
        .ok_or_else(|| Failure::Data("no training crops in this fold".to_string()))?
        .data
        .cols();
    let model_config = ModelConfig::new(variant, input_dim, hidden_dim, crop_len);
    let outcome = train(
        &model_config,
        &as_train_samples(&train_crops),
        &as_train_samples(&val_crops),
        &train_config,
    )?;

    // Subject-level test evaluation: majority vote over every crop of every
    // scan.
    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    let mut scores = Vec::new();
    let label_of: BTreeMap<&str, usize> = index
        .labeled
        .iter()
        .map(|(id, label)| (id.as_str(), *label))
        .collect();
    for id in &fold.test_subjects {
        let crops = crops_for(
            std::iter::once(id.clone()),
            &index,
            &args.dfc,
            crop_len,
            1,
            &mut run,
        )?;
        let mut pos_probs = Vec::new();
        for crop in &crops {
            let (probs, _) = model_forward(&model_config, &outcome.best_params, &crop.data, None)?;
            pos_probs.push(probs[1]);
        }
        let (label, score) = majority_vote(&pos_probs)?;
        truth.push(label_of[id.as_str()]);
        predicted.push(label);
        scores.push(score);
    }
    let confusion = confusion_metrics(&predicted, &truth)?;
    let (auc, _roc) = roc_auc(&scores, &truth)?;
    let metrics = FoldMetrics {
        fold: fold_index,
        acc: confusion.acc,
        sen: confusion.sen,
        spe: confusion.spe,
        f1: confusion.f1,
        auc,
        undefined: confusion.undefined,
    };

    ensure_dir(&args.out)?;
    let checkpoint = checkpoint_to_json(&model_config, &outcome.best_params)?;
    write_output(&mut run, &args.out, "checkpoint.json", checkpoint.as_bytes())?;
    write_output(
        &mut run,
        &args.out,
        "training_log.json",
        &to_pretty_json(&outcome.report)?,
    )?;
    write_output(
        &mut run,
        &args.out,
        "fold_metrics.json",
        &to_pretty_json(&metrics)?,
    )?;
    run.write(&args.out)?;
    println!(
        "fold {fold_index}: stopped after {} epochs (best epoch {}, val loss {:.4}); test acc={:.3} auc={:.3}",
        outcome.report.epochs_run,
        outcome.report.best_epoch,
        outcome.report.best_val_loss,
        metrics.acc,
        metrics.auc
    );
    Ok(())
}
