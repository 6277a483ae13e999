//! The full cross-validated comparison loop: per fold, fit the chosen method
//! on training subjects only and score the held-out subjects.

use crate::baselines::{
    kmeans_fit, select_by_ttest, status_features, svm_train, variability_features, LinearSvmModel,
    Standardizer, StatusModel,
};
use crate::chronnectome::{compute_dfc, static_fc, BoldTimeSeries, DFCSequence, WindowSpec};
use crate::error::{Error, Result};
use crate::evaluation::folds::{augment, Fold, FoldPlan, Sample};
use crate::evaluation::metrics::{
    confusion_metrics, majority_vote, roc_auc, summarize, FoldMetrics, MetricsReport, RocPoint,
};
use crate::numerics::{Matrix, Rng};
use crate::recurrent::{model_forward, ModelConfig, Variant};
use crate::training::{train, TrainConfig, TrainSample};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One person's scans and diagnosis label.
#[derive(Debug, Clone)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub label: usize,
    pub scans: Vec<BoldTimeSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub l2_coeff: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            l2_coeff: 0.01,
            epochs: 2000,
            seed: 0,
        }
    }
}

/// A competitor in the comparison. `Oracle` and `CoinFlip` are protocol
/// probes: they bound what the harness itself can report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Lstm {
        variant: Variant,
        hidden_dim: usize,
        train: TrainConfig,
        /// Start-offset stride for training crops. Validation and test crops
        /// always stride 1 so voting sees every crop.
        #[serde(default = "default_train_stride")]
        train_stride: usize,
    },
    StaticFcSvm {
        svm: SvmConfig,
    },
    DfcStatus {
        num_statuses: usize,
        svm: SvmConfig,
    },
    DfcVariability {
        alpha: f64,
        svm: SvmConfig,
    },
    Oracle,
    CoinFlip {
        seed: u64,
    },
}

fn default_train_stride() -> usize {
    1
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Lstm {
                variant,
                hidden_dim,
                ..
            } => format!("{}-h{hidden_dim}", variant.name()),
            Method::StaticFcSvm { .. } => "static-fc-svm".to_string(),
            Method::DfcStatus { .. } => "dfc-status".to_string(),
            Method::DfcVariability { .. } => "dfc-variability".to_string(),
            Method::Oracle => "oracle".to_string(),
            Method::CoinFlip { .. } => "coin-flip".to_string(),
        }
    }
}

/// Fitted state for one fold, serializable as the per-fold model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FoldModel {
    Lstm {
        checkpoint_json: String,
    },
    Svm {
        selected: Vec<usize>,
        standardizer: Standardizer,
        svm: LinearSvmModel,
        status: Option<StatusModel>,
    },
    Probe,
}

/// Subject-level outcome of one fold.
#[derive(Debug, Clone)]
struct FoldPredictions {
    truth: Vec<usize>,
    predicted: Vec<usize>,
    scores: Vec<f64>,
}

/// Distinct per-fold seeds: fold index moves along a golden-ratio lattice,
/// the use id along unit steps, so (fold, use) pairs never collide for the
/// handful of uses each fold makes. Use ids: 0 = recurrent training,
/// 1 = k-means, 2 = SVM, 3 = coin flip.
pub fn fold_seed(base: u64, fold: usize, use_id: u64) -> u64 {
    base.wrapping_add((fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(use_id)
}

fn split_records<'a>(
    subjects: &'a [SubjectRecord],
    fold: &Fold,
) -> (
    Vec<&'a SubjectRecord>,
    Vec<&'a SubjectRecord>,
    Vec<&'a SubjectRecord>,
) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for record in subjects {
        if fold.train_subjects.contains(&record.subject_id) {
            train.push(record);
        } else if fold.val_subjects.contains(&record.subject_id) {
            val.push(record);
        } else if fold.test_subjects.contains(&record.subject_id) {
            test.push(record);
        }
    }
    (train, val, test)
}

fn dfc_of(record: &SubjectRecord, window: &WindowSpec) -> Result<Vec<DFCSequence>> {
    record
        .scans
        .iter()
        .map(|scan| compute_dfc(scan, window).map(|(dfc, _)| dfc))
        .collect()
}

fn crops_of(
    records: &[&SubjectRecord],
    window: &WindowSpec,
    crop_len: usize,
    stride: usize,
) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for record in records {
        for dfc in dfc_of(record, window)? {
            out.extend(augment(&dfc, record.label, crop_len, stride)?);
        }
    }
    Ok(out)
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

#[allow(clippy::too_many_arguments)]
fn lstm_fold(
    fit: &[&SubjectRecord],
    val: &[&SubjectRecord],
    test: &[&SubjectRecord],
    window: &WindowSpec,
    crop_len: usize,
    variant: Variant,
    hidden_dim: usize,
    train_config: &TrainConfig,
    train_stride: usize,
    fold: usize,
) -> Result<(FoldPredictions, FoldModel)> {
    let train_crops = crops_of(fit, window, crop_len, train_stride)?;
    let val_crops = crops_of(val, window, crop_len, 1)?;
    let input_dim = train_crops
        .first()
        .ok_or_else(|| Error::InsufficientData("no training crops".to_string()))?
        .data
        .cols();
    let model_config = ModelConfig::new(variant, input_dim, hidden_dim, crop_len);
    let fold_config = TrainConfig {
        seed: fold_seed(train_config.seed, fold, 0),
        ..train_config.clone()
    };
    let outcome = train(
        &model_config,
        &as_train_samples(&train_crops),
        &as_train_samples(&val_crops),
        &fold_config,
    )?;
    let mut predictions = FoldPredictions {
        truth: Vec::new(),
        predicted: Vec::new(),
        scores: Vec::new(),
    };
    for record in test {
        let mut pos_probs = Vec::new();
        for dfc in dfc_of(record, window)? {
            for crop in augment(&dfc, record.label, crop_len, 1)? {
                let (probs, _) =
                    model_forward(&model_config, &outcome.best_params, &crop.data, None)?;
                pos_probs.push(probs[1]);
            }
        }
        let (label, score) = majority_vote(&pos_probs)?;
        predictions.truth.push(record.label);
        predictions.predicted.push(label);
        predictions.scores.push(score);
    }
    let checkpoint_json =
        crate::recurrent::checkpoint_to_json(&model_config, &outcome.best_params)?;
    Ok((predictions, FoldModel::Lstm { checkpoint_json }))
}

/// Rows of per-scan feature vectors plus each scan's subject and label.
struct ScanFeatures {
    features: Matrix,
    subject_index: Vec<usize>,
    labels: Vec<usize>,
}

fn scan_feature_matrix(
    records: &[&SubjectRecord],
    mut extract: impl FnMut(&BoldTimeSeries) -> Result<Vec<f64>>,
) -> Result<ScanFeatures> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut subject_index = Vec::new();
    let mut labels = Vec::new();
    for (si, record) in records.iter().enumerate() {
        for scan in &record.scans {
            rows.push(extract(scan)?);
            subject_index.push(si);
            labels.push(record.label);
        }
    }
    let dim = rows
        .first()
        .ok_or_else(|| Error::InsufficientData("no scans to featurize".to_string()))?
        .len();
    let mut features = Matrix::zeros(rows.len(), dim);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::shape(
                "scan_feature_matrix",
                format!("row {r} has {} features, expected {dim}", row.len()),
            ));
        }
        features.row_mut(r).copy_from_slice(row);
    }
    Ok(ScanFeatures {
        features,
        subject_index,
        labels,
    })
}

fn svm_fold(
    fit: &[&SubjectRecord],
    test: &[&SubjectRecord],
    method: &Method,
    window: &WindowSpec,
    fold: usize,
) -> Result<(FoldPredictions, FoldModel)> {
    // Per-scan feature extraction, plus any fold-level fitted state.
    let (svm_config, mut extract, status): (
        &SvmConfig,
        Box<dyn FnMut(&BoldTimeSeries) -> Result<Vec<f64>>>,
        Option<StatusModel>,
    ) = match method {
        Method::StaticFcSvm { svm } => (
            svm,
            Box::new(|scan: &BoldTimeSeries| static_fc(scan).map(|(v, _)| v)),
            None,
        ),
        Method::DfcStatus { num_statuses, svm } => {
            // Pool every training window row and cluster them.
            let mut pooled: Vec<DFCSequence> = Vec::new();
            for record in fit {
                pooled.extend(dfc_of(record, window)?);
            }
            let dim = pooled
                .first()
                .ok_or_else(|| Error::InsufficientData("no training scans".to_string()))?
                .link_dim;
            let total: usize = pooled.iter().map(|d| d.num_windows).sum();
            let mut rows = Matrix::zeros(total, dim);
            let mut r = 0;
            for dfc in &pooled {
                for t in 0..dfc.num_windows {
                    rows.row_mut(r).copy_from_slice(dfc.rows.row(t));
                    r += 1;
                }
            }
            let model = kmeans_fit(&rows, *num_statuses, fold_seed(svm.seed, fold, 1))?;
            let window = window.clone();
            let model_for_extract = model.clone();
            (
                svm,
                Box::new(move |scan: &BoldTimeSeries| {
                    let (dfc, _) = compute_dfc(scan, &window)?;
                    status_features(&dfc, &model_for_extract)
                }),
                Some(model),
            )
        }
        Method::DfcVariability { svm, .. } => {
            let window = window.clone();
            (
                svm,
                Box::new(move |scan: &BoldTimeSeries| {
                    let (dfc, _) = compute_dfc(scan, &window)?;
                    variability_features(&dfc)
                }),
                None,
            )
        }
        _ => unreachable!("svm_fold only handles the three feature baselines"),
    };

    let train_scans = scan_feature_matrix(fit, &mut extract)?;
    let selected = match method {
        Method::DfcVariability { alpha, .. } => {
            select_by_ttest(&train_scans.features, &train_scans.labels, *alpha)?
        }
        _ => (0..train_scans.features.cols()).collect(),
    };
    let take = |features: &Matrix, row: usize| -> Vec<f64> {
        selected.iter().map(|&d| features.get(row, d)).collect()
    };
    let mut train_selected = Matrix::zeros(train_scans.features.rows(), selected.len());
    for r in 0..train_scans.features.rows() {
        train_selected
            .row_mut(r)
            .copy_from_slice(&take(&train_scans.features, r));
    }
    let standardizer = Standardizer::fit(&train_selected)?;
    let standardized = standardizer.apply(&train_selected)?;
    let signed: Vec<f64> = train_scans
        .labels
        .iter()
        .map(|&l| if l == 1 { 1.0 } else { -1.0 })
        .collect();
    let svm = svm_train(
        &standardized,
        &signed,
        svm_config.l2_coeff,
        svm_config.epochs,
        fold_seed(svm_config.seed, fold, 2),
    )?;

    let test_scans = scan_feature_matrix(test, &mut extract)?;
    let mut per_subject: Vec<Vec<f64>> = vec![Vec::new(); test.len()];
    for r in 0..test_scans.features.rows() {
        let z = standardizer.apply_row(&take(&test_scans.features, r));
        per_subject[test_scans.subject_index[r]].push(svm.score(&z));
    }
    let mut predictions = FoldPredictions {
        truth: Vec::new(),
        predicted: Vec::new(),
        scores: Vec::new(),
    };
    for (si, record) in test.iter().enumerate() {
        let scores = &per_subject[si];
        if scores.is_empty() {
            return Err(Error::InsufficientData(format!(
                "subject {} has no scans",
                record.subject_id
            )));
        }
        let score = scores.iter().sum::<f64>() / scores.len() as f64;
        predictions.truth.push(record.label);
        predictions.predicted.push(usize::from(score > 0.0));
        predictions.scores.push(score);
    }
    Ok((
        predictions,
        FoldModel::Svm {
            selected,
            standardizer,
            svm,
            status,
        },
    ))
}

fn probe_fold(test: &[&SubjectRecord], method: &Method, fold: usize) -> FoldPredictions {
    let mut predictions = FoldPredictions {
        truth: Vec::new(),
        predicted: Vec::new(),
        scores: Vec::new(),
    };
    match method {
        Method::Oracle => {
            for record in test {
                predictions.truth.push(record.label);
                predictions.predicted.push(record.label);
                predictions.scores.push(record.label as f64);
            }
        }
        Method::CoinFlip { seed } => {
            let mut rng = Rng::new(fold_seed(*seed, fold, 3), 0);
            for record in test {
                let score = rng.uniform(0.0, 1.0);
                predictions.truth.push(record.label);
                predictions.predicted.push(usize::from(score > 0.5));
                predictions.scores.push(score);
            }
        }
        _ => unreachable!("probe_fold only handles Oracle and CoinFlip"),
    }
    predictions
}

/// Runs one method through every fold of the plan and aggregates.
///
/// LSTM methods train on augmented crops from the training subjects with the
/// validation subjects steering early stopping, then majority-vote the test
/// subjects' crops. The SVM baselines fit on un-augmented per-scan features
/// from the training and validation subjects together (they have no use for
/// a validation split) and score test scans directly.
pub fn run_protocol(
    subjects: &[SubjectRecord],
    window: &WindowSpec,
    method: &Method,
    plan: &FoldPlan,
    crop_len: usize,
) -> Result<MetricsReport> {
    run_protocol_with_models(subjects, window, method, plan, crop_len).map(|(report, _)| report)
}

/// `run_protocol` that also returns each fold's fitted model.
pub fn run_protocol_with_models(
    subjects: &[SubjectRecord],
    window: &WindowSpec,
    method: &Method,
    plan: &FoldPlan,
    crop_len: usize,
) -> Result<(MetricsReport, Vec<FoldModel>)> {
    let labeled: Vec<(String, usize)> = subjects
        .iter()
        .map(|s| (s.subject_id.clone(), s.label))
        .collect();
    plan.audit(&labeled)?;
    let known: BTreeMap<&str, ()> = subjects
        .iter()
        .map(|s| (s.subject_id.as_str(), ()))
        .collect();
    if known.len() != subjects.len() {
        return Err(Error::Config("duplicate subject ids".to_string()));
    }

    let mut per_fold = Vec::with_capacity(plan.folds.len());
    let mut pooled_scores = Vec::new();
    let mut pooled_labels = Vec::new();
    let mut models = Vec::with_capacity(plan.folds.len());
    for (f, fold) in plan.folds.iter().enumerate() {
        let (train_records, val_records, test_records) = split_records(subjects, fold);
        let (predictions, model) = match method {
            Method::Lstm {
                variant,
                hidden_dim,
                train,
                train_stride,
            } => lstm_fold(
                &train_records,
                &val_records,
                &test_records,
                window,
                crop_len,
                *variant,
                *hidden_dim,
                train,
                *train_stride,
                f,
            )?,
            Method::StaticFcSvm { .. }
            | Method::DfcStatus { .. }
            | Method::DfcVariability { .. } => {
                // Baselines need no validation subjects; fold them back in.
                let mut fit = train_records.clone();
                fit.extend(val_records.iter().copied());
                svm_fold(&fit, &test_records, method, window, f)?
            }
            Method::Oracle | Method::CoinFlip { .. } => {
                (probe_fold(&test_records, method, f), FoldModel::Probe)
            }
        };
        let confusion = confusion_metrics(&predictions.predicted, &predictions.truth)?;
        let (auc, _) = roc_auc(&predictions.scores, &predictions.truth)?;
        per_fold.push(FoldMetrics {
            fold: f,
            acc: confusion.acc,
            sen: confusion.sen,
            spe: confusion.spe,
            f1: confusion.f1,
            auc,
            undefined: confusion.undefined,
        });
        pooled_scores.extend_from_slice(&predictions.scores);
        pooled_labels.extend_from_slice(&predictions.truth);
        models.push(model);
    }
    let (mean, std) = summarize(&per_fold);
    let roc: Vec<RocPoint> = roc_auc(&pooled_scores, &pooled_labels)?.1;
    Ok((
        MetricsReport {
            method: method.name(),
            per_fold,
            mean,
            std,
            roc,
        },
        models,
    ))
}
