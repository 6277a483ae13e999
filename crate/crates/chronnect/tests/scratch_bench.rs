//! Temporary tuning harness. Not part of the shipped suite.

use chronnect::chronnectome::WindowSpec;
use chronnect::datagen::{generate_corpus, occupancy_coded_spec, order_coded_spec, SyntheticSpec};
use chronnect::evaluation::{make_folds, run_protocol, Method, SubjectRecord, SvmConfig};
use chronnect::recurrent::Variant;
use chronnect::training::TrainConfig;
use std::time::Instant;

fn records_for(spec: &SyntheticSpec) -> Vec<SubjectRecord> {
    generate_corpus(spec)
        .unwrap()
        .into_iter()
        .map(|s| SubjectRecord {
            subject_id: s.id,
            label: s.label,
            scans: s.scans.into_iter().map(|c| c.series).collect(),
        })
        .collect()
}

fn bench_config(hidden: usize, epochs: usize, lr0: f64, seed: u64) -> (usize, TrainConfig) {
    (
        hidden,
        TrainConfig {
            lr0,
            max_epochs: epochs,
            patience_epochs: epochs.saturating_sub(1).max(1),
            seed,
            ..TrainConfig::default()
        },
    )
}

#[test]
#[ignore]
fn probe_epoch_cost() {
    let t0 = Instant::now();
    let spec = order_coded_spec(16, 3, 101).unwrap();
    let records = records_for(&spec);
    println!("corpus: {:?}", t0.elapsed());

    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.125, 101).unwrap();

    for hidden in [8usize, 16] {
        let (h, train) = bench_config(hidden, 2, 0.003, 101);
        let method = Method::Lstm {
            variant: Variant::FullBiLstm,
            hidden_dim: h,
            train,
            train_stride: 1,
        };
        let t = Instant::now();
        let report = run_protocol(&records, &window, &method, &plan, 30).unwrap();
        println!(
            "h={h} 2-epoch 5-fold: {:?} auc={:.3}",
            t.elapsed(),
            report.mean.auc
        );
    }
}

#[test]
#[ignore]
fn probe_baselines() {
    let spec = order_coded_spec(16, 3, 101).unwrap();
    let records = records_for(&spec);
    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.125, 101).unwrap();

    for method in [
        Method::DfcStatus {
            num_statuses: 3,
            svm: SvmConfig::default(),
        },
        Method::DfcVariability {
            alpha: 0.05,
            svm: SvmConfig::default(),
        },
        Method::StaticFcSvm {
            svm: SvmConfig::default(),
        },
    ] {
        let t = Instant::now();
        let report = run_protocol(&records, &window, &method, &plan, 30).unwrap();
        println!(
            "{}: auc={:.3} acc={:.3} ({:?})",
            report.method,
            report.mean.auc,
            report.mean.acc,
            t.elapsed()
        );
    }
}

#[test]
#[ignore]
fn probe_order_lstm_auc() {
    let spec = order_coded_spec(16, 3, 101).unwrap();
    let records = records_for(&spec);
    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.125, 101).unwrap();

    for (hidden, epochs, lr0) in [(8usize, 8usize, 0.003f64), (8, 12, 0.003)] {
        let (h, train) = bench_config(hidden, epochs, lr0, 101);
        let method = Method::Lstm {
            variant: Variant::FullBiLstm,
            hidden_dim: h,
            train,
            train_stride: 1,
        };
        let t = Instant::now();
        let report = run_protocol(&records, &window, &method, &plan, 30).unwrap();
        println!(
            "h={h} epochs={epochs} lr={lr0}: auc={:.3} acc={:.3} ({:?})",
            report.mean.auc,
            report.mean.acc,
            t.elapsed()
        );
    }
}

#[test]
#[ignore]
fn probe_occupancy() {
    let spec = occupancy_coded_spec(16, 3, 202).unwrap();
    let records = records_for(&spec);
    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.125, 202).unwrap();

    let t = Instant::now();
    let report = run_protocol(
        &records,
        &window,
        &Method::DfcStatus {
            num_statuses: 3,
            svm: SvmConfig::default(),
        },
        &plan,
        30,
    )
    .unwrap();
    println!(
        "occupancy dfc-status: auc={:.3} ({:?})",
        report.mean.auc,
        t.elapsed()
    );

    let (h, train) = bench_config(8, 8, 0.003, 202);
    let t = Instant::now();
    let report = run_protocol(
        &records,
        &window,
        &Method::Lstm {
            variant: Variant::FullBiLstm,
            hidden_dim: h,
            train,
            train_stride: 1,
        },
        &plan,
        30,
    )
    .unwrap();
    println!(
        "occupancy full-bilstm-h8: auc={:.3} ({:?})",
        report.mean.auc,
        t.elapsed()
    );
}

#[test]
#[ignore]
fn probe_loss_curves() {
    use chronnect::evaluation::{augment, Sample};
    use chronnect::recurrent::ModelConfig;
    use chronnect::training::{train, TrainSample};

    let spec = order_coded_spec(16, 3, 101).unwrap();
    let records = records_for(&spec);
    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.125, 101).unwrap();
    let fold = &plan.folds[0];

    let crops = |ids: &std::collections::BTreeSet<String>| -> Vec<Sample> {
        let mut out = Vec::new();
        for r in &records {
            if !ids.contains(&r.subject_id) {
                continue;
            }
            for scan in &r.scans {
                let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                out.extend(augment(&dfc, r.label, 30, 1).unwrap());
            }
        }
        out
    };
    let train_crops = crops(&fold.train_subjects);
    let val_crops = crops(&fold.val_subjects);
    println!("train crops: {}, val crops: {}", train_crops.len(), val_crops.len());
    let tr: Vec<TrainSample> = train_crops
        .iter()
        .map(|s| TrainSample { data: &s.data, label: s.label })
        .collect();
    let va: Vec<TrainSample> = val_crops
        .iter()
        .map(|s| TrainSample { data: &s.data, label: s.label })
        .collect();

    for (lr0, dropout) in [(0.001f64, 0.5f64), (0.003, 0.5), (0.01, 0.5), (0.003, 0.0)] {
        let config = TrainConfig {
            lr0,
            dropout_rate: dropout,
            max_epochs: 6,
            patience_epochs: 5,
            seed: 101,
            ..TrainConfig::default()
        };
        let model = ModelConfig::new(Variant::FullBiLstm, 120, 8, 30);
        let t = Instant::now();
        let outcome = train(&model, &tr, &va, &config).unwrap();
        let curve: Vec<String> = outcome
            .report
            .epochs
            .iter()
            .map(|e| format!("{:.4}/{:.4}", e.train_loss, e.val_loss))
            .collect();
        println!(
            "lr={lr0} dropout={dropout}: {} ({:?})",
            curve.join(" "),
            t.elapsed()
        );
    }
}

fn cycle_chain_local(k: usize, p_stay: f64) -> chronnect::numerics::Matrix {
    let mut tm = chronnect::numerics::Matrix::zeros(k, k);
    for i in 0..k {
        tm.set(i, i, p_stay);
        tm.set(i, (i + 1) % k, 1.0 - p_stay);
    }
    tm
}

fn dwell_chain_local(dwell: &[f64]) -> chronnect::numerics::Matrix {
    let k = dwell.len();
    let mut tm = chronnect::numerics::Matrix::zeros(k, k);
    for i in 0..k {
        let leave = 1.0 / dwell[i];
        tm.set(i, i, 1.0 - leave);
        for j in 0..k {
            if j != i {
                tm.set(i, j, leave / (k - 1) as f64);
            }
        }
    }
    tm
}

fn spec_with(transitions: Vec<chronnect::numerics::Matrix>, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        num_rois: 16,
        num_volumes: 136,
        num_statuses: 3,
        transitions,
        dwell_volumes: 24.0,
        noise_sigma: 0.1,
        subjects_per_class: 100,
        scans_per_subject: 1,
        seed,
    }
}

fn eval(records: &[SubjectRecord], method: Method, seed: u64) -> (f64, std::time::Duration) {
    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.125, seed).unwrap();
    let t = Instant::now();
    let report = run_protocol(records, &window, &method, &plan, 30).unwrap();
    (report.mean.auc, t.elapsed())
}

#[test]
#[ignore]
fn probe_dwell_scan_order() {
    for dwell in [24.0f64, 30.0, 36.0] {
        let forward = cycle_chain_local(3, 1.0 - 1.0 / dwell);
        let backward = forward.transpose();
        let spec = spec_with(vec![forward, backward], 101);
        let records = records_for(&spec);
        let (h, train) = bench_config(8, 8, 0.003, 101);
        let (auc, dt) = eval(
            &records,
            Method::Lstm {
                variant: Variant::FullBiLstm,
                hidden_dim: h,
                train,
                train_stride: 1,
            },
            101,
        );
        let (sauc, _) = eval(
            &records,
            Method::DfcStatus {
                num_statuses: 3,
                svm: SvmConfig::default(),
            },
            101,
        );
        println!("order dwell={dwell}: bilstm={auc:.3} ({dt:?}) status={sauc:.3}");
    }
}

#[test]
#[ignore]
fn probe_dwell_scan_occupancy() {
    for (base, mult) in [(12.0f64, 3.0f64), (18.0, 3.0), (24.0, 2.0), (30.0, 2.0)] {
        let even = vec![base; 3];
        let mut skewed = even.clone();
        skewed[0] *= mult;
        let spec = spec_with(vec![dwell_chain_local(&even), dwell_chain_local(&skewed)], 202);
        let records = records_for(&spec);
        let (sauc, _) = eval(
            &records,
            Method::DfcStatus {
                num_statuses: 3,
                svm: SvmConfig::default(),
            },
            202,
        );
        let (h, train) = bench_config(8, 8, 0.003, 202);
        let (auc, dt) = eval(
            &records,
            Method::Lstm {
                variant: Variant::FullBiLstm,
                hidden_dim: h,
                train,
                train_stride: 1,
            },
            202,
        );
        println!("occ base={base} mult={mult}: status={sauc:.3} bilstm={auc:.3} ({dt:?})");
    }
}

#[test]
#[ignore]
fn probe_long_training_order() {
    use chronnect::evaluation::{augment, Sample};
    use chronnect::recurrent::ModelConfig;
    use chronnect::training::{train, TrainSample};

    let dwell = 36.0;
    let forward = cycle_chain_local(3, 1.0 - 1.0 / dwell);
    let backward = forward.transpose();
    let spec = spec_with(vec![forward, backward], 101);
    let records = records_for(&spec);
    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.125, 101).unwrap();
    let fold = &plan.folds[0];

    let crops = |ids: &std::collections::BTreeSet<String>| -> Vec<Sample> {
        let mut out = Vec::new();
        for r in &records {
            if !ids.contains(&r.subject_id) {
                continue;
            }
            for scan in &r.scans {
                let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                out.extend(augment(&dfc, r.label, 30, 1).unwrap());
            }
        }
        out
    };
    let train_crops = crops(&fold.train_subjects);
    let val_crops = crops(&fold.val_subjects);
    let tr: Vec<TrainSample> = train_crops
        .iter()
        .map(|s| TrainSample { data: &s.data, label: s.label })
        .collect();
    let va: Vec<TrainSample> = val_crops
        .iter()
        .map(|s| TrainSample { data: &s.data, label: s.label })
        .collect();

    for (lr0, dropout) in [(0.003f64, 0.5f64), (0.01, 0.5), (0.003, 0.25), (0.001, 0.5)] {
        let config = TrainConfig {
            lr0,
            dropout_rate: dropout,
            max_epochs: 30,
            patience_epochs: 29,
            seed: 101,
            ..TrainConfig::default()
        };
        let model = ModelConfig::new(Variant::FullBiLstm, 120, 8, 30);
        let outcome = train(&model, &tr, &va, &config).unwrap();
        let curve: Vec<String> = outcome
            .report
            .epochs
            .iter()
            .map(|e| format!("{:.3}/{:.3}", e.train_loss, e.val_loss))
            .collect();
        println!("lr={lr0} drop={dropout}: {}", curve.join(" "));
    }
}

#[test]
#[ignore]
fn probe_early_stopped_order() {
    let dwell = 36.0;
    let forward = cycle_chain_local(3, 1.0 - 1.0 / dwell);
    let backward = forward.transpose();
    let spec = spec_with(vec![forward, backward], 101);
    let records = records_for(&spec);

    for (h, lr0, drop, max_e, pat) in [
        (8usize, 0.01f64, 0.5f64, 15usize, 4usize),
        (16, 0.01, 0.5, 15, 4),
        (16, 0.005, 0.25, 20, 5),
    ] {
        let train = TrainConfig {
            lr0,
            dropout_rate: drop,
            max_epochs: max_e,
            patience_epochs: pat,
            seed: 101,
            ..TrainConfig::default()
        };
        let (auc, dt) = eval(
            &records,
            Method::Lstm {
                variant: Variant::FullBiLstm,
                hidden_dim: h,
                train,
                train_stride: 1,
            },
            101,
        );
        println!("h={h} lr={lr0} drop={drop} max={max_e} pat={pat}: auc={auc:.3} ({dt:?})");
    }
}

#[test]
#[ignore]
fn probe_stride_and_decay() {
    use chronnect::evaluation::{augment, majority_vote, roc_auc, Sample};
    use chronnect::recurrent::{model_forward, ModelConfig};
    use chronnect::training::{train, TrainSample};

    let dwell = 36.0;
    let forward = cycle_chain_local(3, 1.0 - 1.0 / dwell);
    let backward = forward.transpose();
    let spec = spec_with(vec![forward, backward], 101);
    let records = records_for(&spec);
    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.125, 101).unwrap();

    let crops = |ids: &std::collections::BTreeSet<String>, stride: usize| -> Vec<Sample> {
        let mut out = Vec::new();
        for r in &records {
            if !ids.contains(&r.subject_id) {
                continue;
            }
            for scan in &r.scans {
                let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                out.extend(augment(&dfc, r.label, 30, stride).unwrap());
            }
        }
        out
    };

    for (stride, lr0, decay, max_e, pat) in [
        (5usize, 0.01f64, 0.0f64, 20usize, 6usize),
        (5, 0.01, 2e-6, 40, 10),
        (2, 0.01, 2e-6, 25, 7),
    ] {
        let t = Instant::now();
        let mut fold_aucs = Vec::new();
        for (fi, fold) in plan.folds.iter().enumerate() {
            let train_crops = crops(&fold.train_subjects, stride);
            let val_crops = crops(&fold.val_subjects, 1);
            let tr: Vec<TrainSample> = train_crops
                .iter()
                .map(|s| TrainSample { data: &s.data, label: s.label })
                .collect();
            let va: Vec<TrainSample> = val_crops
                .iter()
                .map(|s| TrainSample { data: &s.data, label: s.label })
                .collect();
            let config = TrainConfig {
                lr0,
                decay_rate: decay,
                max_epochs: max_e,
                patience_epochs: pat,
                seed: 101 + fi as u64,
                ..TrainConfig::default()
            };
            let model = ModelConfig::new(Variant::FullBiLstm, 120, 8, 30);
            let outcome = train(&model, &tr, &va, &config).unwrap();
            let mut truth = Vec::new();
            let mut scores = Vec::new();
            for r in &records {
                if !fold.test_subjects.contains(&r.subject_id) {
                    continue;
                }
                let mut probs = Vec::new();
                for scan in &r.scans {
                    let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                    for crop in augment(&dfc, r.label, 30, 1).unwrap() {
                        let (p, _) = model_forward(&model, &outcome.best_params, &crop.data, None).unwrap();
                        probs.push(p[1]);
                    }
                }
                let (_, score) = majority_vote(&probs).unwrap();
                truth.push(r.label);
                scores.push(score);
            }
            let (auc, _) = roc_auc(&scores, &truth).unwrap();
            fold_aucs.push(auc);
        }
        let mean: f64 = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
        let detail: Vec<String> = fold_aucs.iter().map(|a| format!("{a:.2}")).collect();
        println!(
            "stride={stride} lr={lr0} decay={decay} max={max_e}: mean={mean:.3} folds=[{}] ({:?})",
            detail.join(","),
            t.elapsed()
        );
    }
}

#[test]
#[ignore]
fn probe_restarts() {
    use chronnect::evaluation::{augment, majority_vote, roc_auc, Sample};
    use chronnect::recurrent::{model_forward, ModelConfig};
    use chronnect::training::{train, TrainSample};

    let dwell = 36.0;
    let forward = cycle_chain_local(3, 1.0 - 1.0 / dwell);
    let backward = forward.transpose();
    let spec = spec_with(vec![forward, backward], 101);
    let records = records_for(&spec);
    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.2, 101).unwrap();

    let crops = |ids: &std::collections::BTreeSet<String>, stride: usize| -> Vec<Sample> {
        let mut out = Vec::new();
        for r in &records {
            if !ids.contains(&r.subject_id) {
                continue;
            }
            for scan in &r.scans {
                let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                out.extend(augment(&dfc, r.label, 30, stride).unwrap());
            }
        }
        out
    };

    let t = Instant::now();
    let mut fold_aucs = Vec::new();
    for (fi, fold) in plan.folds.iter().enumerate() {
        let train_crops = crops(&fold.train_subjects, 2);
        let val_crops = crops(&fold.val_subjects, 1);
        let tr: Vec<TrainSample> = train_crops
            .iter()
            .map(|s| TrainSample { data: &s.data, label: s.label })
            .collect();
        let va: Vec<TrainSample> = val_crops
            .iter()
            .map(|s| TrainSample { data: &s.data, label: s.label })
            .collect();
        let model = ModelConfig::new(Variant::FullBiLstm, 120, 8, 30);
        let mut best: Option<(f64, chronnect::recurrent::ModelParams)> = None;
        let mut vals = Vec::new();
        for restart in 0..3u64 {
            let config = TrainConfig {
                lr0: 0.01,
                decay_rate: 2e-6,
                max_epochs: 25,
                patience_epochs: 7,
                seed: 101 + 1000 * (fi as u64) + restart,
                ..TrainConfig::default()
            };
            let outcome = train(&model, &tr, &va, &config).unwrap();
            vals.push(format!("{:.3}", outcome.report.best_val_loss));
            if best.as_ref().map_or(true, |(v, _)| outcome.report.best_val_loss < *v) {
                best = Some((outcome.report.best_val_loss, outcome.best_params));
            }
        }
        let (best_val, params) = best.unwrap();
        let mut truth = Vec::new();
        let mut scores = Vec::new();
        for r in &records {
            if !fold.test_subjects.contains(&r.subject_id) {
                continue;
            }
            let mut probs = Vec::new();
            for scan in &r.scans {
                let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                for crop in augment(&dfc, r.label, 30, 1).unwrap() {
                    let (p, _) = model_forward(&model, &params, &crop.data, None).unwrap();
                    probs.push(p[1]);
                }
            }
            let (_, score) = majority_vote(&probs).unwrap();
            truth.push(r.label);
            scores.push(score);
        }
        let (auc, _) = roc_auc(&scores, &truth).unwrap();
        println!("fold {fi}: restart vals [{}] chose {best_val:.3} auc={auc:.3}", vals.join(","));
        fold_aucs.push(auc);
    }
    let mean: f64 = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
    println!("mean auc={mean:.3} ({:?})", t.elapsed());
}

#[allow(clippy::too_many_arguments)]
fn restart_run(
    dwell: f64,
    h: usize,
    drop: f64,
    lr0: f64,
    decay: f64,
    max_e: usize,
    pat: usize,
    stride: usize,
    seed: u64,
) -> (f64, Vec<f64>) {
    let forward = cycle_chain_local(3, 1.0 - 1.0 / dwell);
    let backward = forward.transpose();
    let spec = spec_with(vec![forward, backward], seed);
    restart_run_spec(&spec, Variant::FullBiLstm, h, drop, lr0, decay, max_e, pat, stride, seed)
}

#[allow(clippy::too_many_arguments)]
fn restart_run_spec(
    spec: &SyntheticSpec,
    variant: Variant,
    h: usize,
    drop: f64,
    lr0: f64,
    decay: f64,
    max_e: usize,
    pat: usize,
    stride: usize,
    seed: u64,
) -> (f64, Vec<f64>) {
    use chronnect::evaluation::{augment, majority_vote, roc_auc, Sample};
    use chronnect::recurrent::{model_forward, ModelConfig};
    use chronnect::training::{train, TrainSample};

    let records = records_for(spec);
    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.2, seed).unwrap();

    let crops = |ids: &std::collections::BTreeSet<String>, st: usize| -> Vec<Sample> {
        let mut out = Vec::new();
        for r in &records {
            if !ids.contains(&r.subject_id) {
                continue;
            }
            for scan in &r.scans {
                let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                out.extend(augment(&dfc, r.label, 30, st).unwrap());
            }
        }
        out
    };

    let mut fold_aucs = Vec::new();
    for (fi, fold) in plan.folds.iter().enumerate() {
        let train_crops = crops(&fold.train_subjects, stride);
        let val_crops = crops(&fold.val_subjects, 1);
        let tr: Vec<TrainSample> = train_crops
            .iter()
            .map(|s| TrainSample { data: &s.data, label: s.label })
            .collect();
        let va: Vec<TrainSample> = val_crops
            .iter()
            .map(|s| TrainSample { data: &s.data, label: s.label })
            .collect();
        let model = ModelConfig::new(variant, 120, h, 30);
        let mut best: Option<(f64, chronnect::recurrent::ModelParams)> = None;
        for restart in 0..3u64 {
            let config = TrainConfig {
                lr0,
                decay_rate: decay,
                dropout_rate: drop,
                max_epochs: max_e,
                patience_epochs: pat,
                seed: seed + 1000 * (fi as u64) + restart,
                ..TrainConfig::default()
            };
            let outcome = train(&model, &tr, &va, &config).unwrap();
            if best.as_ref().map_or(true, |(v, _)| outcome.report.best_val_loss < *v) {
                best = Some((outcome.report.best_val_loss, outcome.best_params));
            }
        }
        let (_, params) = best.unwrap();
        let mut truth = Vec::new();
        let mut scores = Vec::new();
        for r in &records {
            if !fold.test_subjects.contains(&r.subject_id) {
                continue;
            }
            let mut probs = Vec::new();
            for scan in &r.scans {
                let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                for crop in augment(&dfc, r.label, 30, 1).unwrap() {
                    let (p, _) = model_forward(&model, &params, &crop.data, None).unwrap();
                    probs.push(p[1]);
                }
            }
            let (_, score) = majority_vote(&probs).unwrap();
            truth.push(r.label);
            scores.push(score);
        }
        let (auc, _) = roc_auc(&scores, &truth).unwrap();
        fold_aucs.push(auc);
    }
    let mean: f64 = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
    (mean, fold_aucs)
}

#[test]
#[ignore]
fn probe_grid_a() {
    for (label, dwell, h, drop, lr0, decay) in [
        ("h16", 36.0f64, 16usize, 0.5f64, 0.01f64, 2e-6f64),
        ("drop03", 36.0, 8, 0.3, 0.01, 2e-6),
        ("hot", 36.0, 8, 0.5, 0.02, 5e-6),
    ] {
        let t = Instant::now();
        let (mean, folds) = restart_run(dwell, h, drop, lr0, decay, 25, 7, 2, 101);
        let detail: Vec<String> = folds.iter().map(|a| format!("{a:.2}")).collect();
        println!("{label}: mean={mean:.3} folds=[{}] ({:?})", detail.join(","), t.elapsed());
    }
}

#[test]
#[ignore]
fn probe_grid_dwell_h16() {
    for dwell in [42.0f64, 48.0] {
        let t = Instant::now();
        let (mean, folds) = restart_run(dwell, 16, 0.5, 0.01, 2e-6, 25, 7, 2, 101);
        let detail: Vec<String> = folds.iter().map(|a| format!("{a:.2}")).collect();
        println!("dwell={dwell}: mean={mean:.3} folds=[{}] ({:?})", detail.join(","), t.elapsed());
    }
}

#[test]
#[ignore]
fn probe_strong_templates() {
    let t = Instant::now();
    let (mean, folds) = restart_run(36.0, 16, 0.5, 0.01, 2e-6, 25, 7, 2, 101);
    let detail: Vec<String> = folds.iter().map(|a| format!("{a:.2}")).collect();
    println!("strong h16 d36: mean={mean:.3} folds=[{}] ({:?})", detail.join(","), t.elapsed());
}

#[test]
#[ignore]
fn probe_strong_h8() {
    for dwell in [30.0f64, 36.0] {
        let t = Instant::now();
        let (mean, folds) = restart_run(dwell, 8, 0.5, 0.01, 2e-6, 25, 7, 2, 101);
        let detail: Vec<String> = folds.iter().map(|a| format!("{a:.2}")).collect();
        println!("strong h8 d{dwell}: mean={mean:.3} folds=[{}] ({:?})", detail.join(","), t.elapsed());
    }
}

#[test]
#[ignore]
fn probe_strong_occupancy() {
    let even = vec![12.0f64; 3];
    let mut skewed = even.clone();
    skewed[0] *= 3.0;
    let spec = spec_with(vec![dwell_chain_local(&even), dwell_chain_local(&skewed)], 202);
    let records = records_for(&spec);
    let (sauc, dt) = eval(
        &records,
        Method::DfcStatus {
            num_statuses: 3,
            svm: SvmConfig::default(),
        },
        202,
    );
    println!("occ strong status: auc={sauc:.3} ({dt:?})");
    let (h, train) = bench_config(8, 10, 0.01, 202);
    let (auc, dt) = eval(
        &records,
        Method::Lstm {
            variant: Variant::FullBiLstm,
            hidden_dim: h,
            train,
            train_stride: 1,
        },
        202,
    );
    println!("occ strong bilstm-h8: auc={auc:.3} ({dt:?})");
}

#[test]
#[ignore]
fn probe_occ_grid() {
    for base in [8.0f64, 12.0, 16.0, 20.0, 24.0] {
        for mult in [3.0f64, 4.0, 5.0] {
            let even = vec![base; 3];
            let mut skewed = even.clone();
            skewed[0] *= mult;
            let spec = spec_with(vec![dwell_chain_local(&even), dwell_chain_local(&skewed)], 202);
            let records = records_for(&spec);
            let (sauc, _) = eval(
                &records,
                Method::DfcStatus {
                    num_statuses: 3,
                    svm: SvmConfig::default(),
                },
                202,
            );
            println!("occ grid b={base} m={mult}: status auc={sauc:.3}");
        }
    }
}

#[test]
#[ignore]
fn probe_occ_bilstm_best() {
    for (base, mult) in [(8.0f64, 5.0f64), (8.0, 4.0)] {
        let even = vec![base; 3];
        let mut skewed = even.clone();
        skewed[0] *= mult;
        let spec = spec_with(vec![dwell_chain_local(&even), dwell_chain_local(&skewed)], 202);
        let t = Instant::now();
        let (mean, folds) =
            restart_run_spec(&spec, Variant::FullBiLstm, 16, 0.5, 0.01, 2e-6, 25, 7, 2, 202);
        let detail: Vec<String> = folds.iter().map(|a| format!("{a:.2}")).collect();
        println!(
            "occ bilstm b={base} m={mult}: mean={mean:.3} folds=[{}] ({:?})",
            detail.join(","),
            t.elapsed()
        );
    }
}

#[test]
#[ignore]
fn probe_order_more_seeds() {
    for seed in [102u64, 103] {
        let t = Instant::now();
        let (mean, folds) = restart_run(36.0, 16, 0.5, 0.01, 2e-6, 25, 7, 2, seed);
        let detail: Vec<String> = folds.iter().map(|a| format!("{a:.2}")).collect();
        println!("order seed {seed}: mean={mean:.3} folds=[{}] ({:?})", detail.join(","), t.elapsed());
    }
}

#[test]
#[ignore]
fn probe_seed103_diagnose() {
    use chronnect::evaluation::{augment, majority_vote, roc_auc, Sample};
    use chronnect::recurrent::{model_forward, ModelConfig};
    use chronnect::training::{train, TrainSample};

    let seed = 103u64;
    let forward = cycle_chain_local(3, 1.0 - 1.0 / 36.0);
    let backward = forward.transpose();
    let spec = spec_with(vec![forward, backward], seed);
    let records = records_for(&spec);
    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.2, seed).unwrap();

    let crops = |ids: &std::collections::BTreeSet<String>, st: usize| -> Vec<Sample> {
        let mut out = Vec::new();
        for r in &records {
            if !ids.contains(&r.subject_id) {
                continue;
            }
            for scan in &r.scans {
                let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                out.extend(augment(&dfc, r.label, 30, st).unwrap());
            }
        }
        out
    };

    for (fi, fold) in plan.folds.iter().enumerate() {
        if fi != 0 && fi != 2 {
            continue;
        }
        let train_crops = crops(&fold.train_subjects, 2);
        let val_crops = crops(&fold.val_subjects, 1);
        let tr: Vec<TrainSample> = train_crops
            .iter()
            .map(|s| TrainSample { data: &s.data, label: s.label })
            .collect();
        let va: Vec<TrainSample> = val_crops
            .iter()
            .map(|s| TrainSample { data: &s.data, label: s.label })
            .collect();
        let model = ModelConfig::new(Variant::FullBiLstm, 120, 16, 30);
        for restart in 0..5u64 {
            let config = TrainConfig {
                lr0: 0.01,
                decay_rate: 2e-6,
                dropout_rate: 0.5,
                max_epochs: 25,
                patience_epochs: 7,
                seed: seed + 1000 * (fi as u64) + restart,
                ..TrainConfig::default()
            };
            let outcome = train(&model, &tr, &va, &config).unwrap();
            let params = outcome.best_params;
            let mut truth = Vec::new();
            let mut scores = Vec::new();
            for r in &records {
                if !fold.test_subjects.contains(&r.subject_id) {
                    continue;
                }
                let mut probs = Vec::new();
                for scan in &r.scans {
                    let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                    for crop in augment(&dfc, r.label, 30, 1).unwrap() {
                        let (p, _) = model_forward(&model, &params, &crop.data, None).unwrap();
                        probs.push(p[1]);
                    }
                }
                let (_, score) = majority_vote(&probs).unwrap();
                truth.push(r.label);
                scores.push(score);
            }
            let (auc, _) = roc_auc(&scores, &truth).unwrap();
            println!(
                "fold {fi} restart {restart}: val={:.4} epochs={} auc={auc:.3}",
                outcome.report.best_val_loss,
                outcome.report.epochs.len()
            );
        }
    }
}

#[test]
#[ignore]
fn probe_val_auc_selector() {
    use chronnect::evaluation::{augment, majority_vote, roc_auc, Sample};
    use chronnect::recurrent::{model_forward, ModelConfig, ModelParams};
    use chronnect::training::{train, TrainSample};

    let seed = 103u64;
    let forward = cycle_chain_local(3, 1.0 - 1.0 / 36.0);
    let backward = forward.transpose();
    let spec = spec_with(vec![forward, backward], seed);
    let records = records_for(&spec);
    let window = WindowSpec::new(30, 2).unwrap();
    let labeled: Vec<(String, usize)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.label))
        .collect();
    let plan = make_folds(&labeled, 5, 0.2, seed).unwrap();

    let crops = |ids: &std::collections::BTreeSet<String>, st: usize| -> Vec<Sample> {
        let mut out = Vec::new();
        for r in &records {
            if !ids.contains(&r.subject_id) {
                continue;
            }
            for scan in &r.scans {
                let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                out.extend(augment(&dfc, r.label, 30, st).unwrap());
            }
        }
        out
    };

    let subject_auc = |ids: &std::collections::BTreeSet<String>,
                       model: &ModelConfig,
                       params: &ModelParams|
     -> f64 {
        let mut truth = Vec::new();
        let mut scores = Vec::new();
        for r in &records {
            if !ids.contains(&r.subject_id) {
                continue;
            }
            let mut probs = Vec::new();
            for scan in &r.scans {
                let (dfc, _) = chronnect::chronnectome::compute_dfc(scan, &window).unwrap();
                for crop in augment(&dfc, r.label, 30, 1).unwrap() {
                    let (p, _) = model_forward(model, params, &crop.data, None).unwrap();
                    probs.push(p[1]);
                }
            }
            let (_, score) = majority_vote(&probs).unwrap();
            truth.push(r.label);
            scores.push(score);
        }
        roc_auc(&scores, &truth).unwrap().0
    };

    for (fi, fold) in plan.folds.iter().enumerate() {
        let train_crops = crops(&fold.train_subjects, 2);
        let val_crops = crops(&fold.val_subjects, 1);
        let tr: Vec<TrainSample> = train_crops
            .iter()
            .map(|s| TrainSample { data: &s.data, label: s.label })
            .collect();
        let va: Vec<TrainSample> = val_crops
            .iter()
            .map(|s| TrainSample { data: &s.data, label: s.label })
            .collect();
        let model = ModelConfig::new(Variant::FullBiLstm, 120, 16, 30);
        for restart in 0..3u64 {
            let config = TrainConfig {
                lr0: 0.01,
                decay_rate: 2e-6,
                dropout_rate: 0.5,
                max_epochs: 25,
                patience_epochs: 7,
                seed: seed + 1000 * (fi as u64) + restart,
                ..TrainConfig::default()
            };
            let outcome = train(&model, &tr, &va, &config).unwrap();
            let va_auc = subject_auc(&fold.val_subjects, &model, &outcome.best_params);
            let te_auc = subject_auc(&fold.test_subjects, &model, &outcome.best_params);
            println!(
                "fold {fi} restart {restart}: val_loss={:.4} val_auc={va_auc:.3} test_auc={te_auc:.3}",
                outcome.report.best_val_loss
            );
        }
    }
}

#[test]
#[ignore]
fn probe_seed103_dwell() {
    for dwell in [42.0f64, 48.0] {
        let t = Instant::now();
        let (mean, folds) = restart_run(dwell, 16, 0.5, 0.01, 2e-6, 25, 7, 2, 103);
        let detail: Vec<String> = folds.iter().map(|a| format!("{a:.2}")).collect();
        println!("seed103 d{dwell}: mean={mean:.3} folds=[{}] ({:?})", detail.join(","), t.elapsed());
    }
}

#[test]
#[ignore]
fn probe_template_distances() {
    use chronnect::datagen::make_status_library;
    use chronnect::numerics::Rng;
    for seed in [101u64, 102, 103, 104, 105] {
        let mut rng = Rng::new(seed, 0);
        let lib = make_status_library(16, 3, &mut rng).unwrap();
        let mut ds = Vec::new();
        for i in 0..3 {
            for j in (i + 1)..3 {
                ds.push(lib[i].frobenius_distance(&lib[j]));
            }
        }
        let detail: Vec<String> = ds.iter().map(|d| format!("{d:.2}")).collect();
        println!("seed {seed}: pairwise=[{}]", detail.join(","));
    }
}

#[test]
#[ignore]
fn probe_m4_distances() {
    use chronnect::datagen::make_status_library;
    use chronnect::numerics::Rng;
    let mut all = Vec::new();
    for seed in 0..30u64 {
        let mut rng = Rng::new(seed, 0);
        if let Ok(lib) = make_status_library(4, 2, &mut rng) {
            all.push(lib[0].frobenius_distance(&lib[1]));
        }
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let detail: Vec<String> = all.iter().map(|d| format!("{d:.2}")).collect();
    println!("m4 k2 sorted distances over 30 seeds: [{}]", detail.join(","));
}

#[test]
#[ignore]
fn probe_floor_seeds_a() {
    for seed in [101u64, 102] {
        let t = Instant::now();
        let (mean, folds) = restart_run(36.0, 16, 0.5, 0.01, 2e-6, 25, 7, 2, seed);
        let detail: Vec<String> = folds.iter().map(|a| format!("{a:.2}")).collect();
        println!("floor seed {seed}: mean={mean:.3} folds=[{}] ({:?})", detail.join(","), t.elapsed());
    }
}

#[test]
#[ignore]
fn probe_floor_seeds_b() {
    for seed in [103u64, 104] {
        let t = Instant::now();
        let (mean, folds) = restart_run(36.0, 16, 0.5, 0.01, 2e-6, 25, 7, 2, seed);
        let detail: Vec<String> = folds.iter().map(|a| format!("{a:.2}")).collect();
        println!("floor seed {seed}: mean={mean:.3} folds=[{}] ({:?})", detail.join(","), t.elapsed());
    }
}

#[test]
#[ignore]
fn probe_acceptance_order_rehearsal() {
    use chronnect::datagen::order_coded_spec;
    let total = Instant::now();
    let mut bilstm_aucs = Vec::new();
    let mut status_aucs = Vec::new();
    let mut var_aucs = Vec::new();
    for seed in [1u64, 2, 3] {
        let spec = order_coded_spec(16, 3, seed).unwrap();
        let records = records_for(&spec);
        let labeled: Vec<(String, usize)> = records
            .iter()
            .map(|r| (r.subject_id.clone(), r.label))
            .collect();
        let plan = make_folds(&labeled, 5, 0.2, seed).unwrap();
        let window = WindowSpec::new(30, 2).unwrap();
        let train = TrainConfig {
            lr0: 0.01,
            decay_rate: 2e-6,
            max_epochs: 22,
            patience_epochs: 7,
            restarts: 3,
            seed,
            ..TrainConfig::default()
        };
        let method = Method::Lstm {
            variant: Variant::FullBiLstm,
            hidden_dim: 16,
            train,
            train_stride: 2,
        };
        let report = run_protocol(&records, &window, &method, &plan, 30).unwrap();
        bilstm_aucs.push(report.mean.auc);
        let status = run_protocol(
            &records,
            &window,
            &Method::DfcStatus {
                num_statuses: 3,
                svm: SvmConfig::default(),
            },
            &plan,
            30,
        )
        .unwrap();
        status_aucs.push(status.mean.auc);
        let var = run_protocol(
            &records,
            &window,
            &Method::DfcVariability {
                alpha: 0.05,
                svm: SvmConfig::default(),
            },
            &plan,
            30,
        )
        .unwrap();
        var_aucs.push(var.mean.auc);
        println!(
            "seed {seed}: bilstm={:.3} status={:.3} var={:.3}",
            report.mean.auc, status.mean.auc, var.mean.auc
        );
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "REHEARSAL order: bilstm mean={:.3} status mean={:.3} var mean={:.3} total={:?}",
        mean(&bilstm_aucs),
        mean(&status_aucs),
        mean(&var_aucs),
        total.elapsed()
    );
}

#[test]
#[ignore]
fn probe_acceptance_occupancy_rehearsal() {
    use chronnect::datagen::occupancy_coded_spec;
    let total = Instant::now();
    let mut bilstm_aucs = Vec::new();
    let mut status_aucs = Vec::new();
    for seed in [1u64, 2, 3] {
        let spec = occupancy_coded_spec(16, 3, seed).unwrap();
        let records = records_for(&spec);
        let labeled: Vec<(String, usize)> = records
            .iter()
            .map(|r| (r.subject_id.clone(), r.label))
            .collect();
        let plan = make_folds(&labeled, 5, 0.2, seed).unwrap();
        let window = WindowSpec::new(30, 2).unwrap();
        let train = TrainConfig {
            lr0: 0.01,
            decay_rate: 2e-6,
            max_epochs: 22,
            patience_epochs: 7,
            restarts: 3,
            seed,
            ..TrainConfig::default()
        };
        let method = Method::Lstm {
            variant: Variant::FullBiLstm,
            hidden_dim: 16,
            train,
            train_stride: 2,
        };
        let report = run_protocol(&records, &window, &method, &plan, 30).unwrap();
        bilstm_aucs.push(report.mean.auc);
        let status = run_protocol(
            &records,
            &window,
            &Method::DfcStatus {
                num_statuses: 3,
                svm: SvmConfig::default(),
            },
            &plan,
            30,
        )
        .unwrap();
        status_aucs.push(status.mean.auc);
        println!(
            "occ seed {seed}: bilstm={:.3} status={:.3}",
            report.mean.auc, status.mean.auc
        );
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "REHEARSAL occupancy: bilstm mean={:.3} status mean={:.3} total={:?}",
        mean(&bilstm_aucs),
        mean(&status_aucs),
        total.elapsed()
    );
}

#[test]
#[ignore]
fn probe_acceptance_ablation() {
    use chronnect::datagen::order_coded_spec;
    let total = Instant::now();
    let run_variant = |variant: Variant, seed: u64| -> f64 {
        let spec = order_coded_spec(16, 3, seed).unwrap();
        let records = records_for(&spec);
        let labeled: Vec<(String, usize)> = records
            .iter()
            .map(|r| (r.subject_id.clone(), r.label))
            .collect();
        let plan = make_folds(&labeled, 5, 0.2, seed).unwrap();
        let window = WindowSpec::new(30, 2).unwrap();
        let train = TrainConfig {
            lr0: 0.01,
            decay_rate: 2e-6,
            max_epochs: 22,
            patience_epochs: 7,
            restarts: 3,
            seed,
            ..TrainConfig::default()
        };
        let method = Method::Lstm {
            variant,
            hidden_dim: 16,
            train,
            train_stride: 2,
        };
        run_protocol(&records, &window, &method, &plan, 30)
            .unwrap()
            .mean
            .auc
    };
    let mut means = Vec::new();
    for variant in [Variant::FullBiLstm, Variant::FullLstm, Variant::BiLstmLast] {
        let mut aucs = Vec::new();
        for seed in 1u64..=5 {
            // Seeds 1..3 of FullBiLstm already measured in the order rehearsal;
            // rerun anyway so this probe stands alone.
            let auc = run_variant(variant, seed);
            println!("ablation {variant:?} seed {seed}: auc={auc:.3}");
            aucs.push(auc);
        }
        let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
        println!("ablation {variant:?} mean={mean:.3}");
        means.push(mean);
    }
    println!(
        "REHEARSAL ablation: bilstm={:.3} lstm={:.3} last={:.3} total={:?}",
        means[0],
        means[1],
        means[2],
        total.elapsed()
    );
}
