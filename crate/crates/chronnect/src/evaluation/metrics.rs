//! Subject-level voting, confusion metrics, and a dual-route ROC/AUC whose
//! two computations cross-check each other on every call.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Collapses one subject's crop probabilities into a final call.
///
/// Each crop votes for the class with the higher probability (exact ties
/// count for the negative class). A split vote goes to the positive class
/// only when the mean positive probability exceeds one half. The returned
/// score is that mean, accumulated in sorted order so any permutation of the
/// crops produces bit-identical output.
pub fn majority_vote(pos_probs: &[f64]) -> Result<(usize, f64)> {
    if pos_probs.is_empty() {
        return Err(Error::InsufficientData(
            "majority vote needs at least one crop".to_string(),
        ));
    }
    if let Some(p) = pos_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Config(format!("probability {p} outside [0, 1]")));
    }
    let positive_votes = pos_probs.iter().filter(|&&p| p > 0.5).count();
    let negative_votes = pos_probs.len() - positive_votes;
    let mut sorted = pos_probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let score = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let label = match positive_votes.cmp(&negative_votes) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Equal => usize::from(score > 0.5),
    };
    Ok((label, score))
}

/// Threshold-free classification ratios. A ratio whose denominator is zero
/// is reported as 0.0 and named in `undefined`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub acc: f64,
    pub sen: f64,
    pub spe: f64,
    pub f1: f64,
    pub undefined: Vec<String>,
}

/// Counts with the positive class = 1 and derives ACC/SEN/SPE/F1.
pub fn confusion_metrics(predicted: &[usize], truth: &[usize]) -> Result<ConfusionMetrics> {
    if predicted.is_empty() || predicted.len() != truth.len() {
        return Err(Error::shape(
            "confusion_metrics",
            format!("{} predictions vs {} labels", predicted.len(), truth.len()),
        ));
    }
    if predicted.iter().chain(truth).any(|&l| l > 1) {
        return Err(Error::Config("labels must be 0 or 1".to_string()));
    }
    let (mut tp, mut fp, mut tn, mut fne) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            _ => fne += 1,
        }
    }
    let mut undefined = Vec::new();
    let mut ratio = |name: &str, num: usize, den: usize| -> f64 {
        if den == 0 {
            undefined.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let acc = (tp + tn) as f64 / predicted.len() as f64;
    let sen = ratio("sen", tp, tp + fne);
    let spe = ratio("spe", tn, tn + fp);
    let f1 = if tp + fne == 0 || tp + fp == 0 {
        undefined.push("f1".to_string());
        0.0
    } else {
        let prec = tp as f64 / (tp + fp) as f64;
        let rec = tp as f64 / (tp + fne) as f64;
        if prec + rec == 0.0 {
            undefined.push("f1".to_string());
            0.0
        } else {
            2.0 * prec * rec / (prec + rec)
        }
    };
    Ok(ConfusionMetrics {
        acc,
        sen,
        spe,
        f1,
        undefined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// AUC with the full ROC sweep.
///
/// The area is computed twice: as the rank-based pair statistic (ties worth
/// one half) and as the trapezoidal area under the threshold-swept curve.
/// The two derivations are independent, and a disagreement beyond 1e-12
/// means a defect, so it halts rather than returning either value.
pub fn roc_auc(scores: &[f64], labels: &[usize]) -> Result<(f64, Vec<RocPoint>)> {
    if scores.len() != labels.len() {
        return Err(Error::shape(
            "roc_auc",
            format!("{} scores vs {} labels", scores.len(), labels.len()),
        ));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Config("labels must be 0 or 1".to_string()));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {s}")));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Config(
            "ROC needs both classes present".to_string(),
        ));
    }

    // Route 1: Mann-Whitney via average ranks over the pooled scores.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j share the average rank.
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    let auc_pairs = u / (pos as f64 * neg as f64);

    // Route 2: sweep distinct thresholds from high to low; predict positive
    // when score >= threshold; integrate with the trapezoid rule.
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let mut auc_trapezoid = 0.0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = order.len();
    while i > 0 {
        let threshold = scores[order[i - 1]];
        while i > 0 && scores[order[i - 1]] == threshold {
            if labels[order[i - 1]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i -= 1;
        }
        let prev = *points.last().expect("seeded with the origin");
        let point = RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold,
        };
        auc_trapezoid += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) / 2.0;
        points.push(point);
    }
    assert!(
        (auc_pairs - auc_trapezoid).abs() <= 1e-12,
        "AUC routes disagree: pairs {auc_pairs} vs trapezoid {auc_trapezoid}"
    );
    Ok((auc_pairs, points))
}

/// Per-fold metric values in fold order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub acc: f64,
    pub sen: f64,
    pub spe: f64,
    pub f1: f64,
    pub auc: f64,
    pub undefined: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryMetrics {
    pub acc: f64,
    pub sen: f64,
    pub spe: f64,
    pub f1: f64,
    pub auc: f64,
}

/// Cross-validated result for one method. The ROC pools every subject's
/// out-of-fold score; it goes to its own CSV rather than the metrics JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub per_fold: Vec<FoldMetrics>,
    pub mean: SummaryMetrics,
    pub std: SummaryMetrics,
    #[serde(skip)]
    pub roc: Vec<RocPoint>,
}

/// Fold-wise mean and population standard deviation of each metric.
pub fn summarize(per_fold: &[FoldMetrics]) -> (SummaryMetrics, SummaryMetrics) {
    let n = per_fold.len() as f64;
    let field = |get: fn(&FoldMetrics) -> f64| -> (f64, f64) {
        let m = per_fold.iter().map(get).sum::<f64>() / n;
        let var = per_fold.iter().map(|f| (get(f) - m) * (get(f) - m)).sum::<f64>() / n;
        (m, var.sqrt())
    };
    let (acc_m, acc_s) = field(|f| f.acc);
    let (sen_m, sen_s) = field(|f| f.sen);
    let (spe_m, spe_s) = field(|f| f.spe);
    let (f1_m, f1_s) = field(|f| f.f1);
    let (auc_m, auc_s) = field(|f| f.auc);
    (
        SummaryMetrics {
            acc: acc_m,
            sen: sen_m,
            spe: spe_m,
            f1: f1_m,
            auc: auc_m,
        },
        SummaryMetrics {
            acc: acc_s,
            sen: sen_s,
            spe: spe_s,
            f1: f1_s,
            auc: auc_s,
        },
    )
}

/// `fpr,tpr,threshold` rows; the leading point's threshold prints as `inf`.
pub fn roc_csv_string(points: &[RocPoint]) -> String {
    let mut out = String::from("fpr,tpr,threshold\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.fpr, p.tpr, p.threshold));
    }
    out
}
