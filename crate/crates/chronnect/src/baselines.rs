//! The three non-recurrent competitors: static FC with a linear SVM, k-means
//! status occurrence features, and per-link variability features with t-test
//! selection. All of them feed a shared primal SVM trainer.

use crate::chronnectome::DFCSequence;
use crate::error::{Error, Result};
use crate::numerics::{dot, mean, Matrix, Rng};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Linear decision function: score(x) = w.x + b, trained in the primal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_coeff: f64,
}

impl LinearSvmModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

/// Average hinge loss plus the ridge penalty the trainer minimizes.
pub fn svm_objective(model: &LinearSvmModel, features: &Matrix, labels: &[f64]) -> f64 {
    let hinge: f64 = (0..features.rows())
        .map(|i| (1.0 - labels[i] * model.score(features.row(i))).max(0.0))
        .sum();
    let sq: f64 = model.weights.iter().map(|w| w * w).sum();
    hinge / features.rows() as f64 + model.l2_coeff / 2.0 * sq
}

fn validate_svm_labels(features: &Matrix, labels: &[f64]) -> Result<()> {
    if features.rows() != labels.len() {
        return Err(Error::shape(
            "svm_train",
            format!("{} rows vs {} labels", features.rows(), labels.len()),
        ));
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::Config("svm labels must be -1 or +1".to_string()));
    }
    if !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(Error::Config(
            "svm training needs both classes present".to_string(),
        ));
    }
    Ok(())
}

/// Stochastic subgradient descent on the hinge objective.
///
/// Step t uses rate 1/(l2_coeff * t + 1): bounded at the start, decaying as
/// 1/t for convergence. The ridge shrink applies every step, the hinge push
/// only when the margin is violated; the bias carries no penalty. The sample
/// order is reshuffled each epoch from the seed, so the returned final
/// iterate is a deterministic function of (data, l2_coeff, epochs, seed).
pub fn svm_train(
    features: &Matrix,
    labels: &[f64],
    l2_coeff: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearSvmModel> {
    validate_svm_labels(features, labels)?;
    if l2_coeff <= 0.0 || epochs == 0 {
        return Err(Error::Config(
            "svm needs l2_coeff > 0 and epochs >= 1".to_string(),
        ));
    }
    let dim = features.cols();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut rng = Rng::new(seed, 0);
    let mut order: Vec<usize> = (0..features.rows()).collect();
    let mut t = 0u64;
    for _ in 0..epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (l2_coeff * t as f64 + 1.0);
            let x = features.row(i);
            let y = labels[i];
            let margin = y * (dot(&w, x) + b);
            let shrink = 1.0 - eta * l2_coeff;
            for v in w.iter_mut() {
                *v *= shrink;
            }
            if margin < 1.0 {
                for (v, xi) in w.iter_mut().zip(x) {
                    *v += eta * y * xi;
                }
                b += eta * y;
            }
        }
    }
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::NonFinite("svm weights diverged".to_string()));
    }
    Ok(LinearSvmModel {
        weights: w,
        bias: b,
        l2_coeff,
    })
}

/// Chronnectome statuses: k centroids over pooled dFC window vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusModel {
    pub k: usize,
    pub centroids: Matrix,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl StatusModel {
    /// Index of the nearest centroid; equidistant rows go to the lowest index.
    pub fn assign(&self, row: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..self.k {
            let d = dist2(row, self.centroids.row(j));
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }
}

fn count_distinct_rows(rows: &Matrix) -> usize {
    let mut seen: Vec<&[f64]> = Vec::new();
    for r in 0..rows.rows() {
        let row = rows.row(r);
        if !seen.iter().any(|s| *s == row) {
            seen.push(row);
        }
    }
    seen.len()
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Iterates assignment and mean updates until the assignment is a fixpoint
/// or 300 iterations pass. A cluster that loses all members is reseeded to
/// the point farthest from its current centroid.
pub fn kmeans_fit(rows: &Matrix, k: usize, seed: u64) -> Result<StatusModel> {
    kmeans_fit_trace(rows, k, seed).map(|(model, _)| model)
}

/// `kmeans_fit` plus the per-iteration inertia sequence, for diagnostics.
pub fn kmeans_fit_trace(rows: &Matrix, k: usize, seed: u64) -> Result<(StatusModel, Vec<f64>)> {
    let n = rows.rows();
    if k < 2 {
        return Err(Error::Config(format!("k must be >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::InsufficientData(format!(
            "kmeans needs >= {k} rows, got {n}"
        )));
    }
    if count_distinct_rows(rows) < k {
        return Err(Error::Degeneracy(format!(
            "fewer than {k} distinct rows"
        )));
    }
    let dim = rows.cols();
    let mut rng = Rng::new(seed, 0);

    // k-means++: first centroid uniform, the rest proportional to squared
    // distance from the nearest chosen one. The distinct-row precondition
    // guarantees the mass stays positive until k centroids are placed.
    let mut centroids = Matrix::zeros(k, dim);
    let first = rng.index(n);
    centroids.row_mut(0).copy_from_slice(rows.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(rows.row(i), rows.row(first))).collect();
    for j in 1..k {
        let total: f64 = d2.iter().sum();
        let mut u = rng.uniform(0.0, total);
        let mut pick = n - 1;
        for (i, &d) in d2.iter().enumerate() {
            if u < d {
                pick = i;
                break;
            }
            u -= d;
        }
        centroids.row_mut(j).copy_from_slice(rows.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(rows.row(i), centroids.row(j)));
        }
    }

    let model_assign = |centroids: &Matrix, row: &[f64]| -> (usize, f64) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..k {
            let d = dist2(row, centroids.row(j));
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        (best, best_d)
    };

    let mut assignment = vec![usize::MAX; n];
    let mut inertia_trace = Vec::new();
    for _ in 0..300 {
        let mut next = vec![0usize; n];
        let mut dists = vec![0.0; n];
        for i in 0..n {
            let (j, d) = model_assign(&centroids, rows.row(i));
            next[i] = j;
            dists[i] = d;
        }
        let mut counts = vec![0usize; k];
        for &j in &next {
            counts[j] += 1;
        }
        for j in 0..k {
            if counts[j] == 0 {
                // Reseed to the farthest point, then redo the assignment so
                // the donated point and its neighbors can move over.
                let far = dists
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .expect("nonempty rows");
                centroids.row_mut(j).copy_from_slice(rows.row(far));
                counts[next[far]] -= 1;
                next[far] = j;
                counts[j] = 1;
                dists[far] = 0.0;
                for i in 0..n {
                    let (jj, d) = model_assign(&centroids, rows.row(i));
                    if counts[next[i]] > 1 || jj == next[i] {
                        counts[next[i]] -= 1;
                        next[i] = jj;
                        counts[jj] += 1;
                    }
                    dists[i] = d;
                }
            }
        }
        inertia_trace.push(dists.iter().sum());
        let fixpoint = next == assignment;
        assignment = next;
        if fixpoint {
            break;
        }
        let mut sums = Matrix::zeros(k, dim);
        for i in 0..n {
            let j = assignment[i];
            for (s, v) in sums.row_mut(j).iter_mut().zip(rows.row(i)) {
                *s += v;
            }
        }
        for j in 0..k {
            let c = counts[j] as f64;
            for (cv, s) in centroids.row_mut(j).iter_mut().zip(sums.row(j)) {
                *cv = s / c;
            }
        }
    }
    Ok((StatusModel { k, centroids }, inertia_trace))
}

/// Occurrence frequency of each status across the sequence's windows.
pub fn status_features(dfc: &DFCSequence, model: &StatusModel) -> Result<Vec<f64>> {
    if dfc.link_dim != model.centroids.cols() {
        return Err(Error::shape(
            "status_features",
            format!(
                "sequence dim {} vs centroid dim {}",
                dfc.link_dim,
                model.centroids.cols()
            ),
        ));
    }
    let mut counts = vec![0usize; model.k];
    for t in 0..dfc.num_windows {
        counts[model.assign(dfc.rows.row(t))] += 1;
    }
    Ok(counts
        .iter()
        .map(|&c| c as f64 / dfc.num_windows as f64)
        .collect())
}

/// Root-mean-square deviation of each link's series about its own mean.
pub fn variability_features(dfc: &DFCSequence) -> Result<Vec<f64>> {
    let t_len = dfc.num_windows;
    if t_len < 2 {
        return Err(Error::InsufficientData(format!(
            "variability needs >= 2 windows, got {t_len}"
        )));
    }
    let mut features = vec![0.0; dfc.link_dim];
    for (d, f) in features.iter_mut().enumerate() {
        let series: Vec<f64> = (0..t_len).map(|t| dfc.rows.get(t, d)).collect();
        let m = mean(&series);
        let ss: f64 = series.iter().map(|x| (x - m) * (x - m)).sum();
        *f = (ss / t_len as f64).sqrt();
    }
    Ok(features)
}

/// Two-sided critical value for the pooled two-sample t statistic, switching
/// to the normal approximation above 30 degrees of freedom.
fn t_critical(df: usize, alpha: f64) -> f64 {
    let p = 1.0 - alpha / 2.0;
    if df <= 30 {
        StudentsT::new(0.0, 1.0, df as f64)
            .expect("df >= 1")
            .inverse_cdf(p)
    } else {
        Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(p)
    }
}

/// Keeps the feature columns whose group difference passes a two-sided
/// t-test at `alpha`. Columns with zero pooled variance are skipped. If no
/// column passes, the single largest-|t| column is kept so downstream models
/// always see at least one feature.
pub fn select_by_ttest(features: &Matrix, labels: &[usize], alpha: f64) -> Result<Vec<usize>> {
    if features.rows() != labels.len() {
        return Err(Error::shape(
            "select_by_ttest",
            format!("{} rows vs {} labels", features.rows(), labels.len()),
        ));
    }
    if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
        return Err(Error::Config(format!("alpha {alpha} outside (0, 1)")));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Config("labels must be 0 or 1".to_string()));
    }
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    let n0 = labels.len() - n1;
    if n0 < 2 || n1 < 2 {
        return Err(Error::InsufficientData(format!(
            "t-test selection needs >= 2 per class, got {n0} and {n1}"
        )));
    }
    let crit = t_critical(n0 + n1 - 2, alpha);
    let mut selected = Vec::new();
    let mut best_fallback: Option<(usize, f64)> = None;
    for d in 0..features.cols() {
        let mut g0 = Vec::with_capacity(n0);
        let mut g1 = Vec::with_capacity(n1);
        for i in 0..features.rows() {
            if labels[i] == 0 {
                g0.push(features.get(i, d));
            } else {
                g1.push(features.get(i, d));
            }
        }
        let t = match crate::numerics::two_sample_t(&g1, &g0) {
            Ok(t) => t,
            Err(Error::DegenerateVariance(_)) => continue,
            Err(e) => return Err(e),
        };
        if t.abs() > crit {
            selected.push(d);
        }
        if best_fallback.map_or(true, |(_, bt)| t.abs() > bt) {
            best_fallback = Some((d, t.abs()));
        }
    }
    if selected.is_empty() {
        // Every column degenerate leaves nothing to rank; keep column 0 so
        // the caller still gets one feature.
        selected.push(best_fallback.map_or(0, |(d, _)| d));
    }
    Ok(selected)
}

/// Columnwise z-scoring by training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits per-column mean and population standard deviation. A constant
    /// column gets std 1 so applying the transform just centers it.
    pub fn fit(features: &Matrix) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::InsufficientData(
                "standardizer needs at least one row".to_string(),
            ));
        }
        let n = features.rows() as f64;
        let mut mean = vec![0.0; features.cols()];
        let mut std = vec![0.0; features.cols()];
        for d in 0..features.cols() {
            let m = (0..features.rows()).map(|i| features.get(i, d)).sum::<f64>() / n;
            let ss = (0..features.rows())
                .map(|i| {
                    let v = features.get(i, d) - m;
                    v * v
                })
                .sum::<f64>();
            let s = (ss / n).sqrt();
            mean[d] = m;
            std[d] = if s > 0.0 { s } else { 1.0 };
        }
        Ok(Standardizer { mean, std })
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn apply(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.mean.len() {
            return Err(Error::shape(
                "Standardizer::apply",
                format!("{} cols vs {} stats", features.cols(), self.mean.len()),
            ));
        }
        let mut out = features.clone();
        for r in 0..out.rows() {
            let z = self.apply_row(features.row(r));
            out.row_mut(r).copy_from_slice(&z);
        }
        Ok(out)
    }
}
