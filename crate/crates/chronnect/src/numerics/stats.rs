use crate::error::{Error, Result};
use crate::numerics::dot;

/// Logistic sigmoid, saturating rather than overflowing for large |x|.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Hyperbolic tangent activation.
#[inline]
pub fn tanh_act(x: f64) -> f64 {
    x.tanh()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population (divide-by-n) variance.
pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Pearson correlation with population normalization (the n's cancel in the
/// ratio). Zero variance in either series is reported as an error so the
/// caller decides what to substitute.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(
            "pearson",
            format!("series lengths {} and {}", x.len(), y.len()),
        ));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "pearson needs length >= 2, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let cov = dot(x, y) / n - mx * my;
    let vx = dot(x, x) / n - mx * mx;
    let vy = dot(y, y) / n - my * my;
    if vx <= 0.0 || vy <= 0.0 {
        return Err(Error::DegenerateVariance(
            "pearson on constant series".to_string(),
        ));
    }
    // Rounding can push the ratio a hair outside [-1, 1]; clamp it back.
    Ok((cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
}

/// Pooled-variance two-sample t statistic (a minus b).
pub fn two_sample_t(group_a: &[f64], group_b: &[f64]) -> Result<f64> {
    let (na, nb) = (group_a.len(), group_b.len());
    if na < 2 || nb < 2 {
        return Err(Error::InsufficientData(format!(
            "two_sample_t needs >= 2 per group, got {na} and {nb}"
        )));
    }
    let (ma, mb) = (mean(group_a), mean(group_b));
    let ssa: f64 = group_a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let ssb: f64 = group_b.iter().map(|x| (x - mb) * (x - mb)).sum();
    let df = (na + nb - 2) as f64;
    let pooled = (ssa + ssb) / df;
    if pooled <= 0.0 {
        return Err(Error::DegenerateVariance(
            "two_sample_t with zero pooled variance".to_string(),
        ));
    }
    let se = (pooled * (1.0 / na as f64 + 1.0 / nb as f64)).sqrt();
    Ok((ma - mb) / se)
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}
