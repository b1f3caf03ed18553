//! Recovery quality metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Default relative power threshold for support detection (-20 dB).
pub const DEFAULT_DELTA: f64 = 0.01;

/// `||X - X_hat||_F^2 / ||X||_F^2`
pub fn nse(truth: &CMatrix, estimate: &CMatrix) -> Result<f64> {
    if truth.shape() != estimate.shape() {
        return Err(Error::dims(
            "nse",
            format!("{:?}", truth.shape()),
            format!("{:?}", estimate.shape()),
        ));
    }
    let denom = linalg::frobenius_sqr(truth);
    if denom == 0.0 {
        return Err(Error::Contract("nse is undefined for an all-zero ground truth".into()));
    }
    Ok(linalg::frobenius_sqr(&(truth - estimate)) / denom)
}

/// Rows whose power exceeds `delta` times the largest row power.
pub fn estimated_support(estimate: &CMatrix, delta: f64) -> Vec<usize> {
    let power = linalg::row_norms_sqr(estimate);
    let peak = power.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Vec::new();
    }
    power
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > delta * peak)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision / recall / F1 of two index sets. Both empty scores 1 everywhere;
/// exactly one empty scores 0.
pub fn support_score(true_support: &[usize], estimated: &[usize]) -> SupportScore {
    match (true_support.is_empty(), estimated.is_empty()) {
        (true, true) => {
            return SupportScore {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            }
        }
        (true, false) | (false, true) => {
            return SupportScore {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
            }
        }
        _ => {}
    }
    let hits = estimated.iter().filter(|i| true_support.contains(i)).count() as f64;
    let precision = hits / estimated.len() as f64;
    let recall = hits / true_support.len() as f64;
    let f1 = if hits == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    SupportScore { precision, recall, f1 }
}

pub fn f1_support(true_support: &[usize], estimate: &CMatrix, delta: f64) -> f64 {
    support_score(true_support, &estimated_support(estimate, delta)).f1
}

/// 25/50/75% quantiles with linear interpolation between order statistics
/// at position `p (n - 1)`.
pub fn quartiles(values: &[f64]) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        return Err(Error::Contract("quartiles of an empty list".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    Ok((q(0.25), q(0.5), q(0.75)))
}

/// Fraction of the estimate's row power outside the true support widened by
/// one grid cell on each side. An all-zero estimate leaks nothing.
pub fn doa_leakage(true_support: &[usize], estimate: &CMatrix) -> f64 {
    let power = linalg::row_norms_sqr(estimate);
    let total: f64 = power.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let n = power.len();
    let mut inside = vec![false; n];
    for &i in true_support {
        for j in i.saturating_sub(1)..=(i + 1).min(n.saturating_sub(1)) {
            inside[j] = true;
        }
    }
    let outside: f64 = power.iter().zip(&inside).filter(|(_, &ins)| !ins).map(|(p, _)| p).sum();
    (outside / total).clamp(0.0, 1.0)
}

/// Metrics of one solve on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub nse: f64,
    pub f1: f64,
    pub wall_time_s: f64,
    pub lambda_rel_error: Option<f64>,
    pub leakage_fraction: Option<f64>,
}
