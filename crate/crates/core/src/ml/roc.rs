//! ROC curves and AUC.
//!
//! The AUC is computed as the rank statistic P(score⁺ > score⁻) +
//! ½·P(score⁺ = score⁻) using midranks for ties, and cross-checked against
//! the trapezoidal integral of the ROC curve — the two are equal up to
//! floating-point rounding, which the test suite pins down.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocReport {
    /// (false-positive rate, true-positive rate), from (0,0) to (1,1), one
    /// step per distinct score threshold.
    pub points: Vec<(f64, f64)>,
    /// Rank-statistic AUC (midranks for tied scores).
    pub auc: f64,
    /// Trapezoidal integral of `points`; agrees with `auc` to rounding.
    pub auc_trapezoid: f64,
}

/// ROC curve and AUC for binary labels scored with "higher = more positive".
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocReport> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    // Sort ascending by score; midranks give each tie group the average rank.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based: the group spans ranks i+1 ..= j.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let np = n_pos as f64;
    let nn = n_neg as f64;
    let auc = (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);

    // ROC polyline: walk thresholds from high to low; tie groups move
    // diagonally in a single step.
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut k = order.len();
    while k > 0 {
        let mut g = k;
        while g > 0 && scores[order[g - 1]] == scores[order[k - 1]] {
            g -= 1;
        }
        for &idx in &order[g..k] {
            if labels[idx] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        points.push((fp as f64 / nn, tp as f64 / np));
        k = g;
    }
    let auc_trapezoid: f64 = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();

    Ok(RocReport {
        points,
        auc,
        auc_trapezoid,
    })
}
