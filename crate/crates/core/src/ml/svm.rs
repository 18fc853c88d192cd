//! Linear SVM trained by stochastic subgradient descent on the regularized
//! hinge loss (Pegasos-style schedule: step 1/(λt), one shuffled pass per
//! epoch, bias unregularized). Scores are signed margins.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml::features::FeatureMatrix;
use crate::rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub regularization: f64,
    pub trained_epochs: usize,
}

impl LinearSvmModel {
    /// Signed margin w·x + b per row; higher = more attack-like.
    pub fn scores(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let d = self.weights.len();
        rows.iter()
            .map(|r| {
                if r.len() != d {
                    return Err(Error::DimensionMismatch {
                        model: d,
                        rows: r.len(),
                    });
                }
                Ok(r.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>() + self.bias)
            })
            .collect()
    }
}

/// Train on the matrix's rows/labels. Deterministic for a given seed: the
/// per-epoch visit order comes from a seeded shuffle and nothing else is
/// stochastic.
pub fn train_linear_svm(
    train: &FeatureMatrix,
    regularization: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearSvmModel> {
    let n = train.rows.len();
    let n_pos = train.labels.iter().filter(|&&l| l).count();
    if n == 0 || n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass);
    }
    let d = train.rows[0].len();
    let lambda = regularization.max(1e-12);
    let mut w = vec![0.0f64; d];
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 1u64;
    for epoch in 0..epochs {
        let mut rng = rng::chacha(seed, &[0x5b, epoch as u64]);
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = 1.0 / (lambda * t as f64);
            let y = if train.labels[i] { 1.0 } else { -1.0 };
            let x = &train.rows[i];
            let margin = x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b;
            let decay = 1.0 - eta * lambda;
            if y * margin < 1.0 {
                for (wj, &xj) in w.iter_mut().zip(x) {
                    *wj = *wj * decay + eta * y * xj;
                }
                b += eta * y;
            } else {
                for wj in w.iter_mut() {
                    *wj *= decay;
                }
            }
            t += 1;
        }
    }
    Ok(LinearSvmModel {
        weights: w,
        bias: b,
        regularization: lambda,
        trained_epochs: epochs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::roc::roc_auc;
    use crate::rng;
    use crate::topology::LinkId;

    fn matrix(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> FeatureMatrix {
        let d = rows.first().map_or(0, |r| r.len());
        FeatureMatrix {
            times: (0..rows.len()).map(|k| k as f64).collect(),
            column_links: (0..d).map(LinkId).collect(),
            rows,
            labels,
        }
    }

    #[test]
    fn separable_2d_reaches_full_training_accuracy() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..50 {
            let t = i as f64 / 50.0;
            rows.push(vec![t, 2.0 + t]);
            labels.push(true);
            rows.push(vec![t, -2.0 - t]);
            labels.push(false);
        }
        let m = matrix(rows, labels);
        let model = train_linear_svm(&m, 0.01, 200, 1).unwrap();
        let scores = model.scores(&m.rows).unwrap();
        for (s, &l) in scores.iter().zip(&m.labels) {
            assert_eq!(*s > 0.0, l, "margin {s} for label {l}");
        }
    }

    #[test]
    fn xor_is_at_chance() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200u64 {
            let jx = 0.2 * (rng::unit(9, &[i, 0]) - 0.5);
            let jy = 0.2 * (rng::unit(9, &[i, 1]) - 0.5);
            let qx = (i % 2) as f64;
            let qy = ((i / 2) % 2) as f64;
            rows.push(vec![qx + jx, qy + jy]);
            labels.push((qx as i64 ^ qy as i64) == 1);
        }
        let m = matrix(rows, labels);
        let model = train_linear_svm(&m, 1.0, 200, 4).unwrap();
        let auc = roc_auc(&model.scores(&m.rows).unwrap(), &m.labels).unwrap().auc;
        assert!(
            (auc - 0.5).abs() <= 0.1,
            "linear model should be at chance on xor, got {auc}"
        );
    }

    #[test]
    fn duplicated_columns_preserve_the_ranking() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..120u64 {
            let noise = rng::unit(31, &[i]) - 0.5;
            let pos = i % 3 == 0;
            let x = if pos { 1.0 + noise } else { -1.0 + noise };
            rows.push(vec![x]);
            labels.push(pos);
        }
        let single = matrix(rows.clone(), labels.clone());
        let doubled = matrix(
            rows.iter().map(|r| vec![r[0], r[0]]).collect(),
            labels.clone(),
        );
        let m1 = train_linear_svm(&single, 0.1, 200, 5).unwrap();
        let m2 = train_linear_svm(&doubled, 0.1, 200, 5).unwrap();
        let s1 = m1.scores(&single.rows).unwrap();
        let s2 = m2.scores(&doubled.rows).unwrap();
        // Same ranking: every strictly-ordered pair keeps its order.
        let mut disagreements = 0;
        for i in 0..s1.len() {
            for j in i + 1..s1.len() {
                if (s1[i] - s1[j]).abs() > 1e-9 && (s1[i] > s1[j]) != (s2[i] > s2[j]) {
                    disagreements += 1;
                }
            }
        }
        assert_eq!(disagreements, 0, "rankings diverged");
        let a1 = roc_auc(&s1, &labels).unwrap().auc;
        let a2 = roc_auc(&s2, &labels).unwrap().auc;
        assert!((a1 - a2).abs() < 1e-9);
    }

    #[test]
    fn single_class_is_rejected() {
        let m = matrix(vec![vec![1.0], vec![2.0]], vec![true, true]);
        assert!(matches!(
            train_linear_svm(&m, 1.0, 10, 1),
            Err(Error::SingleClass)
        ));
        let empty = matrix(vec![], vec![]);
        assert!(train_linear_svm(&empty, 1.0, 10, 1).is_err());
    }

    #[test]
    fn zero_model_scores_zero() {
        let model = LinearSvmModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            regularization: 1.0,
            trained_epochs: 0,
        };
        let s = model.scores(&[vec![3.0, 4.0], vec![-1.0, 2.0]]).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        assert!(model.scores(&[vec![1.0]]).is_err());
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60u64 {
            rows.push(vec![rng::unit(2, &[i]), rng::unit(3, &[i])]);
            labels.push(i % 2 == 0);
        }
        let m = matrix(rows, labels);
        let a = train_linear_svm(&m, 1.0, 50, 7).unwrap();
        let b = train_linear_svm(&m, 1.0, 50, 7).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.bias, b.bias);
        let c = train_linear_svm(&m, 1.0, 50, 8).unwrap();
        assert_ne!(a.weights, c.weights);
    }
}
