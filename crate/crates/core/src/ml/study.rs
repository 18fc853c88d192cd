//! Train/test evaluation protocol and study bookkeeping.
//!
//! A study cell is one (configuration, seed) evaluation: train a classifier
//! on feature matrices built from training runs, score a disjoint set of
//! test runs, and report the ranking AUC. Standardization statistics come
//! from the training split only.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml::features::{FeatureMatrix, LabelPolicy, Standardizer};
use crate::ml::forest::{train_random_forest, ForestParams};
use crate::ml::roc::{roc_auc, RocReport};
use crate::ml::svm::train_linear_svm;
use crate::rng;
use crate::topology::LinkId;

const TAG_SUBSET: u64 = 0x60;
const TAG_PERMUTE: u64 = 0x61;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Svm,
    Forest,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Forest => "forest",
        }
    }
}

/// Classifier hyperparameters and train/test protocol; defaults are
/// artifact choices, every field is overridable from the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlConfig {
    pub svm_regularization: f64,
    pub svm_epochs: usize,
    pub forest: ForestParams,
    pub standardize: bool,
    pub label_policy: LabelPolicy,
    /// Scenario runs (with derived seeds) pooled into the training matrix.
    pub train_runs: usize,
    /// Disjoint scenario runs pooled into the test matrix.
    pub test_runs: usize,
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            svm_regularization: 1.0,
            svm_epochs: 200,
            forest: ForestParams::default(),
            standardize: true,
            label_policy: LabelPolicy::WarmupPositive,
            train_runs: 3,
            test_runs: 2,
        }
    }
}

/// Train on `train`, score `test`, and report the ROC. Standardization, when
/// enabled, is fit on the training rows alone and applied to both splits.
pub fn evaluate_split(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    kind: ModelKind,
    config: &MlConfig,
    seed: u64,
) -> Result<RocReport> {
    let (train_m, test_m);
    let (train_ref, test_ref) = if config.standardize {
        let std = Standardizer::fit(train)?;
        train_m = std.apply(train)?;
        test_m = std.apply(test)?;
        (&train_m, &test_m)
    } else {
        (train, test)
    };
    let scores = match kind {
        ModelKind::Svm => {
            let model = train_linear_svm(
                train_ref,
                config.svm_regularization,
                config.svm_epochs,
                seed,
            )?;
            model.scores(&test_ref.rows)?
        }
        ModelKind::Forest => {
            let model = train_random_forest(train_ref, &config.forest, seed)?;
            model.scores(&test_ref.rows)?
        }
    };
    roc_auc(&scores, &test_ref.labels)
}

/// Nested random link subsets of the requested sizes: one seeded shuffle of
/// `links`, each subset a prefix of it, so smaller subsets are contained in
/// larger ones and size is the only thing that varies across cells.
pub fn nested_subsets(links: &[LinkId], sizes: &[usize], seed: u64) -> Result<Vec<Vec<LinkId>>> {
    if links.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut pool = links.to_vec();
    pool.shuffle(&mut rng::chacha(seed, &[TAG_SUBSET]));
    sizes
        .iter()
        .map(|&s| {
            if s == 0 {
                return Err(Error::EmptySelection);
            }
            if s > pool.len() {
                return Err(Error::SubsetTooLarge {
                    requested: s,
                    available: pool.len(),
                });
            }
            Ok(pool[..s].to_vec())
        })
        .collect()
}

/// Copy of `m` with its labels shuffled — the leakage control: a model
/// trained on permuted labels must score near chance.
pub fn with_permuted_labels(m: &FeatureMatrix, seed: u64) -> FeatureMatrix {
    let mut out = m.clone();
    out.labels.shuffle(&mut rng::chacha(seed, &[TAG_PERMUTE]));
    out
}

/// One evaluated (configuration, seed) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyCell {
    pub config: String,
    pub seed: u64,
    pub auc: f64,
}

/// Per-configuration aggregate over seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyAggregate {
    pub config: String,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub kind: String,
    pub cells: Vec<StudyCell>,
    pub aggregates: Vec<StudyAggregate>,
}

impl StudyReport {
    /// Groups cells by configuration (in first-appearance order) and
    /// computes mean and sample standard deviation of AUC over seeds.
    pub fn new(kind: &str, cells: Vec<StudyCell>) -> Self {
        let mut order: Vec<&str> = Vec::new();
        for c in &cells {
            if !order.contains(&c.config.as_str()) {
                order.push(&c.config);
            }
        }
        let aggregates = order
            .iter()
            .map(|cfg| {
                let aucs: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.config == *cfg)
                    .map(|c| c.auc)
                    .collect();
                let n = aucs.len();
                let mean = aucs.iter().sum::<f64>() / n as f64;
                let var = if n > 1 {
                    aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64
                } else {
                    0.0
                };
                StudyAggregate {
                    config: cfg.to_string(),
                    mean_auc: mean,
                    std_auc: var.sqrt(),
                    n_seeds: n,
                }
            })
            .collect();
        Self {
            kind: kind.to_string(),
            cells,
            aggregates,
        }
    }

    pub fn mean_auc(&self, config: &str) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.config == config)
            .map(|a| a.mean_auc)
    }

    /// CSV with header `config,seed,auc`, one row per cell, then one
    /// aggregate row per configuration with `mean` in the seed column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("config,seed,auc\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{:.6}\n", c.config, c.seed, c.auc));
        }
        for a in &self.aggregates {
            out.push_str(&format!("{},mean,{:.6}\n", a.config, a.mean_auc));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two shifted blobs in `d` dimensions; `sep` controls how far apart.
    fn blobs(d: usize, n_per: usize, sep: f64, seed: u64) -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..(2 * n_per) as u64 {
            let pos = i % 2 == 0;
            let base = if pos { sep } else { 0.0 };
            let row: Vec<f64> = (0..d as u64)
                .map(|j| base + rng::unit(seed, &[i, j]) - 0.5)
                .collect();
            rows.push(row);
            labels.push(pos);
        }
        FeatureMatrix {
            times: (0..2 * n_per).map(|k| k as f64).collect(),
            column_links: (0..d).map(LinkId).collect(),
            rows,
            labels,
        }
    }

    #[test]
    fn separable_blobs_score_high_with_both_models() {
        let train = blobs(4, 80, 1.5, 1);
        let test = blobs(4, 80, 1.5, 2);
        let cfg = MlConfig::default();
        let svm = evaluate_split(&train, &test, ModelKind::Svm, &cfg, 5).unwrap();
        let rf = evaluate_split(&train, &test, ModelKind::Forest, &cfg, 5).unwrap();
        assert!(svm.auc > 0.95, "svm auc {}", svm.auc);
        assert!(rf.auc > 0.95, "forest auc {}", rf.auc);
    }

    #[test]
    fn permuted_labels_score_near_chance() {
        // Leakage control: shuffling training labels must destroy the
        // signal. Overlapping classes and a roomy training set keep a
        // chance excess of agreeing labels (≈1/√n) from being amplified
        // into a real score.
        let test = blobs(4, 100, 0.35, 3);
        let cfg = MlConfig::default();
        for kind in [ModelKind::Svm, ModelKind::Forest] {
            let honest = evaluate_split(&blobs(4, 300, 0.35, 4), &test, kind, &cfg, 0).unwrap();
            assert!(honest.auc > 0.8, "{}: control data must be learnable", kind.as_str());
            let mut aucs = Vec::new();
            for seed in 0..10u64 {
                let train = with_permuted_labels(&blobs(4, 300, 0.35, 4 + seed), seed);
                let r = evaluate_split(&train, &test, kind, &cfg, seed).unwrap();
                aucs.push(r.auc);
            }
            let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
            assert!(
                (0.4..=0.6).contains(&mean),
                "{}: permuted-label mean auc {}",
                kind.as_str(),
                mean
            );
        }
    }

    #[test]
    fn standardization_statistics_come_from_train_only() {
        // A test split with a wild offset must not change the fitted
        // transform: evaluating two different test sets against the same
        // training set uses the same standardizer, so a model trained once
        // scores a given row identically regardless of other test rows.
        let train = blobs(3, 50, 1.0, 7);
        let std = Standardizer::fit(&train).unwrap();
        let mut test = blobs(3, 10, 1.0, 8);
        let a = std.apply(&test).unwrap();
        for r in &mut test.rows[5..] {
            for v in r.iter_mut() {
                *v += 1e6;
            }
        }
        let b = std.apply(&test).unwrap();
        assert_eq!(a.rows[0], b.rows[0], "transform must not depend on test rows");
    }

    #[test]
    fn nested_subsets_are_prefixes() {
        let links: Vec<LinkId> = (0..40).map(LinkId).collect();
        let subsets = nested_subsets(&links, &[5, 10, 20, 40], 9).unwrap();
        assert_eq!(subsets.len(), 4);
        for w in subsets.windows(2) {
            assert_eq!(&w[1][..w[0].len()], &w[0][..], "smaller ⊂ larger");
        }
        assert_eq!(subsets[3].len(), 40);
        let mut all = subsets[3].clone();
        all.sort_by_key(|l| l.0);
        all.dedup();
        assert_eq!(all.len(), 40, "full subset is a permutation");
        assert!(matches!(
            nested_subsets(&links, &[41], 9),
            Err(Error::SubsetTooLarge { .. })
        ));
        assert!(nested_subsets(&[], &[1], 9).is_err());
    }

    #[test]
    fn report_aggregates_group_by_config() {
        let cells = vec![
            StudyCell { config: "2ST".into(), seed: 1, auc: 0.9 },
            StudyCell { config: "4ST".into(), seed: 1, auc: 0.8 },
            StudyCell { config: "2ST".into(), seed: 2, auc: 0.7 },
            StudyCell { config: "4ST".into(), seed: 2, auc: 0.6 },
        ];
        let report = StudyReport::new("distribution", cells);
        assert_eq!(report.aggregates.len(), 2);
        assert!((report.mean_auc("2ST").unwrap() - 0.8).abs() < 1e-12);
        assert!((report.mean_auc("4ST").unwrap() - 0.7).abs() < 1e-12);
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "config,seed,auc");
        assert_eq!(csv.lines().count(), 1 + 4 + 2);
        assert!(csv.contains("2ST,mean,0.800000"));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let train = blobs(4, 60, 1.0, 11);
        let test = blobs(4, 60, 1.0, 12);
        let cfg = MlConfig::default();
        for kind in [ModelKind::Svm, ModelKind::Forest] {
            let a = evaluate_split(&train, &test, kind, &cfg, 3).unwrap();
            let b = evaluate_split(&train, &test, kind, &cfg, 3).unwrap();
            assert_eq!(a.auc, b.auc);
        }
    }
}
