//! Random forest of axis-aligned decision trees.
//!
//! Each tree is grown on a bootstrap resample of the training rows; at every
//! node the split maximizing the Gini impurity decrease is searched over a
//! random feature subset (midpoint thresholds between consecutive distinct
//! values, ties broken toward the lower feature index and threshold). A
//! tree votes attack when its leaf's attack fraction reaches one half; the
//! forest score is the fraction of trees voting attack.
//!
//! Trees train independently with per-tree derived seeds, so the parallel
//! and sequential paths produce bit-identical forests.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml::features::FeatureMatrix;
use crate::par;
use crate::rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Tree {
    Leaf {
        p_attack: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Tree>,
        right: Box<Tree>,
    },
}

impl Tree {
    fn leaf_for(&self, row: &[f64]) -> f64 {
        match self {
            Tree::Leaf { p_attack } => *p_attack,
            Tree::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] <= *threshold {
                    left.leaf_for(row)
                } else {
                    right.leaf_for(row)
                }
            }
        }
    }

    /// Root split as (feature, threshold), if the tree split at all.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self {
            Tree::Leaf { .. } => None,
            Tree::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub features_per_split: usize,
}

impl ForestModel {
    /// Fraction of trees voting attack per row; higher = more attack-like.
    pub fn scores(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        if self.trees.is_empty() {
            return Err(Error::NoTrees);
        }
        rows.iter()
            .map(|r| {
                if r.len() != self.n_features {
                    return Err(Error::DimensionMismatch {
                        model: self.n_features,
                        rows: r.len(),
                    });
                }
                let votes = self
                    .trees
                    .iter()
                    .filter(|t| t.leaf_for(r) >= 0.5)
                    .count();
                Ok(votes as f64 / self.trees.len() as f64)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    /// 0 = automatic ⌈√d⌉.
    pub features_per_split: usize,
    /// Grow each tree on a bootstrap resample (disable to train every tree
    /// on the full set, e.g. when checking splits against an oracle).
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: Some(12),
            features_per_split: 0,
            bootstrap: true,
        }
    }
}

struct TreeTask<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [bool],
    d: usize,
    k: usize,
    max_depth: Option<usize>,
}

fn gini(n_pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = n_pos as f64 / n as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Best (feature, threshold, gini decrease) over `features` for the rows in
/// `idx`, or None when nothing improves on the parent impurity.
fn best_split(
    task: &TreeTask,
    idx: &[usize],
    features: &[usize],
) -> Option<(usize, f64, f64)> {
    let n = idx.len();
    let n_pos = idx.iter().filter(|&&i| task.labels[i]).count();
    let parent = gini(n_pos, n);
    if parent <= 0.0 {
        return None;
    }
    let mut best: Option<(usize, f64, f64)> = None;
    let mut column: Vec<(f64, bool)> = Vec::with_capacity(n);
    for &f in features {
        column.clear();
        column.extend(idx.iter().map(|&i| (task.rows[i][f], task.labels[i])));
        column.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_n = 0usize;
        let mut left_pos = 0usize;
        for w in 0..n - 1 {
            left_n += 1;
            if column[w].1 {
                left_pos += 1;
            }
            if column[w].0 == column[w + 1].0 {
                continue;
            }
            let right_n = n - left_n;
            let right_pos = n_pos - left_pos;
            let split_gini = (left_n as f64 * gini(left_pos, left_n)
                + right_n as f64 * gini(right_pos, right_n))
                / n as f64;
            let decrease = parent - split_gini;
            let threshold = 0.5 * (column[w].0 + column[w + 1].0);
            let better = match best {
                None => decrease > 1e-15,
                Some((bf, bt, bd)) => {
                    decrease > bd + 1e-15
                        || ((decrease - bd).abs() <= 1e-15
                            && (f < bf || (f == bf && threshold < bt)))
                }
            };
            if better {
                best = Some((f, threshold, decrease));
            }
        }
    }
    best
}

fn grow(task: &TreeTask, idx: Vec<usize>, depth: usize, rng: &mut impl Rng) -> Tree {
    let n_pos = idx.iter().filter(|&&i| task.labels[i]).count();
    let p_attack = n_pos as f64 / idx.len() as f64;
    let depth_left = task.max_depth.map_or(true, |m| depth < m);
    if idx.len() < 2 || n_pos == 0 || n_pos == idx.len() || !depth_left {
        return Tree::Leaf { p_attack };
    }
    // Partial Fisher-Yates draw of k distinct features. The rng is consumed
    // in a fixed pre-order walk, so the tree is a pure function of its seed.
    let mut pool: Vec<usize> = (0..task.d).collect();
    for j in 0..task.k.min(task.d) {
        let pick = rng.gen_range(j..task.d);
        pool.swap(j, pick);
    }
    let mut features = pool[..task.k.min(task.d)].to_vec();
    features.sort_unstable();
    let Some((feature, threshold, _)) = best_split(task, &idx, &features) else {
        return Tree::Leaf { p_attack };
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&i| task.rows[i][feature] <= threshold);
    let left = grow(task, left_idx, depth + 1, rng);
    let right = grow(task, right_idx, depth + 1, rng);
    Tree::Split {
        feature,
        threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

fn train_one(train: &FeatureMatrix, params: &ForestParams, tree_seed: u64) -> Tree {
    let n = train.rows.len();
    let d = train.rows[0].len();
    let k = if params.features_per_split == 0 {
        (d as f64).sqrt().ceil() as usize
    } else {
        params.features_per_split.min(d)
    };
    let mut rng = rng::chacha(tree_seed, &[]);
    let idx: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let task = TreeTask {
        rows: &train.rows,
        labels: &train.labels,
        d,
        k,
        max_depth: params.max_depth,
    };
    grow(&task, idx, 0, &mut rng)
}

fn train_inner(
    train: &FeatureMatrix,
    params: &ForestParams,
    seed: u64,
    force_seq: bool,
) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::NoTrees);
    }
    let n = train.rows.len();
    let n_pos = train.labels.iter().filter(|&&l| l).count();
    if n == 0 || n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass);
    }
    let d = train.rows[0].len();
    const TAG_TREE: u64 = 0x46;
    let seed_for = |i: usize| rng::derive(seed, &[TAG_TREE, i as u64]);
    let trees = if force_seq {
        par::map_indexed_seq(params.n_trees, |i| train_one(train, params, seed_for(i)))
    } else {
        par::map_indexed(params.n_trees, |i| train_one(train, params, seed_for(i)))
    };
    let k = if params.features_per_split == 0 {
        (d as f64).sqrt().ceil() as usize
    } else {
        params.features_per_split.min(d)
    };
    Ok(ForestModel {
        trees,
        n_features: d,
        n_trees: params.n_trees,
        max_depth: params.max_depth,
        features_per_split: k,
    })
}

/// Train the forest; trees run in parallel when the `parallel` feature is on.
pub fn train_random_forest(
    train: &FeatureMatrix,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    train_inner(train, params, seed, false)
}

/// Sequential-core variant of [`train_random_forest`]; bit-identical output.
pub fn train_random_forest_seq(
    train: &FeatureMatrix,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    train_inner(train, params, seed, true)
}
