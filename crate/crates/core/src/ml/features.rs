//! Link-volume feature vectors from polled runs.
//!
//! One row per polling instant; one column per monitored link, holding the
//! bits the link carried during that interval. Labels are binary: a row is
//! positive when its instant falls in the warm-up or attack phase (warm-up
//! counts as positive by default — catching the attack while it forms is
//! the point — with an alternative policy that drops warm-up rows instead).

use serde::{Deserialize, Serialize};

use crate::engine::{Label, RunOutput};
use crate::error::{Error, Result};
use crate::topology::{LinkId, Topology};

/// How warm-up instants enter the label column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelPolicy {
    /// Warm-up rows are attack-positive.
    WarmupPositive,
    /// Warm-up rows are dropped entirely.
    WarmupExcluded,
}

/// Rows = polling instants, columns = monitored-link volumes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    /// Column manifest, in column order.
    pub column_links: Vec<LinkId>,
    pub times: Vec<f64>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_links.len()
    }

    /// Keep the given columns (by position), preserving order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<FeatureMatrix> {
        if cols.is_empty() {
            return Err(Error::EmptySelection);
        }
        for &c in cols {
            if c >= self.n_cols() {
                return Err(Error::DimensionMismatch {
                    model: self.n_cols(),
                    rows: c + 1,
                });
            }
        }
        Ok(FeatureMatrix {
            rows: self
                .rows
                .iter()
                .map(|r| cols.iter().map(|&c| r[c]).collect())
                .collect(),
            labels: self.labels.clone(),
            column_links: cols.iter().map(|&c| self.column_links[c]).collect(),
            times: self.times.clone(),
        })
    }
}

/// Stack runs row-wise; column manifests must match exactly.
pub fn concat(parts: &[FeatureMatrix]) -> Result<FeatureMatrix> {
    let first = parts.first().ok_or(Error::EmptySelection)?;
    let mut out = FeatureMatrix {
        rows: Vec::new(),
        labels: Vec::new(),
        column_links: first.column_links.clone(),
        times: Vec::new(),
    };
    for p in parts {
        if p.column_links != first.column_links {
            return Err(Error::DimensionMismatch {
                model: first.n_cols(),
                rows: p.n_cols(),
            });
        }
        out.rows.extend(p.rows.iter().cloned());
        out.labels.extend(p.labels.iter().copied());
        out.times.extend(p.times.iter().copied());
    }
    Ok(out)
}

/// Build the matrix for `selection` from a finished run. The volume of a
/// link over a poll interval is its carried traffic: utilization × capacity
/// × poll seconds, in bits.
pub fn extract_features(
    out: &RunOutput,
    topology: &Topology,
    selection: &[LinkId],
    policy: LabelPolicy,
) -> Result<FeatureMatrix> {
    if selection.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut caps = Vec::with_capacity(selection.len());
    for &l in selection {
        caps.push(topology.link(l)?.capacity);
    }
    let mut rows = Vec::with_capacity(out.n_polls);
    let mut labels = Vec::with_capacity(out.n_polls);
    let mut times = Vec::with_capacity(out.n_polls);
    for k in 0..out.n_polls {
        let base = k * out.n_links;
        let label = out.samples[base].label;
        if policy == LabelPolicy::WarmupExcluded && label == Label::Warmup {
            continue;
        }
        rows.push(
            selection
                .iter()
                .zip(&caps)
                .map(|(&l, &cap)| out.samples[base + l.0].utilization * cap * out.poll_s)
                .collect(),
        );
        labels.push(label != Label::Normal);
        times.push(out.samples[base].t);
    }
    Ok(FeatureMatrix {
        rows,
        labels,
        column_links: selection.to_vec(),
        times,
    })
}

/// Per-column affine map to zero mean and unit variance, fitted on the
/// training split only. Constant columns are centered and left unscaled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &FeatureMatrix) -> Result<Standardizer> {
        if train.rows.is_empty() {
            return Err(Error::EmptySelection);
        }
        let d = train.n_cols();
        let n = train.rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in &train.rows {
            for (m, &v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; d];
        for r in &train.rows {
            for ((v, &x), &m) in var.iter_mut().zip(r).zip(&mean) {
                let dx = x - m;
                *v += dx * dx;
            }
        }
        let scale = var
            .iter()
            .map(|&v| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.n_cols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                model: self.mean.len(),
                rows: m.n_cols(),
            });
        }
        let mut out = m.clone();
        for r in &mut out.rows {
            for ((v, &mu), &s) in r.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - mu) / s;
            }
        }
        Ok(out)
    }
}
