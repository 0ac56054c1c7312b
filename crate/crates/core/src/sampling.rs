//! SMOTE oversampling to explicit per-class target counts.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1, Axis};
use rand::Rng;

use crate::data_io::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::rng_at;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Desired sample count per class. Classes not listed are left as is.
    pub target_counts: BTreeMap<Label, usize>,
    pub seed: u64,
}

impl SmoteConfig {
    pub fn new(k_neighbors: usize, target_counts: BTreeMap<Label, usize>, seed: u64) -> Result<Self> {
        if k_neighbors == 0 {
            return Err(Error::invalid("smote k_neighbors must be >= 1"));
        }
        Ok(Self {
            k_neighbors,
            target_counts,
            seed,
        })
    }

    /// Targets that bring every class up to the majority count.
    pub fn balanced(ds: &LabeledDataset, k_neighbors: usize, seed: u64) -> Result<Self> {
        let counts = ds.class_counts();
        let max = counts.values().copied().max().unwrap_or(0);
        Self::new(k_neighbors, counts.keys().map(|&l| (l, max)).collect(), seed)
    }
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            target_counts: BTreeMap::new(),
            seed: 0,
        }
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices (into `members`) of the `k` nearest same-class neighbours of
/// each member. Ties go to the lower original row index.
fn nearest_neighbors(x: &Array2<f64>, members: &[usize], k: usize) -> Vec<Vec<usize>> {
    members
        .iter()
        .enumerate()
        .map(|(a, &ia)| {
            let mut cand: Vec<(f64, usize, usize)> = members
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(b, &ib)| (sq_dist(x.row(ia), x.row(ib)), ib, b))
                .collect();
            cand.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
            cand.into_iter().take(k).map(|(_, _, b)| b).collect()
        })
        .collect()
}

/// Appends synthetic rows `x + δ·(x_nn − x)` until every class in
/// `cfg.target_counts` reaches its target. Original rows form an unchanged
/// prefix; synthetic rows follow grouped by class in label order.
pub fn smote_oversample(ds: &LabeledDataset, cfg: &SmoteConfig) -> Result<LabeledDataset> {
    if cfg.k_neighbors == 0 {
        return Err(Error::invalid("smote k_neighbors must be >= 1"));
    }
    let x = ds.features();
    let mut rows: Vec<f64> = x.iter().copied().collect();
    let mut labels = ds.labels().to_vec();

    for (&label, &target) in &cfg.target_counts {
        let members: Vec<usize> = (0..ds.n_samples()).filter(|&i| ds.labels()[i] == label).collect();
        let have = members.len();
        if target < have {
            return Err(Error::invalid(format!(
                "smote target {target} for class {label:+} is below its current count {have}"
            )));
        }
        let missing = target - have;
        if missing == 0 {
            continue;
        }
        if have < 2 {
            return Err(Error::data(format!(
                "class {label:+} has {have} sample(s); smote needs at least 2"
            )));
        }
        if cfg.k_neighbors > have - 1 {
            return Err(Error::invalid(format!(
                "smote k_neighbors {} exceeds class {label:+} size - 1 ({})",
                cfg.k_neighbors,
                have - 1
            )));
        }

        let neighbors = nearest_neighbors(x, &members, cfg.k_neighbors);
        let mut rng = rng_at(cfg.seed, &[label as u64]);
        for s in 0..missing {
            // cycle through members so every sample seeds synthesis evenly
            let a = s % have;
            let nn = neighbors[a][rng.random_range(0..cfg.k_neighbors)];
            let delta: f64 = rng.random();
            let base = x.row(members[a]);
            let other = x.row(members[nn]);
            rows.extend(base.iter().zip(other).map(|(&u, &v)| u + delta * (v - u)));
            labels.push(label);
        }
    }

    let n = labels.len();
    let features = Array2::from_shape_vec((n, ds.n_genes()), rows).map_err(|e| Error::data(e.to_string()))?;
    LabeledDataset::new(features, labels, ds.gene_names().to_vec())
}

/// For a row `s` claimed to lie on segment `[a, b]`, recover δ from the
/// coordinates and return it if every coordinate agrees within `tol`.
pub fn interpolation_coefficient(
    s: ArrayView1<f64>,
    a: ArrayView1<f64>,
    b: ArrayView1<f64>,
    tol: f64,
) -> Option<f64> {
    let (j, span) = a
        .iter()
        .zip(b)
        .map(|(u, v)| v - u)
        .enumerate()
        .max_by(|p, q| p.1.abs().total_cmp(&q.1.abs()))?;
    let delta = if span.abs() > 0.0 { (s[j] - a[j]) / span } else { 0.0 };
    if !(-tol..=1.0 + tol).contains(&delta) {
        return None;
    }
    let consistent = s
        .iter()
        .zip(a.iter().zip(b))
        .all(|(&si, (&ai, &bi))| (ai + delta * (bi - ai) - si).abs() <= tol);
    consistent.then_some(delta)
}

/// True when `row` is a convex combination of two distinct rows of
/// `originals` that share `label`.
pub fn is_same_class_interpolant(
    row: ArrayView1<f64>,
    label: Label,
    originals: &LabeledDataset,
    tol: f64,
) -> bool {
    let idx: Vec<usize> = (0..originals.n_samples())
        .filter(|&i| originals.labels()[i] == label)
        .collect();
    let x = originals.features();
    idx.iter().enumerate().any(|(p, &i)| {
        idx[p + 1..]
            .iter()
            .any(|&j| interpolation_coefficient(row, x.row(i), x.row(j), tol).is_some())
    })
}

/// Rows `n_original..` of `out`, i.e. the synthetic part.
pub fn synthetic_rows(out: &LabeledDataset, n_original: usize) -> ndarray::ArrayView2<'_, f64> {
    out.features().slice_axis(Axis(0), (n_original..).into())
}
