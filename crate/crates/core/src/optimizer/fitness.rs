//! Wrapper fitness: weighted validation error of a fast classifier plus
//! the fraction of genes kept.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::data_io::{stratified_split, Label, LabeledDataset, SplitSpec};
use crate::error::{Error, Result};
use crate::optimizer::binary::FeatureMask;
use crate::rng::rng_from;

/// Classifier used inside the wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluatorKind {
    Knn { k: usize },
}

impl FromStr for EvaluatorKind {
    type Err = Error;

    /// `knn` or `knn:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = s.split_once(':').map_or((s.as_str(), None), |(a, b)| (a, Some(b)));
        match name {
            "knn" => {
                let k = match arg {
                    Some(a) => a.parse().map_err(|_| Error::config(format!("bad knn k `{a}`")))?,
                    None => 5,
                };
                if k == 0 {
                    return Err(Error::config("knn k must be >= 1"));
                }
                Ok(EvaluatorKind::Knn { k })
            }
            other => Err(Error::config(format!("unknown evaluator `{other}`"))),
        }
    }
}

/// Validation scheme for the wrapper classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Validation {
    /// One stratified split; `fraction` of each class is held out.
    Holdout { fraction: f64 },
    /// Stratified k-fold; every training row is validated once.
    KFold { folds: usize },
}

impl Default for Validation {
    fn default() -> Self {
        Validation::Holdout { fraction: 0.2 }
    }
}

impl FromStr for Validation {
    type Err = Error;

    /// `holdout:<fraction>` or `kfold:<folds>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::config(format!("bad validation scheme `{s}` (expected holdout:<fraction> or kfold:<folds>)"));
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        let v = match name {
            "holdout" => Validation::Holdout {
                fraction: arg.parse().map_err(|_| bad())?,
            },
            "kfold" => Validation::KFold {
                folds: arg.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        v.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(v)
    }
}

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Validation::Holdout { fraction } => write!(f, "holdout:{fraction}"),
            Validation::KFold { folds } => write!(f, "kfold:{folds}"),
        }
    }
}

impl Validation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Validation::Holdout { fraction } if !(fraction > 0.0 && fraction < 1.0) => {
                Err(Error::invalid(format!("holdout fraction {fraction} outside (0,1)")))
            }
            Validation::KFold { folds } if folds < 2 => Err(Error::invalid("k-fold validation needs at least 2 folds")),
            _ => Ok(()),
        }
    }

    /// `(fit rows, validation rows)` per fold, deterministic in `seed`.
    pub fn folds(&self, ds: &LabeledDataset, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
        self.validate()?;
        match *self {
            Validation::Holdout { fraction } => {
                let split = stratified_split(ds, &SplitSpec::new(fraction, seed)?)?;
                Ok(vec![(split.train_indices, split.test_indices)])
            }
            Validation::KFold { folds } => {
                let mut by_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
                for (i, &l) in ds.labels().iter().enumerate() {
                    by_class.entry(l).or_default().push(i);
                }
                if by_class.values().any(|m| m.len() < folds) {
                    return Err(Error::data(format!("a class has fewer rows than the {folds} validation folds")));
                }
                let mut rng = rng_from(seed);
                let mut assignment = vec![0; ds.n_samples()];
                // Dealing continues across classes so fold sizes differ by at most one.
                let mut next = 0;
                for mut members in by_class.into_values() {
                    members.shuffle(&mut rng);
                    for i in members {
                        assignment[i] = next % folds;
                        next += 1;
                    }
                }
                Ok((0..folds)
                    .map(|f| (0..ds.n_samples()).partition(|&i| assignment[i] != f))
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessConfig {
    /// Weight of the validation error; `1 - alpha` weighs the gene ratio.
    pub alpha: f64,
    pub evaluator: EvaluatorKind,
    pub validation: Validation,
    pub validation_seed: u64,
}

impl FitnessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("fitness alpha {} outside [0,1]", self.alpha)));
        }
        self.validation.validate()
    }
}

impl Default for FitnessConfig {
    fn default() -> Self {
        Self {
            alpha: 0.99,
            evaluator: EvaluatorKind::Knn { k: 5 },
            validation: Validation::default(),
            validation_seed: 0,
        }
    }
}

/// Plug point for the wrapper classifier.
pub trait SubsetEvaluator: Sync {
    fn n_features(&self) -> usize;

    /// Validation error rate in [0, 1] using only the `selected` columns.
    fn validation_error(&self, selected: &[usize]) -> f64;
}

/// k-nearest-neighbour classifier; the error pools every validation row of
/// every fold.
#[derive(Debug, Clone)]
pub struct KnnWrapper {
    k: usize,
    x: Array2<f64>,
    y: Vec<Label>,
    folds: Vec<(Vec<usize>, Vec<usize>)>,
}

impl KnnWrapper {
    pub fn new(train: &LabeledDataset, k: usize, validation: Validation, seed: u64) -> Result<Self> {
        Ok(Self {
            k,
            x: train.features().clone(),
            y: train.labels().to_vec(),
            folds: validation.folds(train, seed)?,
        })
    }

    fn predict_one(&self, row: usize, fit: &[usize], selected: &[usize], dist: &mut Vec<(f64, usize)>) -> Label {
        dist.clear();
        let v = self.x.row(row);
        for &i in fit {
            let f = self.x.row(i);
            let d: f64 = selected
                .iter()
                .map(|&g| {
                    let t = v[g] - f[g];
                    t * t
                })
                .sum();
            dist.push((d, i));
        }
        let k = self.k.min(dist.len());
        dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut nearest = dist[..k].to_vec();
        nearest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let vote: i32 = nearest.iter().map(|&(_, i)| i32::from(self.y[i])).sum();
        match vote.cmp(&0) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => -1,
            // even k tie: nearest neighbour decides
            std::cmp::Ordering::Equal => self.y[nearest[0].1],
        }
    }
}

impl SubsetEvaluator for KnnWrapper {
    fn n_features(&self) -> usize {
        self.x.ncols()
    }

    fn validation_error(&self, selected: &[usize]) -> f64 {
        let mut scratch = Vec::with_capacity(self.y.len());
        let (mut wrong, mut total) = (0usize, 0usize);
        for (fit, val) in &self.folds {
            wrong += val
                .iter()
                .filter(|&&r| self.predict_one(r, fit, selected, &mut scratch) != self.y[r])
                .count();
            total += val.len();
        }
        wrong as f64 / total as f64
    }
}

/// `alpha · error + (1 - alpha) · selected/d`; empty masks score `+∞`.
pub fn fitness_with(mask: &FeatureMask, evaluator: &dyn SubsetEvaluator, alpha: f64) -> f64 {
    let selected = mask.selected_indices();
    if selected.is_empty() {
        return f64::INFINITY;
    }
    let ratio = selected.len() as f64 / mask.len() as f64;
    alpha * evaluator.validation_error(&selected) + (1.0 - alpha) * ratio
}

pub fn build_evaluator(train: &LabeledDataset, cfg: &FitnessConfig) -> Result<Box<dyn SubsetEvaluator>> {
    cfg.validate()?;
    match cfg.evaluator {
        EvaluatorKind::Knn { k } => Ok(Box::new(KnnWrapper::new(train, k, cfg.validation, cfg.validation_seed)?)),
    }
}

/// One-off fitness evaluation. For repeated calls build the evaluator once
/// with [`build_evaluator`].
pub fn fitness(mask: &FeatureMask, train: &LabeledDataset, cfg: &FitnessConfig) -> Result<f64> {
    if mask.len() != train.n_genes() {
        return Err(Error::DimensionMismatch {
            expected: train.n_genes(),
            actual: mask.len(),
            context: "mask length vs gene count",
        });
    }
    let evaluator = build_evaluator(train, cfg)?;
    Ok(fitness_with(mask, evaluator.as_ref(), cfg.alpha))
}
