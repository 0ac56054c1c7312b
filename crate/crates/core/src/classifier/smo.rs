//! C-SVM dual solved by sequential minimal optimization on a precomputed
//! kernel, using maximal-violating-pair working-set selection.

use ndarray::{Array2, ArrayView2};

use crate::classifier::KernelMatrix;
use crate::data_io::Label;
use crate::error::{check_dim, Error, Result};

/// Curvature floor for non-positive pair Hessians.
const TAU: f64 = 1e-12;
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    /// Iteration cap in units of `n` pair updates; `None` means `10·n`.
    pub max_passes: Option<usize>,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: None,
        }
    }
}

/// Trained dual coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    pub train_labels: Vec<Label>,
    pub c: f64,
    /// Maximal KKT violation `max_{I_up} -yG - min_{I_low} -yG` at exit.
    pub kkt_violation: f64,
    pub iterations: usize,
}

impl SvmModel {
    pub fn n_train(&self) -> usize {
        self.alphas.len()
    }

    /// `Σα - ½ Σ α_i α_j y_i y_j K_ij`.
    pub fn dual_objective(&self, k: &KernelMatrix) -> f64 {
        dual_objective(&self.alphas, &self.train_labels, k.values().view())
    }

    /// CSV bundle with `record,index,value` rows: `c`, `bias`, then one
    /// `label` and one `alpha` row per training sample and a `support` row
    /// per support vector.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("record,index,value\n");
        s.push_str(&format!("c,0,{}\n", self.c));
        s.push_str(&format!("bias,0,{}\n", self.bias));
        for (i, (a, y)) in self.alphas.iter().zip(&self.train_labels).enumerate() {
            s.push_str(&format!("label,{i},{y}\nalpha,{i},{a}\n"));
        }
        for i in &self.support_indices {
            s.push_str(&format!("support,{i},1\n"));
        }
        s
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut c = None;
        let mut bias = None;
        let mut labels = Vec::new();
        let mut alphas = Vec::new();
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).skip(1) {
            let parts: Vec<&str> = line.split(',').collect();
            let [record, index, value] = parts[..] else {
                return Err(Error::data(format!("bad model row `{line}`")));
            };
            let bad = || Error::data(format!("bad model row `{line}`"));
            let idx: usize = index.parse().map_err(|_| bad())?;
            match record {
                "c" => c = Some(value.parse().map_err(|_| bad())?),
                "bias" => bias = Some(value.parse().map_err(|_| bad())?),
                "label" => {
                    if idx != labels.len() {
                        return Err(bad());
                    }
                    labels.push(value.parse::<Label>().map_err(|_| bad())?);
                }
                "alpha" => {
                    if idx != alphas.len() {
                        return Err(bad());
                    }
                    alphas.push(value.parse::<f64>().map_err(|_| bad())?);
                }
                "support" => {}
                _ => return Err(bad()),
            }
        }
        if labels.len() != alphas.len() {
            return Err(Error::data("model bundle has mismatched label/alpha counts"));
        }
        Ok(Self {
            support_indices: support_of(&alphas),
            alphas,
            bias: bias.ok_or_else(|| Error::data("model bundle lacks bias"))?,
            train_labels: labels,
            c: c.ok_or_else(|| Error::data("model bundle lacks c"))?,
            kkt_violation: 0.0,
            iterations: 0,
        })
    }
}

fn support_of(alphas: &[f64]) -> Vec<usize> {
    (0..alphas.len()).filter(|&i| alphas[i] > SUPPORT_THRESHOLD).collect()
}

pub fn dual_objective(alphas: &[f64], labels: &[Label], k: ArrayView2<f64>) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * f64::from(labels[i]) * f64::from(labels[j]) * k[[i, j]];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

pub fn smo_train(k: &KernelMatrix, labels: &[Label], params: &SmoParams) -> Result<SvmModel> {
    let n = k.len();
    check_dim(n, labels.len(), "labels vs kernel size")?;
    let c = params.c;
    if !(c > 0.0 && c.is_normal()) {
        return Err(Error::invalid(format!("svm C must be a positive normal number, got {c}")));
    }
    if !(params.tol > 0.0) {
        return Err(Error::invalid("svm tol must be > 0"));
    }
    if labels.iter().any(|&l| l != 1 && l != -1) {
        return Err(Error::invalid("svm labels must be -1 or +1"));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::invalid("svm training needs both classes"));
    }
    if !k.is_symmetric(1e-9) {
        return Err(Error::invalid("kernel matrix is not symmetric"));
    }

    let unit = grid_unit(c);
    let kv = k.values();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * kv[[i, j]];
    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα - eᵀα
    let mut grad = vec![-1.0; n];
    let max_iter = params.max_passes.unwrap_or(10 * n).max(1) * n;

    let mut iterations = 0;
    let violation = loop {
        let mut best_up = (f64::NEG_INFINITY, usize::MAX);
        let mut best_low = (f64::INFINITY, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(y[t], alpha[t], c) && v > best_up.0 {
                best_up = (v, t);
            }
            if in_low(y[t], alpha[t], c) && v < best_low.0 {
                best_low = (v, t);
            }
        }
        let gap = best_up.0 - best_low.0;
        if gap < params.tol {
            break gap.max(0.0);
        }
        // second-order choice of j: largest guaranteed decrease with i fixed
        let i = best_up.1;
        let mut j = best_low.1;
        let mut best_gain = f64::NEG_INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_low(y[t], alpha[t], c) && v < best_up.0 {
                let b = best_up.0 - v;
                let a = (kv[[i, i]] + kv[[t, t]] - 2.0 * kv[[i, t]]).max(TAU);
                if b * b / a > best_gain {
                    best_gain = b * b / a;
                    j = t;
                }
            }
        }
        if iterations >= max_iter {
            return Err(Error::numerical(format!(
                "smo did not converge in {max_iter} iterations (max KKT violation {gap:e})"
            )));
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);

        // Steps are clamped to the feasible interval of the pair, so the
        // box and the equality constraint hold without rounding.
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let (lo, hi) = ((-alpha[i]).max(-alpha[j]), (c - alpha[i]).min(c - alpha[j]));
            let step = snap((-grad[i] - grad[j]) / quad, lo, hi, unit);
            alpha[i] += step;
            alpha[j] += step;
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let (lo, hi) = ((-alpha[j]).max(alpha[i] - c), alpha[i].min(c - alpha[j]));
            let step = snap((grad[i] - grad[j]) / quad, lo, hi, unit);
            alpha[i] -= step;
            alpha[j] += step;
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    };

    // bias from free vectors, else midpoint of the feasible interval
    let (mut upper, mut lower) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_count) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (upper + lower) / 2.0
    };

    Ok(SvmModel {
        support_indices: support_of(&alpha),
        alphas: alpha,
        bias: -rho,
        train_labels: labels.to_vec(),
        c,
        kkt_violation: violation,
        iterations,
    })
}

/// Spacing `ulp(C)`: every multiple of it with magnitude at most `C` is an
/// exact `f64`, so coefficients kept on this grid add and subtract without
/// rounding.
fn grid_unit(c: f64) -> f64 {
    f64::from_bits(c.to_bits() & (0x7ff << 52)) * f64::EPSILON
}

/// `raw` clamped to `[lo, hi]` and rounded to the grid; `lo`, `hi` are
/// themselves grid points.
fn snap(raw: f64, lo: f64, hi: f64, unit: f64) -> f64 {
    ((raw.clamp(lo, hi) / unit).round() * unit).clamp(lo, hi)
}

/// `score_t = Σ_i α_i y_i K[t, i] + b`.
pub fn decision_function(m: &SvmModel, k_cross: ArrayView2<f64>) -> Result<Vec<f64>> {
    check_dim(m.n_train(), k_cross.ncols(), "cross-kernel columns vs training size")?;
    Ok(k_cross
        .rows()
        .into_iter()
        .map(|row| {
            m.support_indices
                .iter()
                .map(|&i| m.alphas[i] * f64::from(m.train_labels[i]) * row[i])
                .sum::<f64>()
                + m.bias
        })
        .collect())
}

/// Sign of the score; a score of exactly zero is classed +1.
pub fn predict(m: &SvmModel, k_cross: ArrayView2<f64>) -> Result<Vec<Label>> {
    Ok(labels_from_scores(&decision_function(m, k_cross)?))
}

pub fn labels_from_scores(scores: &[f64]) -> Vec<Label> {
    scores.iter().map(|&s| if s >= 0.0 { 1 } else { -1 }).collect()
}

/// Linear-kernel Gram matrix, handy for tests and baselines.
pub fn linear_kernel(x: &Array2<f64>) -> Array2<f64> {
    x.dot(&x.t())
}
