//! Confusion-matrix scores and rank-based ROC-AUC. The positive class (+1)
//! is the cancer class.

use serde::Serialize;

use crate::data_io::Label;
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionMatrix> {
    check_dim(y_true.len(), y_pred.len(), "predictions vs labels")?;
    let mut c = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t > 0, p > 0) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Ratio metrics. A 0/0 ratio is reported as 0 and named in `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scores {
    pub accuracy: f64,
    pub precision: f64,
    /// TP / (TP + FN).
    pub recall: f64,
    /// TN / (TN + FP).
    pub specificity: f64,
    pub f1: f64,
    /// FP / (FP + TN).
    pub fpr: f64,
    pub degenerate: Vec<&'static str>,
}

pub fn scores_from_confusion(c: &ConfusionMatrix) -> Result<Scores> {
    let total = c.total();
    if total == 0 {
        return Err(Error::invalid("empty confusion matrix"));
    }
    let mut degenerate = Vec::new();
    let mut ratio = |name: &'static str, num: f64, den: f64| {
        if den == 0.0 {
            degenerate.push(name);
            0.0
        } else {
            num / den
        }
    };
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let accuracy = (tp + tn) / total as f64;
    let precision = ratio("precision", tp, tp + fp);
    let recall = ratio("recall", tp, tp + fn_);
    let specificity = ratio("specificity", tn, tn + fp);
    let fpr = ratio("fpr", fp, fp + tn);
    let f1 = ratio("f1", 2.0 * precision * recall, precision + recall);
    Ok(Scores {
        accuracy,
        precision,
        recall,
        specificity,
        f1,
        fpr,
        degenerate,
    })
}

/// One ROC vertex: classifying `score >= threshold` as positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Roc {
    pub auc: f64,
    /// Starts at `(0,0)` with threshold `+∞`, thresholds descending.
    pub curve: Vec<RocPoint>,
}

/// Mann–Whitney AUC (ties count ½) and the ROC curve at every distinct score.
pub fn roc_auc(y_true: &[Label], scores: &[f64]) -> Result<Roc> {
    check_dim(y_true.len(), scores.len(), "scores vs labels")?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN decision score"));
    }
    let n_pos = y_true.iter().filter(|&&l| l > 0).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::invalid("roc needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut curve = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    // concordant pairs ×2, kept as an integer so the ratio is exact
    let mut twice_concordant: u64 = 0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (mut gp, mut gn) = (0usize, 0usize);
        while k < order.len() && scores[order[k]] == s {
            if y_true[order[k]] > 0 {
                gp += 1;
            } else {
                gn += 1;
            }
            k += 1;
        }
        // positives in this group beat all negatives below it, tie with gn
        twice_concordant += (2 * gp * (n_neg - fp - gn) + gp * gn) as u64;
        tp += gp;
        fp += gn;
        curve.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    Ok(Roc {
        auc: twice_concordant as f64 / (2 * n_pos * n_neg) as f64,
        curve,
    })
}

/// Trapezoidal area under an emitted curve.
pub fn trapezoid_auc(curve: &[RocPoint]) -> f64 {
    curve
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}
