//! Classification metrics: accuracy, macro-F1, macro recall (sensitivity) and
//! macro one-vs-rest ROC-AUC. Classes absent from the truth are left out of
//! every macro average.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Matrix;

/// The four headline metrics plus the confusion matrix (rows = truth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub sensitivity: f64,
    pub roc_auc: f64,
    pub confusion: Vec<Vec<usize>>,
}

fn check(pred: &[usize], truth: &[usize], classes: usize) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::Empty("metric input"));
    }
    if pred.len() != truth.len() {
        return Err(Error::InvalidArgument(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    if let Some(&c) = pred.iter().chain(truth).find(|&&c| c >= classes) {
        return Err(Error::InvalidArgument(format!("class {c} outside 0..{classes}")));
    }
    Ok(())
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check(pred, truth, usize::MAX)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// `C × C` counts; entry `[t][p]` counts nodes of class `t` predicted `p`.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    check(pred, truth, classes)?;
    let mut m = vec![vec![0; classes]; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        m[t][p] += 1;
    }
    Ok(m)
}

fn macro_over_present(confusion: &[Vec<usize>], per_class: impl Fn(usize, usize, usize) -> f64) -> f64 {
    let c = confusion.len();
    let mut sum = 0.0;
    let mut present = 0;
    for k in 0..c {
        let support: usize = confusion[k].iter().sum();
        if support == 0 {
            continue;
        }
        let tp = confusion[k][k];
        let fp = (0..c).map(|t| confusion[t][k]).sum::<usize>() - tp;
        sum += per_class(tp, fp, support - tp);
        present += 1;
    }
    sum / present as f64
}

pub fn macro_f1(pred: &[usize], truth: &[usize], classes: usize) -> Result<f64> {
    let m = confusion_matrix(pred, truth, classes)?;
    Ok(macro_over_present(&m, |tp, fp, fn_| 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64))
}

/// Macro-averaged per-class recall.
pub fn sensitivity(pred: &[usize], truth: &[usize], classes: usize) -> Result<f64> {
    let m = confusion_matrix(pred, truth, classes)?;
    Ok(macro_over_present(&m, |tp, _, fn_| tp as f64 / (tp + fn_) as f64))
}

/// Binary AUC from mid-ranks: ties between a positive and a negative count 1/2.
fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let pos = positive.iter().filter(|&&p| p).count();
    let neg = positive.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&u| positive[u]).count() as f64;
        i = j + 1;
    }
    let p = pos as f64;
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Macro one-vs-rest AUC over the classes that have both positives and
/// negatives; column `c` of `scores` scores class `c`.
pub fn roc_auc_ovr_macro(scores: &Matrix, truth: &[usize], classes: usize) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Empty("metric input"));
    }
    if scores.rows() != truth.len() || scores.cols() != classes {
        return Err(Error::Shape { op: "roc_auc", left: scores.shape(), right: (truth.len(), classes) });
    }
    if !scores.all_finite() {
        return Err(Error::NonFinite("roc_auc scores".into()));
    }
    check(truth, truth, classes)?;
    let mut sum = 0.0;
    let mut counted = 0;
    for c in 0..classes {
        let column: Vec<f64> = (0..scores.rows()).map(|u| scores.get(u, c)).collect();
        let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        if let Some(auc) = binary_auc(&column, &positive) {
            sum += auc;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(Error::InvalidArgument("no class has both positive and negative samples".into()));
    }
    Ok(sum / counted as f64)
}

/// All metrics at once. When no class admits an AUC (a single-class truth)
/// the AUC is reported as 0.5.
pub fn evaluate(pred: &[usize], scores: &Matrix, truth: &[usize], classes: usize) -> Result<EvalReport> {
    let roc_auc = match roc_auc_ovr_macro(scores, truth, classes) {
        Err(Error::InvalidArgument(_)) => 0.5,
        other => other?,
    };
    Ok(EvalReport {
        accuracy: accuracy(pred, truth)?,
        macro_f1: macro_f1(pred, truth, classes)?,
        sensitivity: sensitivity(pred, truth, classes)?,
        roc_auc,
        confusion: confusion_matrix(pred, truth, classes)?,
    })
}
