use alloc::format;

use crate::error::{Error, Result};

fn check<T>(gold: &[T], pred: &[T]) -> Result<()> {
    if gold.is_empty() {
        return Err(Error::Evaluation(format!("nothing to score")));
    }
    if gold.len() != pred.len() {
        return Err(Error::Evaluation(format!("{} gold labels but {} predictions", gold.len(), pred.len())));
    }
    Ok(())
}

/// Percentage of items whose prediction equals the gold label.
pub fn accuracy<T: PartialEq>(gold: &[T], pred: &[T]) -> Result<f64> {
    check(gold, pred)?;
    let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    Ok(correct as f64 * 100.0 / gold.len() as f64)
}

/// Micro-averaged F1 (percent) over every label except `null`.
///
/// A position contributes a true positive when gold and prediction agree
/// on a non-null label; a non-null prediction that is wrong is a false
/// positive; a non-null gold label that is missed is a false negative.
/// With no non-null label on either side the score is 100.
pub fn micro_f1<T: PartialEq>(gold: &[T], pred: &[T], null: &T) -> Result<f64> {
    check(gold, pred)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (g, p) in gold.iter().zip(pred) {
        if g == p {
            if g != null {
                tp += 1;
            }
            continue;
        }
        if p != null {
            fp += 1;
        }
        if g != null {
            fn_ += 1;
        }
    }
    let denom = 2 * tp + fp + fn_;
    Ok(if denom == 0 { 100.0 } else { 200.0 * tp as f64 / denom as f64 })
}
