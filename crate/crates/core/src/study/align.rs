//! Matching fitted class labels to the generating classes.

use crate::error::{Error, Result};
use crate::eval::{permutations, MAX_RELABEL_CLASSES};

/// Permutation `perm` with fitted class `perm[k]` relabeled as class k that
/// maximizes agreement with `truth` (both 0-based). Exhaustive over K!.
pub fn align_labels(fitted: &[usize], truth: &[usize], classes: usize) -> Result<Vec<usize>> {
    if classes > MAX_RELABEL_CLASSES {
        return Err(Error::TooManyClasses { classes });
    }
    if fitted.len() != truth.len() {
        return Err(Error::invalid("fitted and true labels differ in length"));
    }
    let mut counts = vec![0usize; classes * classes];
    for (&f, &t) in fitted.iter().zip(truth) {
        if f >= classes || t >= classes {
            return Err(Error::invalid("class label out of range"));
        }
        counts[f * classes + t] += 1;
    }
    let mut best = (0..classes).collect::<Vec<_>>();
    let mut best_hits = None;
    for p in permutations(classes) {
        let hits: usize = (0..classes).map(|k| counts[p[k] * classes + k]).sum();
        if best_hits.is_none_or(|b| hits > b) {
            best_hits = Some(hits);
            best = p;
        }
    }
    Ok(best)
}

/// Share of patients whose relabeled fitted class differs from the truth.
pub fn misclassification(fitted: &[usize], truth: &[usize], perm: &[usize]) -> f64 {
    if fitted.is_empty() {
        return 0.0;
    }
    let mut inverse = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inverse[old] = new;
    }
    fitted.iter().zip(truth).filter(|(&f, &t)| inverse[f] != t).count() as f64 / fitted.len() as f64
}
