//! Complete-case filtering for the naive comparison method.

use serde::{Deserialize, Serialize};

use super::panel::{PanelData, Window};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveReport {
    /// Visited windows turned into unvisited ones because an outcome was missing.
    pub windows_dropped: usize,
    /// Patients removed for having no complete window left.
    pub patients_dropped: usize,
    /// Complete windows over n·J of the input.
    pub retained_fraction: f64,
    pub empty: bool,
}

/// Keeps only fully observed windows (the rest become unvisited so every
/// patient retains J rows), then drops patients with no visits left.
/// Idempotent.
pub fn naive_filter(data: &PanelData) -> (PanelData, NaiveReport) {
    let mut windows_dropped = 0;
    let mut kept = Vec::with_capacity(data.patients.len());
    let mut kept_ids = Vec::new();
    let mut complete = 0usize;
    for p in &data.patients {
        let mut q = p.clone();
        for w in q.windows.iter_mut() {
            if w.visit && !w.fully_observed() {
                *w = Window::unvisited(w.time, data.n_outcomes);
                windows_dropped += 1;
            }
        }
        let visits = q.n_visits();
        complete += visits;
        if visits > 0 {
            kept_ids.push(q.id.clone());
            kept.push(q);
        }
    }
    let patients_dropped = data.patients.len() - kept.len();
    let total = data.patients.len() * data.n_windows;
    let truth = data.truth.as_ref().map(|t| t.restrict(&kept_ids));
    let out = PanelData { n_outcomes: data.n_outcomes, n_windows: data.n_windows, patients: kept, truth };
    let report = NaiveReport {
        windows_dropped,
        patients_dropped,
        retained_fraction: if total == 0 { 0.0 } else { complete as f64 / total as f64 },
        empty: out.patients.is_empty(),
    };
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::panel::tests::{observed, patient};

    fn sample() -> PanelData {
        let mut partial = observed(1.0, &[1.0, 2.0]);
        partial.response[1] = false;
        partial.y[1] = None;
        let a = patient("a", vec![observed(0.0, &[1.0, 2.0]), Window::unvisited(1.0, 2)]);
        let b = patient("b", vec![Window::unvisited(0.0, 2), partial.clone()]);
        let c = patient("c", vec![observed(0.0, &[1.0, 2.0]), partial]);
        PanelData::new(2, 2, vec![a, b, c]).unwrap()
    }

    #[test]
    fn drops_incomplete() {
        let (out, rep) = naive_filter(&sample());
        assert_eq!(out.n_patients(), 2);
        assert_eq!(rep.patients_dropped, 1);
        assert_eq!(rep.windows_dropped, 2);
        assert!((rep.retained_fraction - 2.0 / 6.0).abs() < 1e-15);
        out.validate().unwrap();
    }

    #[test]
    fn idempotent_and_identity_on_complete() {
        let (once, _) = naive_filter(&sample());
        let (twice, rep) = naive_filter(&once);
        assert_eq!(once, twice);
        assert_eq!(rep.windows_dropped, 0);
        let full = PanelData::new(1, 1, vec![patient("a", vec![observed(0.0, &[1.0])])]).unwrap();
        assert_eq!(naive_filter(&full).0, full);
    }
}
