//! Longitudinal panel container.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::TruthBlock;

/// One (patient, window) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub time: f64,
    pub visit: bool,
    /// Response flags per outcome; all false when the window is unvisited.
    pub response: Vec<bool>,
    /// Outcome values, present exactly where `visit && response[r]`.
    pub y: Vec<Option<f64>>,
}

impl Window {
    pub fn unvisited(time: f64, outcomes: usize) -> Self {
        Window { time, visit: false, response: vec![false; outcomes], y: vec![None; outcomes] }
    }

    pub fn fully_observed(&self) -> bool {
        self.visit && self.response.iter().all(|&m| m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patient {
    pub id: String,
    /// Class-model covariates, leading 1.
    pub w: Vec<f64>,
    /// Random-effect-mean covariates, leading 1.
    pub u: Vec<f64>,
    pub windows: Vec<Window>,
}

impl Patient {
    pub fn n_visits(&self) -> usize {
        self.windows.iter().filter(|w| w.visit).count()
    }

    pub fn visited(&self) -> impl Iterator<Item = (usize, &Window)> {
        self.windows.iter().enumerate().filter(|(_, w)| w.visit)
    }
}

/// Observed longitudinal data, optionally carrying simulation truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelData {
    pub n_outcomes: usize,
    pub n_windows: usize,
    pub patients: Vec<Patient>,
    pub truth: Option<TruthBlock>,
}

impl PanelData {
    /// Builds and validates.
    pub fn new(n_outcomes: usize, n_windows: usize, patients: Vec<Patient>) -> Result<Self> {
        let data = PanelData { n_outcomes, n_windows, patients, truth: None };
        data.validate()?;
        Ok(data)
    }

    pub fn with_truth(mut self, truth: TruthBlock) -> Result<Self> {
        truth.check_against(&self)?;
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn n_patients(&self) -> usize {
        self.patients.len()
    }

    /// Length of w (s), or 1 for an empty panel.
    pub fn class_covariates(&self) -> usize {
        self.patients.first().map_or(1, |p| p.w.len())
    }

    /// Length of u (e), or 1 for an empty panel.
    pub fn effect_covariates(&self) -> usize {
        self.patients.first().map_or(1, |p| p.u.len())
    }

    pub fn total_visits(&self) -> usize {
        self.patients.iter().map(Patient::n_visits).sum()
    }

    /// Whether any visited window has a missing response for outcome `r`.
    pub fn has_missing_response(&self, r: usize) -> bool {
        self.patients.iter().any(|p| p.windows.iter().any(|w| w.visit && !w.response[r]))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_outcomes == 0 {
            return Err(Error::InvalidData("at least one outcome is required".into()));
        }
        if self.n_windows == 0 {
            return Err(Error::InvalidData("at least one window is required".into()));
        }
        let (s, e) = (self.class_covariates(), self.effect_covariates());
        let mut seen = std::collections::HashSet::new();
        for p in &self.patients {
            let who = &p.id;
            if !seen.insert(p.id.as_str()) {
                return Err(Error::InvalidData(format!("duplicate patient id `{who}`")));
            }
            if p.w.len() != s || p.u.len() != e {
                return Err(Error::InvalidData(format!("patient `{who}` has covariate rows of different length")));
            }
            if p.w.first() != Some(&1.0) || p.u.first() != Some(&1.0) {
                return Err(Error::InvalidData(format!("patient `{who}`: covariate rows must start with 1")));
            }
            if p.w.iter().chain(&p.u).any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("patient `{who}` has non-finite covariates")));
            }
            if p.windows.len() != self.n_windows {
                return Err(Error::InvalidData(format!(
                    "patient `{who}` has {} windows, expected {}",
                    p.windows.len(),
                    self.n_windows
                )));
            }
            for (j, w) in p.windows.iter().enumerate() {
                check_window(w, self.n_outcomes).map_err(|m| {
                    Error::InvalidData(format!("patient `{who}`, window {}: {m}", j + 1))
                })?;
                if j > 0 && !(w.time > p.windows[j - 1].time) {
                    return Err(Error::InvalidData(format!("patient `{who}`: times must strictly increase")));
                }
            }
        }
        Ok(())
    }
}

/// Checks the flag/value contract of one window; returns a message on failure.
pub(crate) fn check_window(w: &Window, outcomes: usize) -> std::result::Result<(), String> {
    if w.response.len() != outcomes || w.y.len() != outcomes {
        return Err(format!("expected {outcomes} outcomes"));
    }
    if !w.time.is_finite() {
        return Err("time is not finite".into());
    }
    for r in 0..outcomes {
        if !w.visit && w.response[r] {
            return Err(format!("response flag m_{} set on an unvisited window", r + 1));
        }
        match (w.visit && w.response[r], w.y[r]) {
            (true, None) => return Err(format!("y_{} missing although visit and response are 1", r + 1)),
            (false, Some(_)) => return Err(format!("y_{} present although visit or response is 0", r + 1)),
            (true, Some(v)) if !v.is_finite() => return Err(format!("y_{} is not finite", r + 1)),
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn observed(time: f64, y: &[f64]) -> Window {
        Window { time, visit: true, response: vec![true; y.len()], y: y.iter().map(|v| Some(*v)).collect() }
    }

    pub fn patient(id: &str, windows: Vec<Window>) -> Patient {
        Patient { id: id.into(), w: vec![1.0, 0.3], u: vec![1.0], windows }
    }

    #[test]
    fn valid_panel() {
        let p = patient("a", vec![observed(1.0, &[0.1, 0.2]), Window::unvisited(2.0, 2)]);
        let data = PanelData::new(2, 2, vec![p]).unwrap();
        assert_eq!(data.patients[0].n_visits(), 1);
        assert_eq!(data.total_visits(), 1);
        assert!(!data.has_missing_response(0));
    }

    #[test]
    fn rejects_value_on_unvisited() {
        let mut w = Window::unvisited(1.0, 1);
        w.y[0] = Some(1.0);
        assert!(PanelData::new(1, 1, vec![patient("a", vec![w])]).is_err());
    }

    #[test]
    fn rejects_non_increasing_time() {
        let p = patient("a", vec![observed(2.0, &[0.1]), observed(2.0, &[0.1])]);
        assert!(PanelData::new(1, 2, vec![p]).is_err());
    }

    #[test]
    fn rejects_ragged_and_duplicates() {
        let a = patient("a", vec![observed(1.0, &[0.1])]);
        assert!(PanelData::new(1, 2, vec![a.clone()]).is_err());
        assert!(PanelData::new(1, 1, vec![a.clone(), a]).is_err());
    }
}
