//! Ground truth retained alongside simulated panels.

use serde::{Deserialize, Serialize};

use super::marginal::MarginalEffects;
use super::scenario::GenerativeConfig;
use crate::data::PanelData;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthBlock {
    pub patient_ids: Vec<String>,
    /// 1-based true class per patient.
    pub classes: Vec<usize>,
    /// Outcomes before masking: `full_y[i][j][r]`.
    pub full_y: Vec<Vec<Vec<f64>>>,
    pub marginal: Option<MarginalEffects>,
    pub config: Option<GenerativeConfig>,
}

impl TruthBlock {
    /// Subset in the order of `ids` (every id must be present).
    pub fn restrict(&self, ids: &[String]) -> TruthBlock {
        let index: std::collections::HashMap<&str, usize> =
            self.patient_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let rows: Vec<usize> = ids.iter().filter_map(|id| index.get(id.as_str()).copied()).collect();
        TruthBlock {
            patient_ids: rows.iter().map(|&i| self.patient_ids[i].clone()).collect(),
            classes: rows.iter().map(|&i| self.classes[i]).collect(),
            full_y: rows.iter().map(|&i| self.full_y[i].clone()).collect(),
            marginal: self.marginal.clone(),
            config: self.config.clone(),
        }
    }

    /// Dimensions match and observed cells equal the unmasked values.
    pub fn check_against(&self, data: &PanelData) -> Result<()> {
        let n = data.n_patients();
        if self.patient_ids.len() != n || self.classes.len() != n || self.full_y.len() != n {
            return Err(Error::InvalidData("truth block does not match the panel's patient count".into()));
        }
        for (i, p) in data.patients.iter().enumerate() {
            if self.patient_ids[i] != p.id {
                return Err(Error::InvalidData(format!("truth block patient {} is `{}`, panel has `{}`", i + 1, self.patient_ids[i], p.id)));
            }
            if self.full_y[i].len() != data.n_windows || self.full_y[i].iter().any(|w| w.len() != data.n_outcomes) {
                return Err(Error::InvalidData(format!("truth outcomes for `{}` have the wrong shape", p.id)));
            }
            for (j, w) in p.windows.iter().enumerate() {
                for (r, y) in w.y.iter().enumerate() {
                    if let Some(v) = y {
                        if *v != self.full_y[i][j][r] {
                            return Err(Error::InvalidData(format!("observed y differs from truth for `{}`", p.id)));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The panel with every cell observed at every window, for the full-data benchmark.
    pub fn unmasked(&self, data: &PanelData) -> Result<PanelData> {
        self.check_against(data)?;
        let mut out = data.clone();
        for (i, p) in out.patients.iter_mut().enumerate() {
            for (j, w) in p.windows.iter_mut().enumerate() {
                w.visit = true;
                w.response = vec![true; data.n_outcomes];
                w.y = self.full_y[i][j].iter().map(|v| Some(*v)).collect();
            }
        }
        Ok(out)
    }

    pub fn save_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
