//! Per-patient design matrices with standardized polynomial time.

use super::panel::PanelData;
use super::spec::ModelSpec;
use crate::error::{Error, Result};

/// Row-major dense matrix with a fixed column count.
#[derive(Clone, Debug, PartialEq)]
pub struct Rows {
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Rows {
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn n_rows(&self) -> usize {
        if self.cols == 0 {
            0
        } else {
            self.data.len() / self.cols
        }
    }

    /// Restriction to the listed rows.
    pub fn select(&self, rows: &[usize]) -> Rows {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &j in rows {
            data.extend_from_slice(self.row(j));
        }
        Rows { cols: self.cols, data }
    }
}

/// Designs for one patient over all J windows.
#[derive(Clone, Debug, PartialEq)]
pub struct PatientDesign {
    /// [1, t*, …, t*^deg]; used by the visit and response models.
    pub x: Rows,
    /// Centered fixed-effect columns [t*^q, …, t*^deg].
    pub xh: Rows,
    /// Random-effect columns [1, t*, …, t*^(q−1)].
    pub z: Rows,
    /// Indices of visited windows, A(1..n_i).
    pub visited: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignSet {
    pub time_mean: f64,
    pub time_sd: f64,
    pub patients: Vec<PatientDesign>,
}

/// Pooled mean and population sd of every window time in the panel.
pub fn time_standardization(data: &PanelData) -> (f64, f64) {
    let times: Vec<f64> = data.patients.iter().flat_map(|p| p.windows.iter().map(|w| w.time)).collect();
    if times.is_empty() {
        return (0.0, 1.0);
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Builds x, x^h and z for every patient.
pub fn build_designs(data: &PanelData, spec: &ModelSpec) -> Result<DesignSet> {
    let (mean, sd) = time_standardization(data);
    build_designs_with(data, spec, mean, sd)
}

/// Same as [`build_designs`] with an explicit time standardization.
pub fn build_designs_with(data: &PanelData, spec: &ModelSpec, time_mean: f64, time_sd: f64) -> Result<DesignSet> {
    let degree = spec.time_degree;
    let q = spec.random_effects;
    if q == 0 || degree < q {
        return Err(Error::invalid("time degree must be at least the number of random effects (≥ 1)"));
    }
    let constant = !(time_sd > 1e-12 * time_mean.abs().max(1.0));
    if constant && degree >= 1 && !data.patients.is_empty() {
        return Err(Error::InvalidData("time column is constant; polynomial time terms are not identifiable".into()));
    }
    let sd = if constant { 1.0 } else { time_sd };
    let p = degree + 1;
    let patients = data
        .patients
        .iter()
        .map(|pat| {
            let j = pat.windows.len();
            let mut x = Vec::with_capacity(j * p);
            let mut xh = Vec::with_capacity(j * (p - q));
            let mut z = Vec::with_capacity(j * q);
            for w in &pat.windows {
                let t = (w.time - time_mean) / sd;
                let mut power = 1.0;
                for g in 0..p {
                    x.push(power);
                    if g < q {
                        z.push(power);
                    } else {
                        xh.push(power);
                    }
                    power *= t;
                }
            }
            PatientDesign {
                x: Rows { cols: p, data: x },
                xh: Rows { cols: p - q, data: xh },
                z: Rows { cols: q, data: z },
                visited: pat.visited().map(|(j, _)| j).collect(),
            }
        })
        .collect();
    Ok(DesignSet { time_mean, time_sd: sd, patients })
}
