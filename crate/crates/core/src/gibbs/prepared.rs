//! Fit-ready view of a panel: method-specific data, designs and cross-products.

use serde::{Deserialize, Serialize};

use crate::data::{build_designs_with, naive_filter, time_standardization, Dims, Method, ModelSpec, NaiveReport, PanelData};
use crate::error::{Error, Result};

/// One patient's designs, flags and (partially observed) outcomes.
#[derive(Clone, Debug)]
pub struct PreparedPatient {
    pub id: String,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    /// J×p, row-major.
    pub x: Vec<f64>,
    /// J×p^h, row-major.
    pub xh: Vec<f64>,
    /// J×q, row-major.
    pub z: Vec<f64>,
    pub visit: Vec<bool>,
    /// J×R response flags.
    pub response: Vec<bool>,
    pub visited: Vec<usize>,
    /// J×R observed outcomes, NaN where missing.
    pub y: Vec<f64>,
    /// Flat indices j·R + r of visited cells with a missing response.
    pub missing: Vec<usize>,
    /// Position of this patient's first missing cell in the global imputation vector.
    pub missing_offset: usize,
    /// Σ over visited windows of x^h x^hᵀ (p^h×p^h).
    pub xh_xh: Vec<f64>,
    /// Σ over visited windows of z zᵀ.
    pub z_z_visited: Vec<f64>,
    /// Σ over all windows of x xᵀ (p×p).
    pub x_x_all: Vec<f64>,
    /// Σ over all windows of z zᵀ.
    pub z_z_all: Vec<f64>,
    /// Σ over visited windows of x xᵀ.
    pub x_x_visited: Vec<f64>,
}

impl PreparedPatient {
    #[inline]
    pub fn x_row(&self, j: usize, p: usize) -> &[f64] {
        &self.x[j * p..(j + 1) * p]
    }

    #[inline]
    pub fn xh_row(&self, j: usize, ph: usize) -> &[f64] {
        &self.xh[j * ph..(j + 1) * ph]
    }

    #[inline]
    pub fn z_row(&self, j: usize, q: usize) -> &[f64] {
        &self.z[j * q..(j + 1) * q]
    }

    pub fn n_visits(&self) -> usize {
        self.visited.len()
    }
}

/// A missing cell: (patient index, window index, outcome index), all 0-based.
pub type Cell = (usize, usize, usize);

#[derive(Clone, Debug)]
pub struct Prepared {
    pub dims: Dims,
    pub method: Method,
    pub response_flags: Vec<bool>,
    pub patients: Vec<PreparedPatient>,
    pub missing_cells: Vec<Cell>,
    pub time_mean: f64,
    pub time_sd: f64,
    pub naive_report: Option<NaiveReport>,
    /// Σᵢ wᵢwᵢᵀ (s×s).
    pub w_w: Vec<f64>,
}

/// Time standardization and patient set a fit used; stored with the draws so
/// evaluation can rebuild the same view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitFrame {
    pub time_mean: f64,
    pub time_sd: f64,
    pub patient_ids: Vec<String>,
}

fn outer_add(acc: &mut [f64], a: &[f64], b: &[f64]) {
    let nb = b.len();
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            acc[i * nb + j] += ai * bj;
        }
    }
}

/// The panel a method actually fits: unmasked truth for FULL, complete
/// windows for NAIVE, the observed panel otherwise.
pub fn method_view(data: &PanelData, method: Method) -> Result<(PanelData, Option<NaiveReport>)> {
    match method {
        Method::Full => {
            let truth = data
                .truth
                .as_ref()
                .ok_or_else(|| Error::InvalidData("the full-data method needs a truth block with unmasked outcomes".into()))?;
            Ok((truth.unmasked(data)?, None))
        }
        Method::Naive => {
            let (filtered, report) = naive_filter(data);
            Ok((filtered, Some(report)))
        }
        Method::Mar | Method::Mnar => Ok((data.clone(), None)),
    }
}

impl Prepared {
    pub fn new(data: &PanelData, spec: &ModelSpec) -> Result<Self> {
        let (mean, sd) = time_standardization(data);
        Self::with_time(data, spec, mean, sd)
    }

    /// Builds the view with a given time standardization.
    pub fn with_time(data: &PanelData, spec: &ModelSpec, time_mean: f64, time_sd: f64) -> Result<Self> {
        data.validate()?;
        spec.check(data)?;
        let (view, naive_report) = method_view(data, spec.method)?;
        let designs = build_designs_with(&view, spec, time_mean, time_sd)?;
        let dims = Dims::new(spec, data);
        let response_flags = spec.response_flags(&view);
        let (r_count, p, ph, q, s) = (dims.outcomes, dims.p, dims.ph, dims.q, dims.s);
        let mut patients = Vec::with_capacity(view.patients.len());
        let mut missing_cells = Vec::new();
        let mut w_w = vec![0.0; s * s];
        for (i, (pat, des)) in view.patients.iter().zip(&designs.patients).enumerate() {
            let j_count = pat.windows.len();
            let mut y = vec![f64::NAN; j_count * r_count];
            let mut response = vec![false; j_count * r_count];
            let mut missing = Vec::new();
            let offset = missing_cells.len();
            for (j, w) in pat.windows.iter().enumerate() {
                for r in 0..r_count {
                    response[j * r_count + r] = w.response[r];
                    if let Some(v) = w.y[r] {
                        y[j * r_count + r] = v;
                    } else if w.visit {
                        missing.push(j * r_count + r);
                        missing_cells.push((i, j, r));
                    }
                }
            }
            let mut pp = PreparedPatient {
                id: pat.id.clone(),
                w: pat.w.clone(),
                u: pat.u.clone(),
                x: des.x.data.clone(),
                xh: des.xh.data.clone(),
                z: des.z.data.clone(),
                visit: pat.windows.iter().map(|w| w.visit).collect(),
                response,
                visited: des.visited.clone(),
                y,
                missing,
                missing_offset: offset,
                xh_xh: vec![0.0; ph * ph],
                z_z_visited: vec![0.0; q * q],
                x_x_all: vec![0.0; p * p],
                z_z_all: vec![0.0; q * q],
                x_x_visited: vec![0.0; p * p],
            };
            for j in 0..j_count {
                let (x, z) = (des.x.row(j).to_vec(), des.z.row(j).to_vec());
                outer_add(&mut pp.x_x_all, &x, &x);
                outer_add(&mut pp.z_z_all, &z, &z);
                if pp.visit[j] {
                    let xh = des.xh.row(j).to_vec();
                    outer_add(&mut pp.xh_xh, &xh, &xh);
                    outer_add(&mut pp.z_z_visited, &z, &z);
                    outer_add(&mut pp.x_x_visited, &x, &x);
                }
            }
            outer_add(&mut w_w, &pat.w, &pat.w);
            patients.push(pp);
        }
        Ok(Prepared {
            dims,
            method: spec.method,
            response_flags,
            patients,
            missing_cells,
            time_mean,
            time_sd: designs.time_sd,
            naive_report,
            w_w,
        })
    }

    pub fn n(&self) -> usize {
        self.patients.len()
    }

    pub fn models_visits(&self) -> bool {
        self.method.models_missingness()
    }

    pub fn frame(&self) -> FitFrame {
        FitFrame {
            time_mean: self.time_mean,
            time_sd: self.time_sd,
            patient_ids: self.patients.iter().map(|p| p.id.clone()).collect(),
        }
    }
}
