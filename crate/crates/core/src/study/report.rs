//! Study tables: CSV round trip and a plain-text rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::Metric;
use super::run::{FailedFit, FAILED_FIT_BUDGET};
use crate::error::Result;

/// Column order of the metrics CSV.
pub const METRICS_HEADER: &str = "scenario,outcome,parameter,method,truth,bias,mse,coverage,length,fits,best";
pub const MISCLASS_HEADER: &str = "scenario,method,fits,min,q25,median,q75,max";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub scenario: String,
    /// 1-based outcome.
    pub outcome: usize,
    pub parameter: String,
    pub method: String,
    pub truth: f64,
    pub bias: f64,
    pub mse: f64,
    pub coverage: f64,
    pub length: f64,
    /// Successful fits behind the row.
    pub fits: usize,
    /// Smallest MSE among the methods that only see the observed data.
    pub best: bool,
}

impl MetricRow {
    pub fn new(scenario: String, outcome: usize, parameter: String, method: String, truth: f64, m: Metric, fits: usize) -> Self {
        MetricRow { scenario, outcome, parameter, method, truth, bias: m.bias, mse: m.mse, coverage: m.coverage, length: m.length, fits, best: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisclassRow {
    pub scenario: String,
    pub method: String,
    pub fits: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StudyReport {
    pub rows: Vec<MetricRow>,
    pub misclassification: Vec<MisclassRow>,
    pub failures: Vec<FailedFit>,
    pub total_fits: usize,
}

impl StudyReport {
    pub fn row(&self, scenario: &str, parameter: &str, method: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.scenario == scenario && r.parameter == parameter && r.method == method)
    }

    pub fn misclassification_of(&self, scenario: &str, method: &str) -> Option<&MisclassRow> {
        self.misclassification.iter().find(|r| r.scenario == scenario && r.method == method)
    }

    pub fn failure_budget_exceeded(&self) -> bool {
        self.failures.len() as f64 > FAILED_FIT_BUDGET * self.total_fits as f64
    }

    /// Flags the lowest-MSE method per (scenario, parameter), leaving out the
    /// full-data benchmark.
    pub fn mark_best(&mut self) {
        let mut best: BTreeMap<(String, String), (usize, f64)> = BTreeMap::new();
        for (i, r) in self.rows.iter_mut().enumerate() {
            r.best = false;
            if r.method == "full" || !r.mse.is_finite() {
                continue;
            }
            let key = (r.scenario.clone(), r.parameter.clone());
            let entry = best.entry(key).or_insert((i, r.mse));
            if r.mse < entry.1 {
                *entry = (i, r.mse);
            }
        }
        for (i, _) in best.values() {
            self.rows[*i].best = true;
        }
    }

    /// Paper-style table: Outcome, Parameter, Method, Truth, Bias, MSE, Coverage, Length.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut scenario = "";
        for r in &self.rows {
            if r.scenario != scenario {
                scenario = &r.scenario;
                let _ = writeln!(s, "\nScenario {scenario}");
                let _ = writeln!(s, "{:<8}{:<14}{:<8}{:>8}{:>9}{:>9}{:>10}{:>9}", "Outcome", "Parameter", "Method", "Truth", "Bias", "MSE", "Coverage", "Length");
            }
            let _ = writeln!(
                s,
                "{:<8}{:<14}{:<8}{:>8.3}{:>9.3}{:>9.3}{:>10.3}{:>9.3}{}",
                r.outcome,
                r.parameter,
                r.method,
                r.truth,
                r.bias,
                r.mse,
                r.coverage,
                r.length,
                if r.best { "  *" } else { "" }
            );
        }
        if !self.misclassification.is_empty() {
            let _ = writeln!(s, "\nMisclassification");
            let _ = writeln!(s, "{:<10}{:<8}{:>8}{:>8}{:>8}{:>8}{:>8}", "Scenario", "Method", "Min", "25%", "50%", "75%", "Max");
            for m in &self.misclassification {
                let _ = writeln!(s, "{:<10}{:<8}{:>8.3}{:>8.3}{:>8.3}{:>8.3}{:>8.3}", m.scenario, m.method, m.min, m.q25, m.median, m.q75, m.max);
            }
        }
        let _ = writeln!(s, "\nFailed fits: {} of {}", self.failures.len(), self.total_fits);
        s
    }

    /// Writes metrics.csv, misclassification.csv, failures.csv and report.txt.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_metrics_csv(&self.rows, std::fs::File::create(dir.join("metrics.csv"))?)?;
        write_rows(&self.misclassification, std::fs::File::create(dir.join("misclassification.csv"))?)?;
        write_rows(&self.failures, std::fs::File::create(dir.join("failures.csv"))?)?;
        std::fs::write(dir.join("report.txt"), self.to_text())?;
        Ok(())
    }
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], mut w: W) -> Result<()> {
    if rows.is_empty() {
        writeln!(w, "{METRICS_HEADER}")?;
        return Ok(());
    }
    write_rows(rows, w)
}

pub fn read_metrics_csv<R: Read>(r: R) -> Result<Vec<MetricRow>> {
    Ok(csv::Reader::from_reader(r).deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_misclassification_csv<R: Read>(r: R) -> Result<Vec<MisclassRow>> {
    Ok(csv::Reader::from_reader(r).deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, parameter: &str, mse: f64) -> MetricRow {
        let m = Metric { bias: -0.1, mse, coverage: 0.9, length: 0.3 };
        MetricRow::new("S0".into(), 2, parameter.into(), method.into(), 0.75, m, 100)
    }

    fn sample() -> StudyReport {
        let mut rep = StudyReport {
            rows: vec![row("full", "beta_222", 0.001), row("naive", "beta_222", 0.02), row("mar", "beta_222", 0.01), row("mnar", "beta_222", 0.004)],
            misclassification: vec![MisclassRow { scenario: "S0".into(), method: "mnar".into(), fits: 100, min: 0.01, q25: 0.02, median: 0.03, q75: 0.035, max: 0.06 }],
            failures: Vec::new(),
            total_fits: 400,
        };
        rep.mark_best();
        rep
    }

    #[test]
    fn best_skips_the_benchmark() {
        let rep = sample();
        let best: Vec<&str> = rep.rows.iter().filter(|r| r.best).map(|r| r.method.as_str()).collect();
        assert_eq!(best, vec!["mnar"]);
    }

    #[test]
    fn csv_round_trip_and_header() {
        let rep = sample();
        let mut buf = Vec::new();
        write_metrics_csv(&rep.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), METRICS_HEADER);
        assert_eq!(read_metrics_csv(buf.as_slice()).unwrap(), rep.rows);
        let mut buf = Vec::new();
        write_rows(&rep.misclassification, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().next().unwrap(), MISCLASS_HEADER);
        assert_eq!(read_misclassification_csv(buf.as_slice()).unwrap(), rep.misclassification);
    }

    #[test]
    fn failure_budget() {
        let mut rep = sample();
        let fail = FailedFit { scenario: crate::simulator::Scenario::S0, method: crate::data::Method::Mnar, replication: 1, error: "x".into() };
        rep.failures = vec![fail; 20];
        assert!(!rep.failure_budget_exceeded());
        rep.failures.push(rep.failures[0].clone());
        assert!(rep.failure_budget_exceeded());
    }

    #[test]
    fn text_table_lists_every_row() {
        let text = sample().to_text();
        assert_eq!(text.lines().filter(|l| l.contains("beta_222")).count(), 4);
        assert!(text.contains("Failed fits: 0 of 400"));
    }
}
