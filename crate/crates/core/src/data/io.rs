//! Long-format CSV ingestion and emission.
//!
//! Header: `patient_id, window, time, visit, m_1..m_R, y_1..y_R, w_1..w_{s−1}, u_1..u_{e−1}`.
//! One row per (patient, window); empty cells are missing.

use std::io::{Read, Write};
use std::path::Path;

use super::panel::{check_window, PanelData, Patient, Window};
use super::spec::ModelSpec;
use crate::error::{Error, Result};

struct Layout {
    outcomes: usize,
    w: usize,
    u: usize,
}

fn parse_header(header: &csv::StringRecord) -> Result<Layout> {
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    let bad = |m: String| Error::Validation { line: 1, message: m };
    if cols.len() < 4 || cols[..4] != ["patient_id", "window", "time", "visit"] {
        return Err(bad("header must start with patient_id,window,time,visit".into()));
    }
    let count = |prefix: &str, from: usize| {
        let mut n = 0;
        while cols.get(from + n) == Some(&format!("{prefix}_{}", n + 1).as_str()) {
            n += 1;
        }
        n
    };
    let outcomes = count("m", 4);
    if outcomes == 0 {
        return Err(bad("header needs at least one m_r column".into()));
    }
    if count("y", 4 + outcomes) != outcomes {
        return Err(bad(format!("header needs y_1..y_{outcomes} after the m columns")));
    }
    let w = count("w", 4 + 2 * outcomes);
    let u = count("u", 4 + 2 * outcomes + w);
    if 4 + 2 * outcomes + w + u != cols.len() {
        return Err(bad(format!("unexpected column `{}`", cols[4 + 2 * outcomes + w + u])));
    }
    Ok(Layout { outcomes, w, u })
}

fn parse_flag(s: &str, line: usize, name: &str) -> Result<bool> {
    match s.trim() {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(Error::Validation { line, message: format!("{name} must be 0 or 1, got `{other}`") }),
    }
}

fn parse_real(s: &str, line: usize, name: &str) -> Result<Option<f64>> {
    let t = s.trim();
    if t.is_empty() {
        return Ok(None);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Validation { line, message: format!("{name} is not a finite number: `{t}`") }),
    }
}

fn required(v: Option<f64>, line: usize, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Validation { line, message: format!("{name} is required") })
}

/// Reads and validates a panel. When `spec` is given its declared outcome and
/// window counts are enforced.
pub fn read_panel<R: Read>(reader: R, spec: Option<&ModelSpec>) -> Result<PanelData> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let layout = parse_header(rdr.headers()?)?;
    let r_count = layout.outcomes;
    // (patient, rows as (window index, line, Window), w, u)
    let mut order: Vec<String> = Vec::new();
    let mut blocks: std::collections::HashMap<String, (Vec<(usize, usize, Window)>, Vec<f64>, Vec<f64>, usize)> =
        std::collections::HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let id = rec[0].trim().to_string();
        if id.is_empty() {
            return Err(Error::Validation { line, message: "patient_id is empty".into() });
        }
        let window = rec[1]
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&j| j >= 1)
            .ok_or_else(|| Error::Validation { line, message: format!("window must be a positive integer, got `{}`", &rec[1]) })?;
        let time = required(parse_real(&rec[2], line, "time")?, line, "time")?;
        let visit = parse_flag(&rec[3], line, "visit")?;
        let mut response = Vec::with_capacity(r_count);
        let mut y = Vec::with_capacity(r_count);
        for r in 0..r_count {
            let cell = rec[4 + r].trim();
            let m = if cell.is_empty() && !visit { false } else { parse_flag(cell, line, &format!("m_{}", r + 1))? };
            response.push(m);
            y.push(parse_real(&rec[4 + r_count + r], line, &format!("y_{}", r + 1))?);
        }
        let cell = Window { time, visit, response, y };
        check_window(&cell, r_count).map_err(|message| Error::Validation { line, message })?;
        let base = 4 + 2 * r_count;
        let mut w = vec![1.0];
        for c in 0..layout.w {
            w.push(required(parse_real(&rec[base + c], line, &format!("w_{}", c + 1))?, line, "w")?);
        }
        let mut u = vec![1.0];
        for c in 0..layout.u {
            u.push(required(parse_real(&rec[base + layout.w + c], line, &format!("u_{}", c + 1))?, line, "u")?);
        }
        match blocks.get_mut(&id) {
            Some((rows, w0, u0, _)) => {
                if *w0 != w || *u0 != u {
                    return Err(Error::Validation { line, message: format!("covariates differ across rows of patient `{id}`") });
                }
                rows.push((window, line, cell));
            }
            None => {
                order.push(id.clone());
                blocks.insert(id, (vec![(window, line, cell)], w, u, line));
            }
        }
    }
    let mut n_windows = None;
    let mut patients = Vec::with_capacity(order.len());
    for id in order {
        let (mut rows, w, u, first_line) = blocks.remove(&id).expect("patient recorded");
        rows.sort_by_key(|r| r.0);
        let j = rows.len();
        let expected = *n_windows.get_or_insert(j);
        if j != expected {
            return Err(Error::Validation {
                line: first_line,
                message: format!("patient `{id}` has {j} windows, other patients have {expected}"),
            });
        }
        for (k, (window, line, _)) in rows.iter().enumerate() {
            if *window != k + 1 {
                return Err(Error::Validation {
                    line: *line,
                    message: format!("patient `{id}` windows must be exactly 1..{j} with no repeats"),
                });
            }
        }
        for k in 1..j {
            if !(rows[k].2.time > rows[k - 1].2.time) {
                return Err(Error::Validation { line: rows[k].1, message: "times must strictly increase within a patient".into() });
            }
        }
        patients.push(Patient { id, w, u, windows: rows.into_iter().map(|r| r.2).collect() });
    }
    let data = PanelData::new(r_count, n_windows.unwrap_or(1), patients)?;
    if let Some(spec) = spec {
        spec.check(&data)?;
    }
    Ok(data)
}

pub fn load_panel_csv(path: impl AsRef<Path>, spec: Option<&ModelSpec>) -> Result<PanelData> {
    read_panel(std::fs::File::open(path)?, spec)
}

pub fn write_panel<W: Write>(data: &PanelData, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let r_count = data.n_outcomes;
    let mut header = vec!["patient_id".to_string(), "window".into(), "time".into(), "visit".into()];
    header.extend((1..=r_count).map(|r| format!("m_{r}")));
    header.extend((1..=r_count).map(|r| format!("y_{r}")));
    header.extend((1..data.class_covariates()).map(|c| format!("w_{c}")));
    header.extend((1..data.effect_covariates()).map(|c| format!("u_{c}")));
    wtr.write_record(&header)?;
    let flag = |b: bool| if b { "1".to_string() } else { "0".to_string() };
    for p in &data.patients {
        for (j, w) in p.windows.iter().enumerate() {
            let mut row = vec![p.id.clone(), (j + 1).to_string(), w.time.to_string(), flag(w.visit)];
            row.extend(w.response.iter().map(|&m| if w.visit { flag(m) } else { String::new() }));
            row.extend(w.y.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            row.extend(p.w[1..].iter().map(f64::to_string));
            row.extend(p.u[1..].iter().map(f64::to_string));
            wtr.write_record(&row)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_panel_csv(data: &PanelData, path: impl AsRef<Path>) -> Result<()> {
    write_panel(data, std::fs::File::create(path)?)
}
