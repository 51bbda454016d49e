//! Readers for the files the auxiliary subcommands consume.

use std::path::Path;

use earthwire::breakdown::{BreakdownModel, LEADER_E0, LEADER_K};
use earthwire::soil::SoilProperties;
use serde::Deserialize;

use crate::Failure;

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>, Failure> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn bad(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

/// Probe CSV as written by `run`.
pub struct ProbeTable {
    pub time: Vec<f64>,
    columns: Vec<(String, Vec<f64>)>,
}

impl ProbeTable {
    pub fn column(&self, name: &str) -> Result<&[f64], Failure> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice()).ok_or_else(|| {
            let names: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
            Failure::usage(format!("no column '{name}' (available: {})", names.join(", ")))
        })
    }

    /// The record spacing, which must be uniform.
    pub fn dt(&self) -> Result<f64, Failure> {
        if self.time.len() < 2 {
            return Err(Failure::usage("probe file needs at least two rows"));
        }
        let dt = (self.time[self.time.len() - 1] - self.time[0]) / (self.time.len() - 1) as f64;
        let uniform = self.time.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
        if dt.is_nan() || dt <= 0.0 || !uniform {
            return Err(Failure::usage("probe file time column is not uniformly increasing"));
        }
        Ok(dt)
    }
}

pub fn read_probe_csv(path: &Path) -> Result<ProbeTable, Failure> {
    let mut rdr = open(path)?;
    let headers = rdr.headers().map_err(|e| bad(path, e))?.clone();
    if headers.get(0) != Some("time") {
        return Err(bad(path, "first column must be 'time'"));
    }
    let mut time = Vec::new();
    let mut columns: Vec<(String, Vec<f64>)> = headers.iter().skip(1).map(|h| (h.to_string(), Vec::new())).collect();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(path, e))?;
        let num = |i: usize| -> Result<f64, Failure> {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad(path, format!("row {}: column {} is not a number", row + 1, i + 1)))
        };
        time.push(num(0)?);
        for (i, (_, col)) in columns.iter_mut().enumerate() {
            col.push(num(i + 1)?);
        }
    }
    Ok(ProbeTable { time, columns })
}

#[derive(Deserialize)]
struct SoilRow {
    freq: f64,
    sigma: f64,
    eps_r: f64,
}

/// Soil samples with columns `freq,sigma,eps_r`.
pub fn read_soil_csv(path: &Path) -> Result<Vec<SoilProperties>, Failure> {
    let mut rdr = open(path)?;
    rdr.deserialize::<SoilRow>()
        .map(|r| r.map(|r| SoilProperties { freq: r.freq, sigma: r.sigma, eps_r: r.eps_r }).map_err(|e| bad(path, e)))
        .collect()
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BreakdownParams {
    DisruptiveEffect { v0: f64, k: f64, de_crit: f64 },
    LeaderProgression { gap: f64, e0: Option<f64>, k_l: Option<f64> },
}

/// Breakdown model from TOML, e.g. `kind = "disruptive_effect"` with `v0`,
/// `k` and `de_crit`, or `kind = "leader_progression"` with `gap` and
/// optional `e0` and `k_l`.
pub fn read_breakdown_model(path: &Path) -> Result<BreakdownModel, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    let p: BreakdownParams = toml::from_str(&text).map_err(|e| bad(path, e))?;
    let model = match p {
        BreakdownParams::DisruptiveEffect { v0, k, de_crit } => BreakdownModel::DisruptiveEffect { v0, k, de_crit },
        BreakdownParams::LeaderProgression { gap, e0, k_l } => {
            BreakdownModel::LeaderProgression { gap, e0: e0.unwrap_or(LEADER_E0), k_l: k_l.unwrap_or(LEADER_K) }
        }
    };
    model.check()?;
    Ok(model)
}
