//! Liking-value sampling and item quality.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::model::PreferenceMatrix;
use crate::rng::RandomStream;

/// Per-item quality: the column means of a [`PreferenceMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct QualityVector(pub Vec<f64>);

impl QualityVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Draws an `n×m` matrix of independent Normal(0, σ²) likings.
///
/// Normals come from the Box–Muller transform applied to consecutive pairs
/// of uniforms, both outputs used, and fill the matrix agent-major. σ = 0
/// yields an all-zero matrix without consuming draws.
pub fn sample_preferences(n: usize, m: usize, sigma: f64, rng: &mut RandomStream) -> Result<PreferenceMatrix> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be finite and non-negative, got {sigma}"
        )));
    }
    let len = n * m;
    if sigma == 0.0 {
        return PreferenceMatrix::from_rows(n, m, vec![0.0; len]);
    }
    let mut values = Vec::with_capacity(len + 1);
    while values.len() < len {
        let (z0, z1) = box_muller(rng);
        values.push(sigma * z0);
        values.push(sigma * z1);
    }
    values.truncate(len);
    PreferenceMatrix::from_rows(n, m, values)
}

fn box_muller(rng: &mut RandomStream) -> (f64, f64) {
    // u1 in (0, 1] keeps ln finite.
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let (sin, cos) = (TAU * u2).sin_cos();
    (r * cos, r * sin)
}

pub fn quality(prefs: &PreferenceMatrix) -> QualityVector {
    let n = prefs.n_agents();
    let m = prefs.n_items();
    let mut sums = vec![0.0; m];
    for row in prefs.values().chunks_exact(m) {
        for (acc, &v) in sums.iter_mut().zip(row) {
            *acc += v;
        }
    }
    QualityVector(sums.into_iter().map(|s| s / n as f64).collect())
}

/// Writes the matrix as headerless CSV, one row per agent.
pub fn write_preferences_csv<W: Write>(prefs: &PreferenceMatrix, out: W) -> csv::Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in prefs.values().chunks_exact(prefs.n_items()) {
        wtr.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a headerless CSV matrix (row = agent, column = item).
pub fn read_preferences_csv<R: Read>(input: R) -> Result<PreferenceMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut values = Vec::new();
    let mut n_items = None;
    let mut n_agents = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidInput(format!("preference csv: {e}")))?;
        match n_items {
            None => n_items = Some(record.len()),
            Some(m) if m != record.len() => {
                return Err(Error::InvalidInput(format!(
                    "preference csv row {} has {} columns, expected {}",
                    line + 1,
                    record.len(),
                    m
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| {
                Error::InvalidInput(format!(
                    "preference csv row {}: {field:?} is not a number",
                    line + 1
                ))
            })?;
            values.push(v);
        }
        n_agents += 1;
    }
    PreferenceMatrix::from_rows(n_agents, n_items.unwrap_or(0), values)
}
