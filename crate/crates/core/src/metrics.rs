//! Market shares, Gini inequality, quartile difference and share–quality slope.

use crate::error::{Error, Result};
use crate::model::MarketState;

/// Fraction of agents that consumed each item. Shares need not sum to 1.
pub fn market_shares(state: &MarketState) -> Vec<f64> {
    let n = state.n_agents() as f64;
    state.per_item_count().iter().map(|&c| c as f64 / n).collect()
}

/// Gini index of the shares:
/// `I = (Σ_α Σ_β |d_α − d_β| / M²) / (2 Σ_α d_α / M)`.
///
/// Zero for an empty share vector or an all-zero market. The pairwise sum is
/// evaluated in O(M log M) from the gaps of the ascending order,
/// `2 Σ_k k(M−k)(d_(k) − d_(k−1))`, whose terms are all non-negative and
/// vanish exactly for equal shares.
pub fn gini_inequality(shares: &[f64]) -> f64 {
    let m = shares.len();
    let total: f64 = shares.iter().sum();
    if m == 0 || total == 0.0 {
        return 0.0;
    }
    let mut sorted = shares.to_vec();
    sorted.sort_by(f64::total_cmp);
    let weighted: f64 = sorted
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let k = (i + 1) as f64;
            k * (m as f64 - k) * (w[1] - w[0])
        })
        .sum();
    let m = m as f64;
    let mean_abs_diff = 2.0 * weighted / (m * m);
    mean_abs_diff / (2.0 * total / m)
}

/// Items ranked by quality, best first; equal qualities keep ascending index.
fn quality_ranking(qualities: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..qualities.len()).collect();
    order.sort_by(|&a, &b| qualities[b].total_cmp(&qualities[a]).then(a.cmp(&b)));
    order
}

/// Mean share of the top-quality quartile minus that of the bottom quartile.
///
/// Quartiles hold ⌊M/4⌋ items each.
pub fn quartile_difference(shares: &[f64], qualities: &[f64]) -> Result<f64> {
    if shares.len() != qualities.len() {
        return Err(Error::InvalidInput(format!(
            "{} shares but {} qualities",
            shares.len(),
            qualities.len()
        )));
    }
    let m = shares.len();
    if m < 4 {
        return Err(Error::InvalidInput(format!(
            "quartile difference needs at least 4 items, got {m}"
        )));
    }
    let quarter = m / 4;
    let order = quality_ranking(qualities);
    let mean = |items: &[usize]| items.iter().map(|&a| shares[a]).sum::<f64>() / quarter as f64;
    Ok(mean(&order[..quarter]) - mean(&order[m - quarter..]))
}

/// Ordinary least squares fit `d ≈ slope·q + intercept`.
pub fn share_quality_slope(shares: &[f64], qualities: &[f64]) -> Result<(f64, f64)> {
    if shares.len() != qualities.len() {
        return Err(Error::InvalidInput(format!(
            "{} shares but {} qualities",
            shares.len(),
            qualities.len()
        )));
    }
    if shares.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a line fit needs at least 2 points, got {}",
            shares.len()
        )));
    }
    ols(qualities.iter().copied().zip(shares.iter().copied()))
}

/// OLS over `(x, y)` points; shared by per-run and pooled fits.
pub(crate) fn ols(points: impl Iterator<Item = (f64, f64)> + Clone) -> Result<(f64, f64)> {
    let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for (x, y) in points.clone() {
        n += 1;
        sx += x;
        sy += y;
    }
    let mx = sx / n as f64;
    let my = sy / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateRegressor(n));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Per-run metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub shares: Vec<f64>,
    pub qualities: Vec<f64>,
    pub inequality: f64,
    /// `None` when fewer than four items.
    pub quartile_diff: Option<f64>,
    /// `None` when the quality regressor is degenerate (e.g. σ = 0).
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

impl MetricsReport {
    pub fn new(shares: Vec<f64>, qualities: Vec<f64>) -> Result<Self> {
        if shares.len() != qualities.len() {
            return Err(Error::InvalidInput(format!(
                "{} shares but {} qualities",
                shares.len(),
                qualities.len()
            )));
        }
        let inequality = gini_inequality(&shares);
        let quartile_diff = if shares.len() >= 4 {
            Some(quartile_difference(&shares, &qualities)?)
        } else {
            None
        };
        let fit = match share_quality_slope(&shares, &qualities) {
            Ok(fit) => Some(fit),
            Err(Error::DegenerateRegressor(_)) | Err(Error::InvalidInput(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(MetricsReport {
            shares,
            qualities,
            inequality,
            quartile_diff,
            slope: fit.map(|f| f.0),
            intercept: fit.map(|f| f.1),
        })
    }

    pub fn from_run(result: &crate::engine::RunResult) -> Result<Self> {
        MetricsReport::new(result.shares(), result.qualities.0.clone())
    }
}

/// Single OLS fit over the (quality, share) points of many runs.
pub fn pooled_slope<'a>(reports: impl IntoIterator<Item = &'a MetricsReport>) -> Result<(f64, f64)> {
    let reports: Vec<&MetricsReport> = reports.into_iter().collect();
    let points = reports
        .iter()
        .flat_map(|r| r.qualities.iter().copied().zip(r.shares.iter().copied()));
    if points.clone().count() < 2 {
        return Err(Error::InvalidInput("pooled fit needs at least 2 points".into()));
    }
    ols(points)
}
