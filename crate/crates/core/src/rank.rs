//! Rank and product-moment correlation between per-system distances and ratings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest sample size for which a correlation is reported.
pub const MIN_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Spearman,
    Pearson,
}

impl CorrelationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationMethod::Spearman => "spearman",
            CorrelationMethod::Pearson => "pearson",
        }
    }

    pub fn correlate(self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            CorrelationMethod::Spearman => spearman(x, y),
            CorrelationMethod::Pearson => pearson(x, y),
        }
    }
}

impl fmt::Display for CorrelationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorrelationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spearman" => Ok(CorrelationMethod::Spearman),
            "pearson" => Ok(CorrelationMethod::Pearson),
            other => Err(Error::Validation(format!(
                "unknown correlation method {other:?} (expected spearman or pearson)"
            ))),
        }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Data(format!(
            "non-finite value {} at position {i}",
            values[i]
        ))),
        None => Ok(()),
    }
}

/// Ranks `1..=n`; tied values share the mean of the positions they occupy.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InsufficientData("cannot rank an empty list".into()));
    }
    check_finite(values)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    Ok(ranks)
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dim(format!(
            "correlation inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < MIN_POINTS {
        return Err(Error::Degenerate(format!(
            "{} points, at least {MIN_POINTS} are needed for a correlation",
            x.len()
        )));
    }
    check_finite(x)?;
    check_finite(y)
}

/// Product-moment correlation, clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate(
            "correlation with a constant input is undefined".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of the average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&average_ranks(x)?, &average_ranks(y)?)
}

/// `−method(distances, ratings)`: positive when low distance goes with high rating.
pub fn negated_correlation(
    distances: &[f64],
    ratings: &[f64],
    method: CorrelationMethod,
) -> Result<f64> {
    method.correlate(distances, ratings).map(|r| -r)
}
