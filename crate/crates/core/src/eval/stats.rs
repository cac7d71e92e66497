//! Small summary statistics used by studies and benchmarks.

use crate::error::{invalid, Result};
use crate::sum::{mean, pairwise_sum};

/// Pearson correlation coefficient of two equally long samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("pearson needs two samples of equal length >= 2"));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let syy: Vec<f64> = y.iter().map(|b| (b - my) * (b - my)).collect();
    let denom = (pairwise_sum(&sxx) * pairwise_sum(&syy)).sqrt();
    if denom == 0.0 {
        return Err(invalid("pearson is undefined for a constant sample"));
    }
    Ok(pairwise_sum(&sxy) / denom)
}

/// Least-squares line `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("a linear fit needs two samples of equal length >= 2"));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let sxx = pairwise_sum(&sxx);
    if sxx == 0.0 {
        return Err(invalid("a linear fit needs at least two distinct x values"));
    }
    let slope = pairwise_sum(&sxy) / sxx;
    let intercept = my - slope * mx;
    let res: Vec<f64> = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).collect();
    let tot: Vec<f64> = y.iter().map(|b| (b - my) * (b - my)).collect();
    let tot = pairwise_sum(&tot);
    let r_squared = if tot == 0.0 { 1.0 } else { 1.0 - pairwise_sum(&res) / tot };
    Ok(LinearFit { slope, intercept, r_squared })
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}
