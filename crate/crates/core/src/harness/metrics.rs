//! Comparison metrics between the full filter and a compressed variant.

use nalgebra::{DMatrix, DVector};

use crate::error::{GckfError, Result};
use crate::gaussian::{normalized_covariance, GaussianBelief};

fn check_shapes(full: &[Vec<DVector<f64>>], gckf: &[Vec<DVector<f64>>], gt: &[DVector<f64>]) -> Result<()> {
    if full.len() != gckf.len() || full.is_empty() {
        return Err(GckfError::arg(format!("{} full runs vs {} compressed runs", full.len(), gckf.len())));
    }
    for (f, g) in full.iter().zip(gckf) {
        if f.len() != gt.len() || g.len() != gt.len() {
            return Err(GckfError::arg("runs and truth cover different numbers of instants"));
        }
        for ((a, b), t) in f.iter().zip(g).zip(gt) {
            if a.len() != t.len() || b.len() != t.len() {
                return Err(GckfError::arg("state dimensions differ"));
            }
        }
    }
    Ok(())
}

/// Per instant, the mean over runs and states of `|full - gt| - |gckf - gt|`.
pub fn discrepancy_series(
    full: &[Vec<DVector<f64>>],
    gckf: &[Vec<DVector<f64>>],
    gt: &[DVector<f64>],
) -> Result<Vec<f64>> {
    check_shapes(full, gckf, gt)?;
    let runs = full.len() as f64;
    Ok(gt
        .iter()
        .enumerate()
        .map(|(t, truth)| {
            let total: f64 = full
                .iter()
                .zip(gckf)
                .map(|(f, g)| {
                    f[t].iter()
                        .zip(g[t].iter())
                        .zip(truth.iter())
                        .map(|((a, b), x)| (a - x).abs() - (b - x).abs())
                        .sum::<f64>()
                })
                .sum();
            total / (runs * truth.len().max(1) as f64)
        })
        .collect())
}

/// Mean over runs, instants and states of `|full - gt| - |gckf - gt|`;
/// positive when the compressed filter is closer to the truth.
pub fn avg_discrepancy(full: &[Vec<DVector<f64>>], gckf: &[Vec<DVector<f64>>], gt: &[DVector<f64>]) -> Result<f64> {
    let s = discrepancy_series(full, gckf, gt)?;
    if s.is_empty() {
        return Err(GckfError::arg("no instants to average"));
    }
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// `100 (sigma_gckf - sigma_full) / sigma_full`, `None` where `sigma_full = 0`.
pub fn std_percent_diff(full: &DVector<f64>, gckf: &DVector<f64>) -> Result<Vec<Option<f64>>> {
    if full.len() != gckf.len() {
        return Err(GckfError::arg("standard deviation vectors differ in length"));
    }
    Ok(full.iter().zip(gckf.iter()).map(|(f, g)| (*f != 0.0).then(|| 100.0 * (g - f) / f)).collect())
}

pub fn std_percent_diff_beliefs(full: &GaussianBelief, gckf: &GaussianBelief) -> Result<Vec<Option<f64>>> {
    std_percent_diff(&full.std_devs(), &gckf.std_devs())
}

/// Largest absolute defined entry.
pub fn max_abs_percent(series: &[Vec<Option<f64>>]) -> f64 {
    series.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

/// `||NC(a) - NC(b)||_F` between the normalised covariances.
pub fn normcov_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let na = normalized_covariance(&GaussianBelief { mean: DVector::zeros(a.nrows()), cov: a.clone() });
    let nb = normalized_covariance(&GaussianBelief { mean: DVector::zeros(b.nrows()), cov: b.clone() });
    (na.matrix - nb.matrix).norm()
}

/// Per-iteration costs in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Timings {
    pub t_ff: f64,
    pub t_gckf: f64,
    pub t_gu: f64,
}

/// `t_ff / (t_gckf + t_gu guf / pf)`.
pub fn cost_ratio(t: &Timings, pf: f64, guf: f64) -> Result<f64> {
    let den = t.t_gckf + t.t_gu * guf / pf;
    if !(den > 0.0 && den.is_finite()) || !t.t_ff.is_finite() {
        return Err(GckfError::Measurement(format!("cost ratio denominator is {den}")));
    }
    Ok(t.t_ff / den)
}

/// `[sum (N - N_i)^2 N_i, sum (N - N_i) N_i^2, sum N_i^3]` for subsystem sizes `N_i`.
pub fn gu_cost_proxies(sizes: &[usize]) -> [f64; 3] {
    let n: f64 = sizes.iter().map(|&s| s as f64).sum();
    sizes.iter().fold([0.0; 3], |acc, &s| {
        let s = s as f64;
        [acc[0] + (n - s).powi(2) * s, acc[1] + (n - s) * s * s, acc[2] + s.powi(3)]
    })
}

/// Median of a non-empty sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.is_empty() {
        f64::NAN
    } else if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
