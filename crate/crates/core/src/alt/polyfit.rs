//! Least-squares polynomial fit via normal equations on rescaled abscissae.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y(x) = sum a_k x^k`, fitted to edge-pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFitModel {
    pub degree: usize,
    /// Monomial coefficients in `x`, lowest order first.
    pub coefficients: Vec<f64>,
    pub rms_residual: f64,
    center: f64,
    half_range: f64,
    /// Coefficients in `t = (x - center) / half_range`; used for evaluation.
    scaled: Vec<f64>,
}

impl EdgeFitModel {
    pub fn evaluate(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.half_range;
        self.scaled.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }
}

/// Gaussian elimination with partial pivoting on an augmented system.
#[allow(clippy::needless_range_loop)]
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn polyfit_least_squares(points: &[(f64, f64)], degree: usize) -> Result<EdgeFitModel> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if degree == 0 || xs.len() <= degree {
        return Err(Error::RankDeficient {
            distinct: xs.len(),
            degree,
        });
    }
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let center = 0.5 * (lo + hi);
    let half_range = 0.5 * (hi - lo);
    let n = degree + 1;

    // Power sums of t up to 2d and moments of y.
    let mut sums = vec![0.0; 2 * degree + 1];
    let mut rhs = vec![0.0; n];
    for &(x, y) in points {
        let t = (x - center) / half_range;
        let mut p = 1.0;
        for k in 0..=2 * degree {
            sums[k] += p;
            if k < n {
                rhs[k] += p * y;
            }
            p *= t;
        }
    }
    let normal: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| sums[i + j]).collect())
        .collect();
    let scaled = solve(normal, rhs).ok_or(Error::RankDeficient {
        distinct: xs.len(),
        degree,
    })?;

    // Expand sum b_j ((x - c) / h)^j into monomials of x.
    let mut coefficients = vec![0.0; n];
    for (j, &b) in scaled.iter().enumerate() {
        let hj = half_range.powi(j as i32);
        for (k, coeff) in coefficients.iter_mut().enumerate().take(j + 1) {
            *coeff += b * binomial(j, k) * (-center).powi((j - k) as i32) / hj;
        }
    }

    let mut model = EdgeFitModel {
        degree,
        coefficients,
        rms_residual: 0.0,
        center,
        half_range,
        scaled,
    };
    let sq: f64 = points
        .iter()
        .map(|&(x, y)| (y - model.evaluate(x)).powi(2))
        .sum();
    model.rms_residual = (sq / points.len() as f64).sqrt();
    Ok(model)
}
