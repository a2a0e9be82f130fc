// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest admissible ratio between the extreme Cholesky pivots when no
/// ridge penalty is applied.
const MIN_PIVOT_RATIO: f64 = 1e-7;

/// Solves `min ||y - ȳ - Zβ||² + λ||β||²` for centered design rows `z`.
///
/// The intercept is `ȳ` because the columns of `z` are centered. Returns
/// `(β, ȳ)`.
pub fn solve(z: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<(Vec<f64>, f64)> {
    let n = z.len();
    if n == 0 || n != y.len() {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    let p = z[0].len();
    let y_mean = y.iter().sum::<f64>() / n as f64;

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for (row, &target) in z.iter().zip(y) {
        let centered = target - y_mean;
        for i in 0..p {
            rhs[i] += row[i] * centered;
            for j in 0..=i {
                gram[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
        gram[(i, i)] += lambda;
    }

    let chol = gram.clone().cholesky().ok_or(Error::SingularDesign)?;
    if lambda == 0.0 {
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        if lo.is_nan() || lo <= MIN_PIVOT_RATIO * hi {
            return Err(Error::SingularDesign);
        }
    }
    let mut beta = chol.solve(&rhs);
    // One step of iterative refinement.
    let residual = &rhs - &gram * &beta;
    beta += chol.solve(&residual);
    Ok((beta.iter().copied().collect(), y_mean))
}
