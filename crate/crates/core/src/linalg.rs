//! Dense weighted ridge regression via the normal equations.

use crate::scalar::Scalar;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("normal equations are singular")]
    SingularSystem,
    #[error("rows, targets, and weights must have matching lengths")]
    ShapeMismatch,
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
///
/// With a positive ridge term the assembled system is positive definite, so a
/// vanishing pivot only appears if the penalty was zeroed out.
#[allow(clippy::needless_range_loop)]
pub fn solve_linear_system<F: Scalar>(
    mut a: Vec<Vec<F>>,
    mut b: Vec<F>,
) -> Result<Vec<F>, SolveError> {
    let d = b.len();
    for (row, coefficients) in a.iter().enumerate() {
        assert_eq!(coefficients.len(), d, "matrix row {row} has wrong length");
    }
    assert_eq!(a.len(), d, "matrix must be square");

    for col in 0..d {
        let pivot_row = (col..d)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot_row][col].abs() <= F::epsilon() {
            return Err(SolveError::SingularSystem);
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);

        let pivot = a[col][col];
        for row in (col + 1)..d {
            let factor = a[row][col] / pivot;
            if factor == F::zero() {
                continue;
            }
            for k in col..d {
                let delta = factor * a[col][k];
                a[row][k] = a[row][k] - delta;
            }
            b[row] = b[row] - factor * b[col];
        }
    }

    let mut x = vec![F::zero(); d];
    for col in (0..d).rev() {
        let mut value = b[col];
        for k in (col + 1)..d {
            value = value - a[col][k] * x[k];
        }
        x[col] = value / a[col][col];
    }
    Ok(x)
}

/// Fits `t ~ theta0 + theta . row` by weighted least squares with an L2
/// penalty `lambda` on `theta` (the intercept is unpenalized).
///
/// Rows are binary feature vectors; assembling X'WX directly keeps the solve
/// at O(m d^2 + d^3) for m rows of width d.
#[allow(clippy::needless_range_loop)]
pub fn fit_weighted_ridge<F: Scalar>(
    rows: &[Vec<bool>],
    targets: &[F],
    weights: &[F],
    lambda: F,
) -> Result<(F, Vec<F>), SolveError> {
    if rows.len() != targets.len() || rows.len() != weights.len() {
        return Err(SolveError::ShapeMismatch);
    }
    let n = rows.first().map(Vec::len).unwrap_or(0);
    let d = n + 1;

    let mut a = vec![vec![F::zero(); d]; d];
    let mut b = vec![F::zero(); d];
    for ((row, &target), &weight) in rows.iter().zip(targets).zip(weights) {
        if row.len() != n {
            return Err(SolveError::ShapeMismatch);
        }
        let mut features = Vec::with_capacity(d);
        features.push(F::one());
        features.extend(
            row.iter()
                .map(|&bit| if bit { F::one() } else { F::zero() }),
        );
        for p in 0..d {
            if features[p] == F::zero() {
                continue;
            }
            let wf = weight * features[p];
            for q in p..d {
                a[p][q] += wf * features[q];
            }
            b[p] += wf * target;
        }
    }
    for p in 0..d {
        for q in 0..p {
            a[p][q] = a[q][p];
        }
    }
    for j in 1..d {
        a[j][j] += lambda;
    }

    let solution = solve_linear_system(a, b)?;
    let mut iter = solution.into_iter();
    let intercept = iter.next().unwrap_or_else(F::zero);
    Ok((intercept, iter.collect()))
}
