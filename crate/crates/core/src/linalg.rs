//! Small dense linear-algebra helpers shared by the dynamics and conserved
//! modules. Everything sits on nalgebra; matrices here are tiny (rank of
//! the algebroid), so explicit inverses double as condition estimates.

use nalgebra::{DMatrix, DVector};

/// Condition threshold above which a matrix is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Frobenius-norm condition estimate from an explicit inverse.
pub fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    match a.clone().try_inverse() {
        Some(inv) => {
            let c = a.norm() * inv.norm();
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    }
}

/// Solves `a x = b` by partial-pivot LU. Fails with the condition estimate
/// when it reaches [`CONDITION_LIMIT`].
pub fn solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>, f64> {
    let condition = condition_estimate(a);
    if !condition.is_finite() || condition >= CONDITION_LIMIT {
        return Err(condition);
    }
    let lu = a.clone().lu();
    let rhs = DVector::from_column_slice(b);
    match lu.solve(&rhs) {
        Some(x) => Ok(x.iter().copied().collect()),
        None => Err(f64::INFINITY),
    }
}

/// `a' a^{-1}`, or the condition estimate of `a` if it is too ill-conditioned.
pub fn right_divide(a_prime: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>, f64> {
    let condition = condition_estimate(a);
    if !condition.is_finite() || condition >= CONDITION_LIMIT {
        return Err(condition);
    }
    let inv = a.clone().try_inverse().ok_or(f64::INFINITY)?;
    Ok(a_prime * inv)
}
