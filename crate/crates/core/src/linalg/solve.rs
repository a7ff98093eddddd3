//! Direct solves for the small systems the receivers need. Gaussian
//! elimination with partial pivoting is plenty at these sizes; conditioning is
//! estimated from the pivot-magnitude spread, which is cheap and catches the
//! rank-deficient covariance matrices that actually occur.

use super::{CMat, CVec, LinalgError, Tolerances, C64, DEFAULT_TOLERANCES};

/// Solve `A X = B` column-by-column via LU with partial pivoting.
/// Errors with `IllConditioned` when max|pivot| / min|pivot| exceeds
/// `condition_max` (or a pivot vanishes outright).
pub(crate) fn lu_solve_columns(
    a: &CMat,
    b: &CMat,
    condition_max: f64,
) -> Result<CMat, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "square matrix required, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "rhs rows {} vs matrix dim {}",
            b.rows(),
            n
        )));
    }
    let nrhs = b.cols();
    let mut lu = a.clone();
    let mut rhs = b.clone();

    let mut min_pivot = f64::INFINITY;
    let mut max_pivot = 0.0f64;
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].norm();
        for i in (k + 1)..n {
            let mag = lu[(i, k)].norm();
            if mag > best {
                best = mag;
                p = i;
            }
        }
        if best == 0.0 {
            return Err(LinalgError::IllConditioned(f64::INFINITY));
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            for j in 0..nrhs {
                let t = rhs[(k, j)];
                rhs[(k, j)] = rhs[(p, j)];
                rhs[(p, j)] = t;
            }
        }
        min_pivot = min_pivot.min(best);
        max_pivot = max_pivot.max(best);

        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let factor = lu[(i, k)] / pivot;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            lu[(i, k)] = factor;
            for j in (k + 1)..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= factor * v;
            }
            for j in 0..nrhs {
                let v = rhs[(k, j)];
                rhs[(i, j)] -= factor * v;
            }
        }
    }
    let ratio = max_pivot / min_pivot;
    if !ratio.is_finite() || ratio > condition_max {
        return Err(LinalgError::IllConditioned(ratio));
    }

    // Back substitution.
    let mut x = CMat::zeros(n, nrhs);
    for j in 0..nrhs {
        for ii in (0..n).rev() {
            let mut acc = rhs[(ii, j)];
            for k in (ii + 1)..n {
                acc -= lu[(ii, k)] * x[(k, j)];
            }
            x[(ii, j)] = acc / lu[(ii, ii)];
        }
    }
    Ok(x)
}

pub fn hermitian_solve(a: &CMat, b: &CVec) -> Result<CVec, LinalgError> {
    hermitian_solve_with(a, b, &DEFAULT_TOLERANCES)
}

/// Solve `A x = b` for Hermitian `A`. Rejects non-Hermitian input and
/// ill-conditioned systems rather than returning garbage; callers that can
/// regularize (diagonal loading) do so on `IllConditioned`.
pub fn hermitian_solve_with(
    a: &CMat,
    b: &CVec,
    tol: &Tolerances,
) -> Result<CVec, LinalgError> {
    if !a.is_hermitian(tol.hermitian_rel) {
        return Err(LinalgError::NotHermitian);
    }
    if b.dim() != a.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "rhs dim {} vs matrix dim {}",
            b.dim(),
            a.rows()
        )));
    }
    let rhs = CMat::from_cols(std::slice::from_ref(b));
    let x = lu_solve_columns(a, &rhs, tol.condition_max)?;
    Ok(x.col(0))
}
