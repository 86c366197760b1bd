//! Dense linear algebra at desk scale, backed by nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest window dimension handled by dense decompositions.
pub const DENSE_CAP: usize = 3000;

pub fn check_capacity(rows: usize, cols: usize) -> Result<()> {
    let dim = rows.max(cols);
    if dim > DENSE_CAP {
        return Err(Error::Capacity { dim, cap: DENSE_CAP });
    }
    Ok(())
}

const SVD_MAX_ITER: usize = 10_000;

fn nonzero_rows(m: &DMatrix<f64>) -> Vec<usize> {
    (0..m.nrows()).filter(|&i| m.row(i).iter().any(|v| *v != 0.0)).collect()
}

fn nonzero_cols(m: &DMatrix<f64>) -> Vec<usize> {
    (0..m.ncols()).filter(|&j| m.column(j).iter().any(|v| *v != 0.0)).collect()
}

/// Singular values in no particular order. Zero rows and columns are removed
/// first; if the iteration does not converge the square roots of the Gram
/// eigenvalues are returned instead.
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    let k = m.nrows().min(m.ncols());
    let (rows, cols) = (nonzero_rows(m), nonzero_cols(m));
    let mut out = DVector::zeros(k);
    if rows.is_empty() || cols.is_empty() {
        return out;
    }
    let c = m.select_rows(&rows).select_columns(&cols);
    let values = match c.clone().try_svd(false, false, f64::EPSILON, SVD_MAX_ITER) {
        Some(svd) => svd.singular_values,
        None => {
            let g = if c.nrows() >= c.ncols() { c.transpose() * &c } else { &c * c.transpose() };
            g.symmetric_eigenvalues().map(|v| v.max(0.0).sqrt())
        }
    };
    for (i, v) in values.iter().enumerate() {
        out[i] = *v;
    }
    out
}

pub fn sigma_max(m: &DMatrix<f64>) -> f64 {
    singular_values(m).iter().copied().fold(0.0, f64::max)
}

/// Smallest singular value `σ_min = inf ‖Mf‖₂/‖f‖₂` over `f ∈ ℝ^{ncols}` and a
/// unit right singular vector attaining it. Wide matrices have a kernel, so
/// their value is `0` with a kernel vector as witness.
pub fn smallest_singular(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return (0.0, DVector::zeros(0));
    }
    if rows == 0 {
        let mut e = DVector::zeros(cols);
        e[0] = 1.0;
        return (0.0, e);
    }
    if let Some(j) = (0..cols).find(|&j| m.column(j).iter().all(|v| *v == 0.0)) {
        let mut e = DVector::zeros(cols);
        e[j] = 1.0;
        return (0.0, e);
    }
    let c = m.select_rows(&nonzero_rows(m));
    if c.nrows() < cols {
        if let Some(svd) = c.clone().try_svd(false, true, f64::EPSILON, SVD_MAX_ITER) {
            return (0.0, kernel_vector(&svd.v_t.expect("right singular vectors requested"), cols));
        }
    } else if let Some(svd) = c.clone().try_svd(false, true, f64::EPSILON, SVD_MAX_ITER) {
        let v_t = svd.v_t.expect("right singular vectors requested");
        let (idx, &sigma) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty spectrum");
        return (sigma, v_t.row(idx).transpose());
    }
    let eig = (c.transpose() * &c).symmetric_eigen();
    let (idx, &lambda) =
        eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty spectrum");
    (lambda.max(0.0).sqrt(), eig.eigenvectors.column(idx).into_owned())
}

// Unit vector orthogonal to the rows of `v_t`, from the coordinate direction
// with the largest residual.
fn kernel_vector(v_t: &DMatrix<f64>, cols: usize) -> DVector<f64> {
    let mut best = DVector::zeros(cols);
    let mut best_norm = -1.0;
    for j in 0..cols {
        let mut e = DVector::zeros(cols);
        e[j] = 1.0;
        let coeffs = v_t * &e;
        let mut r = e - v_t.transpose() * coeffs;
        // second pass of Gram-Schmidt for accuracy
        let c2 = v_t * &r;
        r -= v_t.transpose() * c2;
        let n = r.norm();
        if n > best_norm {
            best_norm = n;
            best = r;
        }
    }
    best / best_norm
}

/// Solves `G Z = R` for symmetric positive definite `G` by Cholesky with one
/// step of iterative refinement. Returns `None` when `G` is not numerically SPD.
pub fn spd_solve(g: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = g.clone().cholesky()?;
    let mut z = chol.solve(rhs);
    let residual = rhs - g * &z;
    z += chol.solve(&residual);
    Some(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_spectrum() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        // closed form: sigma^2 = (30 ± sqrt(30^2 - 4·det^2))/2 with det = -2
        let big = ((30.0 + (900.0f64 - 16.0).sqrt()) / 2.0).sqrt();
        assert!((sigma_max(&m) - big).abs() < 1e-12);
        assert!((sigma_max(&m) - 5.4649857042).abs() < 1e-9);
        let (small, v) = smallest_singular(&m);
        assert!(((m * &v).norm() - small).abs() < 1e-12);
        assert!((small * big - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wide_matrix_has_kernel() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let (s, v) = smallest_singular(&m);
        assert_eq!(s, 0.0);
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!((m * v).norm() < 1e-12);
    }

    #[test]
    fn capacity_guard() {
        assert!(check_capacity(3000, 10).is_ok());
        assert!(matches!(check_capacity(3001, 1), Err(Error::Capacity { dim: 3001, .. })));
    }
}
